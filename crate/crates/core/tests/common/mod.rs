//! Shared test oracles: independent minimization of the block model.

use bpalm::{BlockPoint, CompositeProblem};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bpalm::onmf::{Factors, OnmfProblem};

/// Minimizes the block model
/// `M(z) = <grad_i f(x), z - x_i> + D(x + U_i(z - x_i), x)/gamma + g_i(z)`
/// over the nonnegative orthant by projected gradient with backtracking,
/// independent of the closed-form update path. Runs until the unit-step
/// projected-gradient residual drops below `tol`.
pub fn minimize_block_model_pg(
    p: &CompositeProblem<f64>,
    x: &BlockPoint<f64>,
    i: usize,
    gamma: f64,
    tol: f64,
) -> Vec<f64> {
    let gf = p.smooth().block_gradient(x, i);
    let gh_x = p.kernel().block_gradient(x, i);
    let model_grad = |z: &[f64]| -> Vec<f64> {
        let shifted = x.with_block(i, z.to_vec());
        let gh_z = p.kernel().block_gradient(&shifted, i);
        gf.iter()
            .zip(gh_z.iter().zip(&gh_x))
            .map(|(f, (hz, hx))| f + (hz - hx) / gamma)
            .collect()
    };
    let model = |z: &[f64]| p.block_model_value(x, i, z, gamma).unwrap();
    let z0: Vec<f64> = x.block(i).iter().map(|v| v.max(0.0)).collect();

    // Probe the model-gradient Lipschitz constant on the starting scale.
    let mut rng = ChaCha8Rng::seed_from_u64(12345);
    let scale: f64 = 1.0 + z0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut l_est: f64 = 1e-12;
    for _ in 0..20 {
        let a: Vec<f64> = z0
            .iter()
            .map(|v| (v + scale * (rng.gen::<f64>() - 0.3)).max(0.0))
            .collect();
        let b: Vec<f64> = z0
            .iter()
            .map(|v| (v + scale * (rng.gen::<f64>() - 0.3)).max(0.0))
            .collect();
        let dist: f64 = a
            .iter()
            .zip(&b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        if dist < 1e-12 {
            continue;
        }
        let ga = model_grad(&a);
        let gb = model_grad(&b);
        let dg: f64 = ga
            .iter()
            .zip(&gb)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        l_est = l_est.max(dg / dist);
    }

    let mut s = 0.25 / l_est;
    let mut z = z0;
    let mut resid = f64::INFINITY;
    for _ in 0..2_000_000 {
        let g = model_grad(&z);
        resid = z
            .iter()
            .zip(&g)
            .map(|(zi, gi)| {
                let moved = (zi - gi).max(0.0);
                (zi - moved) * (zi - moved)
            })
            .sum::<f64>()
            .sqrt();
        if resid <= tol {
            break;
        }
        let cand: Vec<f64> = z
            .iter()
            .zip(&g)
            .map(|(zi, gi)| (zi - s * gi).max(0.0))
            .collect();
        if cand == z {
            break;
        }
        // The probe can underestimate the curvature; shrink the step for
        // good if the model value rises beyond evaluation noise.
        let m0 = model(&z);
        if model(&cand) > m0 + 1e-10 * (1.0 + m0.abs()) {
            s *= 0.5;
            assert!(s > 1e-18, "oracle step collapsed");
            continue;
        }
        z = cand;
    }
    assert!(
        resid <= 10.0 * tol,
        "oracle stalled at residual {resid}, target {tol}"
    );
    z
}

/// Random ONMF instance with uniform `[0, 1)` data and factors.
pub fn random_instance(
    seed: u64,
    m: usize,
    n: usize,
    r: usize,
    lambda: f64,
) -> (OnmfProblem<f64>, Factors<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(m, n, |_, _| rng.gen::<f64>());
    let p = OnmfProblem::new(x, r, lambda).unwrap();
    let u = DMatrix::from_fn(m, r, |_, _| rng.gen::<f64>());
    let v = DMatrix::from_fn(r, n, |_, _| rng.gen::<f64>());
    (p, Factors { u, v })
}
