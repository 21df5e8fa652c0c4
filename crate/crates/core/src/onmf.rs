//! Penalized orthogonal nonnegative matrix factorization.
//!
//! Factorizes a nonnegative `m x n` matrix `X` as `U V` with `U >= 0`,
//! `V >= 0`, driving `V V^T` toward the identity through the penalty
//!
//! ```text
//! f(U, V) = 0.5 ||X - U V||_F^2 + (lambda/2) ||I_r - V V^T||_F^2
//! ```
//!
//! under the product kernel `h(U, V) = h1(U) h2(V)` with
//! `h1(U) = (beta1/2) ||U||^2 + 1` and
//! `h2(V) = (alpha2/4) ||V||^4 + (beta2/2) ||V||^2 + 1`. Both block
//! subproblems have closed forms: the `U` block is a scaled projected
//! gradient step, the `V` block rescales a projected point by the positive
//! root of `t^3 - beta2 t^2 - alpha2 ||P||_F^2 = 0`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::{BlockPoint, BlockStructure};
use crate::cubic::cubic_positive_root;
use crate::error::{Error, Result};
use crate::kernel::{
    EnergyKernel, EnergyPart, ProductSeparableKernel, QuarticPart, SingleBlockKernel,
};
use crate::problem::{
    ClosedFormUpdate, CompositeProblem, DomainSampler, NonnegativeOrthant, SmoothTerm,
};
use crate::solver::{SolverConfig, StepMode};
use crate::vecops::{abs, fmax, lit, sqrt};
use crate::Real;

/// NNDSVD leaves exact zeros; they are replaced by this constant so the
/// penalty gradients are informative from the first iteration.
pub const NNDSVD_ZERO_FILL: f64 = 1e-8;

/// Problem data: matrix, target rank, penalty, and kernel parameters.
#[derive(Debug, Clone)]
pub struct OnmfProblem<T: Real> {
    x: DMatrix<T>,
    rank: usize,
    lambda: T,
    alpha2: T,
    beta1: T,
    beta2: T,
}

/// A factor pair `U` (`m x r`) and `V` (`r x n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Factors<T: Real> {
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
}

/// Fit quality of a factor pair.
#[derive(Debug, Clone, Copy)]
pub struct OnmfMetrics<T> {
    /// `||X - U V||_F / ||X||_F`.
    pub fidelity_error: T,
    /// `||I_r - V V^T||_F`.
    pub orthogonality_error: T,
    pub objective: T,
}

/// Smallest admissible relative-smoothness constants:
/// `L1 = 2 / (beta1 beta2)` and
/// `L2 = 6 max(lambda/alpha2, 2 lambda/(beta1 beta2), lambda/beta2)`.
///
/// Defined for `lambda = 0` as well (giving `L2 = 0`); solvers reject a zero
/// constant before forming a step size.
pub fn smoothness_constants<T: Real>(lambda: T, alpha2: T, beta1: T, beta2: T) -> (T, T) {
    let two = lit::<T>(2.0);
    let l1 = two / (beta1 * beta2);
    let candidates = [
        lambda / alpha2,
        two * lambda / (beta1 * beta2),
        lambda / beta2,
    ];
    let l2 = lit::<T>(6.0) * candidates.into_iter().fold(T::zero(), fmax);
    (l1, l2)
}

impl<T: Real> OnmfProblem<T> {
    /// Builds a problem with the default kernel parameters
    /// `alpha2 = beta1 = beta2 = 1`.
    pub fn new(x: DMatrix<T>, rank: usize, lambda: T) -> Result<Self> {
        Self::with_params(x, rank, lambda, T::one(), T::one(), T::one())
    }

    pub fn with_params(
        x: DMatrix<T>,
        rank: usize,
        lambda: T,
        alpha2: T,
        beta1: T,
        beta2: T,
    ) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::Config(
                "data matrix must be entrywise nonnegative and finite".into(),
            ));
        }
        let (m, n) = (x.nrows(), x.ncols());
        if rank == 0 || rank > m.min(n) {
            return Err(Error::Config(format!(
                "rank must lie in 1..=min(m, n) = {}, got {rank}",
                m.min(n)
            )));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::Config(
                "penalty lambda must be positive; lambda = 0 gives L2 = 0 and no valid step size"
                    .into(),
            ));
        }
        for (name, v) in [("alpha2", alpha2), ("beta1", beta1), ("beta2", beta2)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "kernel parameter {name} must be positive"
                )));
            }
        }
        Ok(Self {
            x,
            rank,
            lambda,
            alpha2,
            beta1,
            beta2,
        })
    }

    pub fn data(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn params(&self) -> (T, T, T) {
        (self.alpha2, self.beta1, self.beta2)
    }

    pub fn smoothness_constants(&self) -> (T, T) {
        smoothness_constants(self.lambda, self.alpha2, self.beta1, self.beta2)
    }

    /// Same data and kernel parameters under a different penalty.
    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::with_params(
            self.x.clone(),
            self.rank,
            lambda,
            self.alpha2,
            self.beta1,
            self.beta2,
        )
    }

    /// Block structure of the flattened factors: `(m*r, r*n)`.
    pub fn block_structure(&self) -> BlockStructure {
        BlockStructure::new(vec![self.nrows() * self.rank, self.rank * self.ncols()])
            .expect("onmf dimensions are positive")
    }

    /// Flattens factors into a block point (column-major within each block).
    pub fn point_from_factors(&self, fac: &Factors<T>) -> Result<BlockPoint<T>> {
        self.check_shapes(fac)?;
        BlockPoint::new(
            self.block_structure(),
            vec![fac.u.as_slice().to_vec(), fac.v.as_slice().to_vec()],
        )
    }

    pub fn factors_from_point(&self, x: &BlockPoint<T>) -> Factors<T> {
        let (m, n, r) = (self.nrows(), self.ncols(), self.rank);
        Factors {
            u: DMatrix::from_column_slice(m, r, x.block(0)),
            v: DMatrix::from_column_slice(r, n, x.block(1)),
        }
    }

    fn check_shapes(&self, fac: &Factors<T>) -> Result<()> {
        if fac.u.nrows() != self.nrows() || fac.u.ncols() != self.rank {
            return Err(Error::Config(format!(
                "U must be {}x{}, got {}x{}",
                self.nrows(),
                self.rank,
                fac.u.nrows(),
                fac.u.ncols()
            )));
        }
        if fac.v.nrows() != self.rank || fac.v.ncols() != self.ncols() {
            return Err(Error::Config(format!(
                "V must be {}x{}, got {}x{}",
                self.rank,
                self.ncols(),
                fac.v.nrows(),
                fac.v.ncols()
            )));
        }
        Ok(())
    }
}

/// `0.5 ||X - U V||_F^2 + (lambda/2) ||I_r - V V^T||_F^2`.
pub fn onmf_value<T: Real>(p: &OnmfProblem<T>, fac: &Factors<T>) -> Result<T> {
    p.check_shapes(fac)?;
    let half = lit::<T>(0.5);
    let resid = p.x.clone() - &fac.u * &fac.v;
    let gram = &fac.v * fac.v.transpose();
    let penalty = DMatrix::identity(p.rank, p.rank) - gram;
    Ok(half * resid.norm_squared() + p.lambda * half * penalty.norm_squared())
}

/// `grad_U f = U V V^T - X V^T`.
pub fn grad_u<T: Real>(p: &OnmfProblem<T>, fac: &Factors<T>) -> Result<DMatrix<T>> {
    p.check_shapes(fac)?;
    let vvt = &fac.v * fac.v.transpose();
    Ok(&fac.u * vvt - &p.x * fac.v.transpose())
}

/// `grad_V f = U^T U V - U^T X + 2 lambda (V V^T V - V)`.
pub fn grad_v<T: Real>(p: &OnmfProblem<T>, fac: &Factors<T>) -> Result<DMatrix<T>> {
    p.check_shapes(fac)?;
    let utu = fac.u.transpose() * &fac.u;
    let vvt = &fac.v * fac.v.transpose();
    let penalty = vvt * &fac.v - &fac.v;
    Ok(utu * &fac.v - fac.u.transpose() * &p.x + penalty * (lit::<T>(2.0) * p.lambda))
}

/// Closed-form `U` block update:
/// `max(U - mu1 grad_U, 0)` with `mu1 = gamma1 / (beta1 * h2(V))`.
pub fn update_u<T: Real>(p: &OnmfProblem<T>, fac: &Factors<T>, gamma1: T) -> Result<DMatrix<T>> {
    if !(gamma1 > T::zero()) {
        return Err(Error::Config("gamma1 must be positive".into()));
    }
    let g = grad_u(p, fac)?;
    let vns = fac.v.norm_squared();
    let eta1 = p.alpha2 * (lit::<T>(0.25) * vns * vns) + p.beta2 * (lit::<T>(0.5) * vns) + T::one();
    let mu1 = gamma1 / (p.beta1 * eta1);
    Ok(fac.u.zip_map(&g, |u, gu| fmax(u - mu1 * gu, T::zero())))
}

/// Closed-form `V` block update (Gauss-Seidel order: `fac.u` is the freshly
/// updated `U`):
/// `P / t` with `P = max((alpha2 ||V||^2 + beta2) V - mu2 grad_V, 0)`,
/// `mu2 = gamma2 / h1(U)`, and `t` the positive root of
/// `t^3 - beta2 t^2 - alpha2 ||P||_F^2 = 0`.
pub fn update_v<T: Real>(p: &OnmfProblem<T>, fac: &Factors<T>, gamma2: T) -> Result<DMatrix<T>> {
    if !(gamma2 > T::zero()) {
        return Err(Error::Config("gamma2 must be positive".into()));
    }
    let g = grad_v(p, fac)?;
    let eta2 = p.beta1 * (lit::<T>(0.5) * fac.u.norm_squared()) + T::one();
    let mu2 = gamma2 / eta2;
    let scale = p.alpha2 * fac.v.norm_squared() + p.beta2;
    let projected = fac
        .v
        .zip_map(&g, |v, gv| fmax(scale * v - mu2 * gv, T::zero()));
    let t = cubic_positive_root(p.beta2, p.alpha2 * projected.norm_squared())?;
    Ok(projected.map(|e| e / t))
}

/// Nonnegative double-SVD initialization: the leading singular triplets are
/// split into positive and negative parts and the dominant side is kept.
/// Exact zeros are replaced by [`NNDSVD_ZERO_FILL`].
pub fn nndsvd_init<T: Real>(x: &DMatrix<T>, rank: usize) -> Result<Factors<T>> {
    let (m, n) = (x.nrows(), x.ncols());
    if rank == 0 || rank > m.min(n) {
        return Err(Error::Config(format!(
            "rank must lie in 1..=min(m, n), got {rank}"
        )));
    }
    let triplets = leading_singular_triplets(x, rank)?;
    let mut u = DMatrix::zeros(m, rank);
    let mut v = DMatrix::zeros(rank, n);
    for (j, (sigma, uj, vj)) in triplets.iter().enumerate() {
        if !(*sigma > T::zero()) {
            continue;
        }
        if j == 0 {
            // The leading pair of a nonnegative matrix can be taken
            // nonnegative outright.
            let s = sqrt(*sigma);
            for i in 0..m {
                u[(i, 0)] = s * abs(uj[i]);
            }
            for c in 0..n {
                v[(0, c)] = s * abs(vj[c]);
            }
            continue;
        }
        let split = |vec: &[T]| {
            let pos: Vec<T> = vec.iter().map(|&e| fmax(e, T::zero())).collect();
            let neg: Vec<T> = vec.iter().map(|&e| fmax(-e, T::zero())).collect();
            let pn = sqrt(pos.iter().fold(T::zero(), |a, &b| a + b * b));
            let nn = sqrt(neg.iter().fold(T::zero(), |a, &b| a + b * b));
            (pos, pn, neg, nn)
        };
        let (up, upn, un, unn) = split(uj);
        let (vp, vpn, vn, vnn) = split(vj);
        let mp = upn * vpn;
        let mn = unn * vnn;
        let (usel, unorm, vsel, vnorm, weight) = if mp >= mn {
            (up, upn, vp, vpn, mp)
        } else {
            (un, unn, vn, vnn, mn)
        };
        if !(weight > T::zero()) {
            continue;
        }
        let s = sqrt(*sigma * weight);
        for i in 0..m {
            u[(i, j)] = s * usel[i] / unorm;
        }
        for c in 0..n {
            v[(j, c)] = s * vsel[c] / vnorm;
        }
    }
    let fill = lit::<T>(NNDSVD_ZERO_FILL);
    let fill_zeros = |e: T| if e > T::zero() { e } else { fill };
    Ok(Factors {
        u: u.map(fill_zeros),
        v: v.map(fill_zeros),
    })
}

/// `(sigma_j, u_j, v_j)` with `X u_j = sigma_j v_j`-consistent scaling.
type SingularTriplet<T> = (T, Vec<T>, Vec<T>);

/// Leading singular triplets through the eigendecomposition of the smaller
/// Gram matrix; plenty accurate for initialization purposes.
fn leading_singular_triplets<T: Real>(
    x: &DMatrix<T>,
    rank: usize,
) -> Result<Vec<SingularTriplet<T>>> {
    let (m, n) = (x.nrows(), x.ncols());
    let gram_on_rows = m <= n;
    let gram = if gram_on_rows {
        x * x.transpose()
    } else {
        x.transpose() * x
    };
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sigma_max = sqrt(fmax(eig.eigenvalues[order[0]], T::zero()));
    let cutoff = sigma_max * lit::<T>(1e-12);
    let mut out = Vec::with_capacity(rank);
    for &idx in order.iter().take(rank) {
        let sigma = sqrt(fmax(eig.eigenvalues[idx], T::zero()));
        if !(sigma > cutoff) {
            out.push((T::zero(), vec![T::zero(); m], vec![T::zero(); n]));
            continue;
        }
        let w: Vec<T> = eig.eigenvectors.column(idx).iter().copied().collect();
        if gram_on_rows {
            let uj = w;
            let mut vj = vec![T::zero(); n];
            for c in 0..n {
                let mut acc = T::zero();
                for i in 0..m {
                    acc += x[(i, c)] * uj[i];
                }
                vj[c] = acc / sigma;
            }
            out.push((sigma, uj, vj));
        } else {
            let vj = w;
            let mut uj = vec![T::zero(); m];
            for i in 0..m {
                let mut acc = T::zero();
                for c in 0..n {
                    acc += x[(i, c)] * vj[c];
                }
                uj[i] = acc / sigma;
            }
            out.push((sigma, uj, vj));
        }
    }
    Ok(out)
}

/// Uniform `[0, 1)` factors, the baseline initialization.
pub fn random_init<T: Real>(m: usize, n: usize, rank: usize, seed: u64) -> Factors<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = DMatrix::from_fn(m, rank, |_, _| lit::<T>(rng.gen::<f64>()));
    let v = DMatrix::from_fn(rank, n, |_, _| lit::<T>(rng.gen::<f64>()));
    Factors { u, v }
}

/// Synthetic instance: `U` uniform nonnegative, `V` random orthogonal
/// nonnegative (disjoint row supports, rows scaled to unit norm, so
/// `V V^T = I_r` exactly up to roundoff), `X = U V` plus
/// `noise * (||X||_F / ||R||_F) R` with `R` uniform nonnegative.
///
/// Returns the data matrix and the ground-truth factors.
pub fn synthetic_onmf<T: Real>(
    m: usize,
    n: usize,
    rank: usize,
    noise_level: f64,
    seed: u64,
) -> Result<(DMatrix<T>, Factors<T>)> {
    if m == 0 || n == 0 || rank == 0 {
        return Err(Error::Config("dimensions must be positive".into()));
    }
    if rank > n {
        return Err(Error::Config(format!(
            "rank {rank} exceeds {n} columns: disjoint row supports are impossible"
        )));
    }
    if rank > m {
        return Err(Error::Config(format!("rank {rank} exceeds {m} rows")));
    }
    if !(noise_level >= 0.0) || !noise_level.is_finite() {
        return Err(Error::Config(
            "noise level must be finite and nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = DMatrix::from_fn(m, rank, |_, _| lit::<T>(rng.gen::<f64>()));

    // One cluster per column; the first r columns pin one column to each
    // cluster so that no row of V is empty.
    let mut clusters = Vec::with_capacity(n);
    for j in 0..n {
        if j < rank {
            clusters.push(j);
        } else {
            clusters.push(rng.gen_range(0..rank));
        }
    }
    let mut v = DMatrix::zeros(rank, n);
    for (j, &c) in clusters.iter().enumerate() {
        // Uniform on (0, 1]: keeps the support exact.
        v[(c, j)] = lit::<T>(1.0 - rng.gen::<f64>());
    }
    for row in 0..rank {
        let norm = sqrt(v.row(row).iter().fold(T::zero(), |a, &b| a + b * b));
        for j in 0..n {
            v[(row, j)] /= norm;
        }
    }

    let clean = &u * &v;
    let x = if noise_level > 0.0 {
        let r_mat = DMatrix::from_fn(m, n, |_, _| lit::<T>(rng.gen::<f64>()));
        let scale = lit::<T>(noise_level) * clean.norm() / r_mat.norm();
        clean.clone() + r_mat.map(|e| e * scale)
    } else {
        clean
    };
    Ok((x, Factors { u, v }))
}

/// Relative fidelity error, orthogonality error, and objective value.
pub fn metrics<T: Real>(p: &OnmfProblem<T>, fac: &Factors<T>) -> Result<OnmfMetrics<T>> {
    p.check_shapes(fac)?;
    let xnorm = p.x.norm();
    if !(xnorm > T::zero()) {
        return Err(Error::Numeric(
            "fidelity error undefined: data matrix has zero norm".into(),
        ));
    }
    let resid = p.x.clone() - &fac.u * &fac.v;
    let gram = &fac.v * fac.v.transpose();
    let penalty = DMatrix::identity(p.rank, p.rank) - gram;
    Ok(OnmfMetrics {
        fidelity_error: resid.norm() / xnorm,
        orthogonality_error: penalty.norm(),
        objective: onmf_value(p, fac)?,
    })
}

struct OnmfSmoothTerm<T: Real>(Arc<OnmfProblem<T>>);

impl<T: Real> SmoothTerm<T> for OnmfSmoothTerm<T> {
    fn value(&self, x: &BlockPoint<T>) -> T {
        let fac = self.0.factors_from_point(x);
        onmf_value(&self.0, &fac).unwrap_or(T::nan())
    }

    fn block_gradient(&self, x: &BlockPoint<T>, i: usize) -> Vec<T> {
        let fac = self.0.factors_from_point(x);
        let g = match i {
            0 => grad_u(&self.0, &fac),
            _ => grad_v(&self.0, &fac),
        };
        g.expect("shapes fixed by construction").as_slice().to_vec()
    }

    fn constants(&self) -> Option<Vec<T>> {
        let (l1, l2) = self.0.smoothness_constants();
        Some(vec![l1, l2])
    }
}

struct UBlockUpdate<T: Real>(Arc<OnmfProblem<T>>);

impl<T: Real> ClosedFormUpdate<T> for UBlockUpdate<T> {
    fn update(&self, x: &BlockPoint<T>, step: T) -> Result<Vec<T>> {
        let fac = self.0.factors_from_point(x);
        Ok(update_u(&self.0, &fac, step)?.as_slice().to_vec())
    }
}

struct VBlockUpdate<T: Real>(Arc<OnmfProblem<T>>);

impl<T: Real> ClosedFormUpdate<T> for VBlockUpdate<T> {
    fn update(&self, x: &BlockPoint<T>, step: T) -> Result<Vec<T>> {
        // Block 0 of x already holds the U updated earlier in the cycle.
        let fac = self.0.factors_from_point(x);
        Ok(update_v(&self.0, &fac, step)?.as_slice().to_vec())
    }
}

/// Samples factor pairs with entries uniform on `[0, scale]`.
pub struct FactorBoxSampler<T> {
    m: usize,
    n: usize,
    rank: usize,
    scale: T,
}

impl<T: Real> FactorBoxSampler<T> {
    pub fn new(m: usize, n: usize, rank: usize, scale: T) -> Self {
        Self { m, n, rank, scale }
    }
}

impl<T: Real> DomainSampler<T> for FactorBoxSampler<T> {
    fn sample(&self, rng: &mut dyn RngCore) -> BlockPoint<T> {
        let structure = BlockStructure::new(vec![self.m * self.rank, self.rank * self.n]).unwrap();
        let blocks = structure
            .sizes()
            .iter()
            .map(|&s| {
                (0..s)
                    .map(|_| self.scale * lit::<T>(rng.gen::<f64>()))
                    .collect()
            })
            .collect();
        BlockPoint::new(structure, blocks).expect("sampled entries are finite")
    }
}

fn onmf_kernel<T: Real>(p: &OnmfProblem<T>) -> Result<ProductSeparableKernel<T>> {
    let (alpha2, beta1, beta2) = p.params();
    ProductSeparableKernel::new(vec![
        Box::new(EnergyPart::new(beta1, T::one())) as Box<dyn SingleBlockKernel<T>>,
        Box::new(QuarticPart::new(alpha2, beta2, T::one())),
    ])
}

/// Assembles the composite problem with the closed-form block updates
/// registered. `phi >= 0`, so a zero lower bound is declared for complexity
/// diagnostics, and a unit-box factor sampler is attached for smoothness
/// certification.
pub fn composite_problem<T: Real>(p: OnmfProblem<T>) -> Result<CompositeProblem<T>> {
    let (m, n, r) = (p.nrows(), p.ncols(), p.rank());
    let arc = Arc::new(p);
    let kernel = onmf_kernel(arc.as_ref())?;
    let problem = CompositeProblem::new(
        arc.block_structure(),
        Box::new(OnmfSmoothTerm(arc.clone())),
        vec![Box::new(NonnegativeOrthant), Box::new(NonnegativeOrthant)],
        Box::new(kernel),
    )?
    .with_closed_form(0, Box::new(UBlockUpdate(arc.clone())))
    .with_closed_form(1, Box::new(VBlockUpdate(arc)))
    .with_sampler(Box::new(FactorBoxSampler::new(m, n, r, T::one())))
    .with_lower_bound(T::zero());
    Ok(problem)
}

/// Same composite problem without the closed forms, so block updates run
/// through the generic mirror-prox path instead. The two routes must agree.
pub fn composite_problem_generic_path<T: Real>(p: OnmfProblem<T>) -> Result<CompositeProblem<T>> {
    let (m, n, r) = (p.nrows(), p.ncols(), p.rank());
    let arc = Arc::new(p);
    let kernel = onmf_kernel(arc.as_ref())?;
    let problem = CompositeProblem::new(
        arc.block_structure(),
        Box::new(OnmfSmoothTerm(arc)),
        vec![Box::new(NonnegativeOrthant), Box::new(NonnegativeOrthant)],
        Box::new(kernel),
    )?
    .with_sampler(Box::new(FactorBoxSampler::new(m, n, r, T::one())))
    .with_lower_bound(T::zero());
    Ok(problem)
}

struct ConstantsOverride<T: Real> {
    inner: OnmfSmoothTerm<T>,
    constants: Vec<T>,
}

impl<T: Real> SmoothTerm<T> for ConstantsOverride<T> {
    fn value(&self, x: &BlockPoint<T>) -> T {
        self.inner.value(x)
    }

    fn block_gradient(&self, x: &BlockPoint<T>, i: usize) -> Vec<T> {
        self.inner.block_gradient(x, i)
    }

    fn constants(&self) -> Option<Vec<T>> {
        Some(self.constants.clone())
    }
}

/// The same objective over the Euclidean (energy) kernel, with
/// caller-supplied Lipschitz constants: block updates reduce to classical
/// PALM projected gradient steps. The partial gradients are not globally
/// Lipschitz, so the constants must cover the region the iterates traverse.
pub fn palm_composite_problem<T: Real>(
    p: OnmfProblem<T>,
    constants: Vec<T>,
) -> Result<CompositeProblem<T>> {
    if constants.len() != 2 {
        return Err(Error::Config("two Lipschitz constants are required".into()));
    }
    let (m, n, r) = (p.nrows(), p.ncols(), p.rank());
    let arc = Arc::new(p);
    let problem = CompositeProblem::new(
        arc.block_structure(),
        Box::new(ConstantsOverride {
            inner: OnmfSmoothTerm(arc),
            constants,
        }),
        vec![Box::new(NonnegativeOrthant), Box::new(NonnegativeOrthant)],
        Box::new(EnergyKernel::new(2)),
    )?
    .with_sampler(Box::new(FactorBoxSampler::new(m, n, r, T::one())))
    .with_lower_bound(T::zero());
    Ok(problem)
}

/// Solver defaults from the reference parameter recipe: fixed steps one
/// relative epsilon below `1/L_i`; warm backtracking from `0.01 L_i`;
/// restarted backtracking from `0.1 L_i`, both with `nu = 2`.
pub fn solver_config<T: Real>(p: &OnmfProblem<T>, mode: StepMode) -> Result<SolverConfig<T>> {
    let (l1, l2) = p.smoothness_constants();
    match mode {
        StepMode::Fixed => SolverConfig::fixed_from_constants(&[l1, l2]),
        StepMode::AdaptiveWarm => {
            let f = lit::<T>(0.01);
            SolverConfig::adaptive(mode, vec![f * l1, f * l2])
        }
        StepMode::AdaptiveRestart => {
            let f = lit::<T>(0.1);
            SolverConfig::adaptive(mode, vec![f * l1, f * l2])
        }
    }
}
