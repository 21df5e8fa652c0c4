//! Multi-block Bregman kernels and their block distances.
//!
//! A kernel `h` on the product space is convex and 1-coercive in each block
//! when the other blocks are held fixed. Each block then induces a Bregman
//! distance
//!
//! ```text
//! D(x + U_i (z - x_i), x) = h_x^i(z) - h_x^i(x_i) - <grad_i h(x), z - x_i>
//! ```
//!
//! where `h_x^i(z)` is `h` with block `i` replaced by `z`. Sum- and
//! product-separable kernels additionally admit a mirror step: the block
//! subproblem reduces to a proximal map of the single-block factor taken at
//! `grad h_i* (grad h_i(x_i) - mu * grad_i f(x))`.

use crate::block::BlockPoint;
use crate::cubic::cubic_positive_root;
use crate::error::{Error, Result};
use crate::vecops::{fmax, lit, norm_sq};
use crate::Real;

/// Structural form of a kernel, deciding which block-update path applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separability {
    /// `h(x) = h_1(x_1) + ... + h_N(x_N)`.
    SumSeparable,
    /// `h(x) = h_1(x_1) * ... * h_N(x_N)`, every factor positive.
    ProductSeparable,
    /// No separable structure; only closed-form block updates can be used.
    General,
}

/// A single-block kernel `h_i` with an analytic conjugate gradient map.
///
/// No generic numerical inversion of `grad h_i` is provided: every concrete
/// kernel ships its own closed form.
pub trait SingleBlockKernel<T: Real>: Send + Sync {
    fn value(&self, z: &[T]) -> T;

    fn gradient(&self, z: &[T]) -> Vec<T>;

    /// `grad h_i*`: maps `w` to the unique `z` with `grad h_i(z) = w`.
    fn conjugate_gradient(&self, w: &[T]) -> Vec<T>;

    /// `argmin_{z >= 0} h_i(z) - <grad h_i(y), z>`: the Bregman projection of
    /// `y` onto the nonnegative orthant.
    fn nonnegative_projection(&self, y: &[T]) -> Vec<T>;

    /// Strong-convexity modulus of `h_i`, or zero when none is declared.
    fn strong_convexity(&self) -> T {
        T::zero()
    }

    /// Greatest constant known to satisfy `h_i >= bound` everywhere. Product
    /// kernels require this to be positive.
    fn positive_lower_bound(&self) -> T {
        T::zero()
    }
}

/// `h_i(z) = (scale/2) ||z||^2 + offset`.
#[derive(Debug, Clone)]
pub struct EnergyPart<T> {
    scale: T,
    offset: T,
}

impl<T: Real> EnergyPart<T> {
    pub fn new(scale: T, offset: T) -> Self {
        assert!(scale > T::zero(), "energy scale must be positive");
        Self { scale, offset }
    }

    pub fn unit() -> Self {
        Self {
            scale: T::one(),
            offset: T::zero(),
        }
    }
}

impl<T: Real> SingleBlockKernel<T> for EnergyPart<T> {
    fn value(&self, z: &[T]) -> T {
        self.scale * (lit::<T>(0.5) * norm_sq(z)) + self.offset
    }

    fn gradient(&self, z: &[T]) -> Vec<T> {
        z.iter().map(|&v| self.scale * v).collect()
    }

    fn conjugate_gradient(&self, w: &[T]) -> Vec<T> {
        w.iter().map(|&v| v / self.scale).collect()
    }

    fn nonnegative_projection(&self, y: &[T]) -> Vec<T> {
        y.iter().map(|&v| fmax(v, T::zero())).collect()
    }

    fn strong_convexity(&self) -> T {
        self.scale
    }

    fn positive_lower_bound(&self) -> T {
        self.offset
    }
}

/// `h_i(z) = (quartic/4) ||z||^4 + (quadratic/2) ||z||^2 + offset`.
///
/// The gradient map `z -> (quartic ||z||^2 + quadratic) z` is inverted through
/// the positive root of `t^3 - quadratic * t^2 - quartic * ||w||^2 = 0`.
#[derive(Debug, Clone)]
pub struct QuarticPart<T> {
    quartic: T,
    quadratic: T,
    offset: T,
}

impl<T: Real> QuarticPart<T> {
    pub fn new(quartic: T, quadratic: T, offset: T) -> Self {
        assert!(quartic > T::zero(), "quartic coefficient must be positive");
        assert!(
            quadratic > T::zero(),
            "quadratic coefficient must be positive"
        );
        Self {
            quartic,
            quadratic,
            offset,
        }
    }

    fn gradient_scale(&self, z: &[T]) -> T {
        self.quartic * norm_sq(z) + self.quadratic
    }
}

impl<T: Real> SingleBlockKernel<T> for QuarticPart<T> {
    fn value(&self, z: &[T]) -> T {
        let ns = norm_sq(z);
        self.quartic * (lit::<T>(0.25) * ns * ns)
            + self.quadratic * (lit::<T>(0.5) * ns)
            + self.offset
    }

    fn gradient(&self, z: &[T]) -> Vec<T> {
        let s = self.gradient_scale(z);
        z.iter().map(|&v| s * v).collect()
    }

    fn conjugate_gradient(&self, w: &[T]) -> Vec<T> {
        let c = self.quartic * norm_sq(w);
        let t = cubic_positive_root(self.quadratic, c)
            .expect("positive cubic root exists for positive coefficients");
        w.iter().map(|&v| v / t).collect()
    }

    fn nonnegative_projection(&self, y: &[T]) -> Vec<T> {
        let s = self.gradient_scale(y);
        let p: Vec<T> = y.iter().map(|&v| fmax(s * v, T::zero())).collect();
        let c = self.quartic * norm_sq(&p);
        let t = cubic_positive_root(self.quadratic, c)
            .expect("positive cubic root exists for positive coefficients");
        p.iter().map(|&v| v / t).collect()
    }

    fn strong_convexity(&self) -> T {
        self.quadratic
    }

    fn positive_lower_bound(&self) -> T {
        self.offset
    }
}

/// A multi-block kernel: convex and 1-coercive in each block separately.
pub trait Kernel<T: Real>: Send + Sync {
    fn num_blocks(&self) -> usize;

    /// `h(x)`; `+inf` outside the domain.
    fn value(&self, x: &BlockPoint<T>) -> T;

    /// `grad_i h(x)`.
    fn block_gradient(&self, x: &BlockPoint<T>, i: usize) -> Vec<T>;

    fn separability(&self) -> Separability;

    /// Single-block summand/factor for separable kernels.
    fn part(&self, i: usize) -> Option<&dyn SingleBlockKernel<T>>;

    /// Declared strong-convexity modulus of `h` restricted to block `i`
    /// (zero when unknown).
    fn block_strong_convexity(&self, _i: usize) -> T {
        T::zero()
    }

    /// `eta_x^i`: the factor multiplying part `i` in a product kernel (the
    /// product of the other parts' values); 1 for sum-separable kernels.
    fn block_scale(&self, x: &BlockPoint<T>, i: usize) -> Result<T>;
}

/// `h(x) = 0.5 ||x||^2`. With this kernel the solver reduces to classical
/// PALM: mirror step and proximal map become the Euclidean ones.
pub struct EnergyKernel<T> {
    parts: Vec<EnergyPart<T>>,
}

impl<T: Real> EnergyKernel<T> {
    pub fn new(num_blocks: usize) -> Self {
        Self {
            parts: (0..num_blocks).map(|_| EnergyPart::unit()).collect(),
        }
    }
}

impl<T: Real> Kernel<T> for EnergyKernel<T> {
    fn num_blocks(&self) -> usize {
        self.parts.len()
    }

    fn value(&self, x: &BlockPoint<T>) -> T {
        x.blocks()
            .iter()
            .fold(T::zero(), |acc, b| acc + lit::<T>(0.5) * norm_sq(b))
    }

    fn block_gradient(&self, x: &BlockPoint<T>, i: usize) -> Vec<T> {
        x.block(i).to_vec()
    }

    fn separability(&self) -> Separability {
        Separability::SumSeparable
    }

    fn part(&self, i: usize) -> Option<&dyn SingleBlockKernel<T>> {
        self.parts.get(i).map(|p| p as &dyn SingleBlockKernel<T>)
    }

    fn block_strong_convexity(&self, _i: usize) -> T {
        T::one()
    }

    fn block_scale(&self, _x: &BlockPoint<T>, _i: usize) -> Result<T> {
        Ok(T::one())
    }
}

/// `h(x) = h_1(x_1) + ... + h_N(x_N)`.
pub struct SumSeparableKernel<T: Real> {
    parts: Vec<Box<dyn SingleBlockKernel<T>>>,
}

impl<T: Real> SumSeparableKernel<T> {
    pub fn new(parts: Vec<Box<dyn SingleBlockKernel<T>>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Config(
                "sum-separable kernel needs at least one part".into(),
            ));
        }
        Ok(Self { parts })
    }
}

impl<T: Real> Kernel<T> for SumSeparableKernel<T> {
    fn num_blocks(&self) -> usize {
        self.parts.len()
    }

    fn value(&self, x: &BlockPoint<T>) -> T {
        self.parts
            .iter()
            .zip(x.blocks())
            .fold(T::zero(), |acc, (p, b)| acc + p.value(b))
    }

    fn block_gradient(&self, x: &BlockPoint<T>, i: usize) -> Vec<T> {
        self.parts[i].gradient(x.block(i))
    }

    fn separability(&self) -> Separability {
        Separability::SumSeparable
    }

    fn part(&self, i: usize) -> Option<&dyn SingleBlockKernel<T>> {
        self.parts.get(i).map(|p| p.as_ref())
    }

    fn block_strong_convexity(&self, i: usize) -> T {
        self.parts[i].strong_convexity()
    }

    fn block_scale(&self, _x: &BlockPoint<T>, _i: usize) -> Result<T> {
        Ok(T::one())
    }
}

/// `h(x) = h_1(x_1) * ... * h_N(x_N)` with every factor bounded below by a
/// positive constant on its domain.
pub struct ProductSeparableKernel<T: Real> {
    parts: Vec<Box<dyn SingleBlockKernel<T>>>,
}

impl<T: Real> ProductSeparableKernel<T> {
    pub fn new(parts: Vec<Box<dyn SingleBlockKernel<T>>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Config(
                "product-separable kernel needs at least one part".into(),
            ));
        }
        for (i, p) in parts.iter().enumerate() {
            if p.positive_lower_bound() <= T::zero() {
                return Err(Error::Config(format!(
                    "product-separable kernel part {i} must declare a positive lower bound"
                )));
            }
        }
        Ok(Self { parts })
    }
}

impl<T: Real> Kernel<T> for ProductSeparableKernel<T> {
    fn num_blocks(&self) -> usize {
        self.parts.len()
    }

    fn value(&self, x: &BlockPoint<T>) -> T {
        self.parts
            .iter()
            .zip(x.blocks())
            .fold(T::one(), |acc, (p, b)| acc * p.value(b))
    }

    fn block_gradient(&self, x: &BlockPoint<T>, i: usize) -> Vec<T> {
        let mut eta = T::one();
        for (j, p) in self.parts.iter().enumerate() {
            if j != i {
                eta *= p.value(x.block(j));
            }
        }
        self.parts[i]
            .gradient(x.block(i))
            .into_iter()
            .map(|v| eta * v)
            .collect()
    }

    fn separability(&self) -> Separability {
        Separability::ProductSeparable
    }

    fn part(&self, i: usize) -> Option<&dyn SingleBlockKernel<T>> {
        self.parts.get(i).map(|p| p.as_ref())
    }

    fn block_strong_convexity(&self, i: usize) -> T {
        let mut bound = self.parts[i].strong_convexity();
        for (j, p) in self.parts.iter().enumerate() {
            if j != i {
                bound *= p.positive_lower_bound();
            }
        }
        bound
    }

    fn block_scale(&self, x: &BlockPoint<T>, i: usize) -> Result<T> {
        let mut eta = T::one();
        for (j, p) in self.parts.iter().enumerate() {
            if j != i {
                eta *= p.value(x.block(j));
            }
        }
        if !eta.is_finite() {
            return Err(Error::Domain(format!("eta for block {i} is not finite")));
        }
        if eta <= T::zero() {
            return Err(Error::Inconsistency(format!(
                "eta for block {i} is nonpositive, violating the product-kernel invariant"
            )));
        }
        Ok(eta)
    }
}

/// Bregman distance of `h` restricted to block `i`:
/// `h_x^i(z) - h_x^i(x_i) - <grad_i h(x), z - x_i>`.
///
/// Nonnegative for multi-block convex kernels (up to roundoff) and exactly
/// zero when `z` equals block `i` of `x`.
pub fn block_bregman_distance<T: Real>(
    h: &dyn Kernel<T>,
    x: &BlockPoint<T>,
    i: usize,
    z: &[T],
) -> Result<T> {
    let ni = x.structure().block_size(i);
    if z.len() != ni {
        return Err(Error::Config(format!(
            "block {i} has size {ni}, candidate has length {}",
            z.len()
        )));
    }
    let hx = h.value(x);
    if !hx.is_finite() {
        return Err(Error::Domain("base point lies outside dom h".into()));
    }
    let shifted = x.with_block(i, z.to_vec());
    let hz = h.value(&shifted);
    if hz == T::infinity() {
        return Err(Error::Domain("shifted point lies outside dom h".into()));
    }
    let grad = h.block_gradient(x, i);
    let xi = x.block(i);
    let inner = grad
        .iter()
        .zip(z.iter().zip(xi))
        .fold(T::zero(), |acc, (&g, (&zj, &xj))| acc + g * (zj - xj));
    let d = hz - hx - inner;
    if !d.is_finite() {
        return Err(Error::Numeric("Bregman distance is not finite".into()));
    }
    Ok(d)
}

/// The point fed to the block proximal map for separable kernels:
/// `grad h_i*(grad h_i(x_i) - mu * grad_i)` with `mu = step` for sum-separable
/// kernels and `mu = step / eta_x^i` for product-separable ones.
pub fn mirror_block_step<T: Real>(
    h: &dyn Kernel<T>,
    x: &BlockPoint<T>,
    i: usize,
    grad_i: &[T],
    step: T,
) -> Result<Vec<T>> {
    mirror_step_scaled(h, x, i, grad_i, step).map(|(p, _)| p)
}

/// Mirror step plus the effective prox step `mu` it was taken with.
pub(crate) fn mirror_step_scaled<T: Real>(
    h: &dyn Kernel<T>,
    x: &BlockPoint<T>,
    i: usize,
    grad_i: &[T],
    step: T,
) -> Result<(Vec<T>, T)> {
    if !(step > T::zero()) {
        return Err(Error::Config("mirror step size must be positive".into()));
    }
    let mu = match h.separability() {
        Separability::SumSeparable => step,
        Separability::ProductSeparable => step / h.block_scale(x, i)?,
        Separability::General => {
            return Err(Error::Capability(
                "mirror step requires a sum- or product-separable kernel".into(),
            ))
        }
    };
    let part = h.part(i).ok_or_else(|| {
        Error::Capability(format!("kernel exposes no single-block part for block {i}"))
    })?;
    let gx = part.gradient(x.block(i));
    let w: Vec<T> = gx.iter().zip(grad_i).map(|(&g, &d)| g - mu * d).collect();
    let out = part.conjugate_gradient(&w);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("mirror point is not finite".into()));
    }
    Ok((out, mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::BlockStructure;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SLACK: f64 = 1e-12;

    fn onmf_kernel() -> ProductSeparableKernel<f64> {
        ProductSeparableKernel::new(vec![
            Box::new(EnergyPart::new(1.0, 1.0)),
            Box::new(QuarticPart::new(1.0, 1.0, 1.0)),
        ])
        .unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, sizes: &[usize], scale: f64) -> BlockPoint<f64> {
        let structure = BlockStructure::new(sizes.to_vec()).unwrap();
        let blocks = sizes
            .iter()
            .map(|&s| (0..s).map(|_| scale * (rng.gen::<f64>() - 0.25)).collect())
            .collect();
        BlockPoint::new(structure, blocks).unwrap()
    }

    /// Direct evaluation of the full-space Bregman formula.
    fn direct_bregman(h: &dyn Kernel<f64>, x: &BlockPoint<f64>, i: usize, z: &[f64]) -> f64 {
        let y = x.with_block(i, z.to_vec());
        let mut inner = 0.0;
        for j in 0..x.num_blocks() {
            let g = h.block_gradient(x, j);
            for (gj, (yj, xj)) in g.iter().zip(y.block(j).iter().zip(x.block(j))) {
                inner += gj * (yj - xj);
            }
        }
        h.value(&y) - h.value(x) - inner
    }

    #[test]
    fn energy_bregman_identity_and_shift() {
        let h = EnergyKernel::<f64>::new(2);
        let s = BlockStructure::new(vec![2, 2]).unwrap();
        let x = BlockPoint::new(s, vec![vec![1.0, 2.0], vec![0.5, -0.5]]).unwrap();
        assert_eq!(block_bregman_distance(&h, &x, 0, &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(block_bregman_distance(&h, &x, 0, &[3.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn product_kernel_matches_direct_formula() {
        let h = onmf_kernel();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = random_point(&mut rng, &[4, 4], 2.0);
            let z: Vec<f64> = (0..4).map(|_| 2.0 * (rng.gen::<f64>() - 0.25)).collect();
            for i in 0..2 {
                let got = block_bregman_distance(&h, &x, i, &z).unwrap();
                let want = direct_bregman(&h, &x, i, &z);
                assert!((got - want).abs() <= 1e-10, "i={i} got={got} want={want}");
            }
        }
    }

    #[test]
    fn bregman_nonnegative_on_samples() {
        let energy = EnergyKernel::<f64>::new(2);
        let product = onmf_kernel();
        let sum = SumSeparableKernel::new(vec![
            Box::new(EnergyPart::new(2.0, 0.0)) as Box<dyn SingleBlockKernel<f64>>,
            Box::new(QuarticPart::new(0.5, 1.5, 0.0)),
        ])
        .unwrap();
        let kernels: [&dyn Kernel<f64>; 3] = [&energy, &product, &sum];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for h in kernels {
            for _ in 0..200 {
                let x = random_point(&mut rng, &[3, 5], 3.0);
                let i = rng.gen_range(0..2usize);
                let n = x.structure().block_size(i);
                let z: Vec<f64> = (0..n).map(|_| 3.0 * (rng.gen::<f64>() - 0.25)).collect();
                let d = block_bregman_distance(h, &x, i, &z).unwrap();
                assert!(d >= -SLACK, "negative Bregman distance {d}");
            }
        }
    }

    #[test]
    fn sum_kernel_reduces_to_part_distance() {
        let part0 = EnergyPart::new(2.0, 0.0);
        let part1 = QuarticPart::new(0.5, 1.5, 0.0);
        let sum = SumSeparableKernel::new(vec![
            Box::new(part0.clone()) as Box<dyn SingleBlockKernel<f64>>,
            Box::new(part1.clone()),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_point(&mut rng, &[3, 3], 2.0);
            let z: Vec<f64> = (0..3).map(|_| 2.0 * (rng.gen::<f64>() - 0.25)).collect();
            for (i, part) in [(0, &part0 as &dyn SingleBlockKernel<f64>), (1, &part1)] {
                let got = block_bregman_distance(&sum, &x, i, &z).unwrap();
                let xi = x.block(i);
                let inner: f64 = part
                    .gradient(xi)
                    .iter()
                    .zip(z.iter().zip(xi))
                    .map(|(g, (zj, xj))| g * (zj - xj))
                    .sum();
                let want = part.value(&z) - part.value(xi) - inner;
                assert!((got - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn product_gradient_is_eta_times_part_gradient() {
        let h = onmf_kernel();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = random_point(&mut rng, &[3, 4], 1.5);
            for i in 0..2 {
                let eta = h.block_scale(&x, i).unwrap();
                assert!(eta > 0.0);
                let part_grad = h.part(i).unwrap().gradient(x.block(i));
                let grad = h.block_gradient(&x, i);
                for (g, pg) in grad.iter().zip(&part_grad) {
                    assert!((g - eta * pg).abs() <= 1e-12 * (1.0 + g.abs()));
                }
            }
        }
    }

    #[test]
    fn strong_convexity_lower_bound_holds() {
        let h = onmf_kernel();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = random_point(&mut rng, &[3, 4], 1.0);
            let i = rng.gen_range(0..2usize);
            let sigma = h.block_strong_convexity(i);
            assert!(sigma > 0.0);
            let n = x.structure().block_size(i);
            let z: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let d = block_bregman_distance(&h, &x, i, &z).unwrap();
            let dist: f64 = z
                .iter()
                .zip(x.block(i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!(
                d >= 0.5 * sigma * dist - SLACK,
                "d={d} bound={}",
                0.5 * sigma * dist
            );
        }
    }

    #[test]
    fn energy_mirror_step_is_gradient_step() {
        let h = EnergyKernel::<f64>::new(1);
        let s = BlockStructure::new(vec![2]).unwrap();
        let x = BlockPoint::new(s, vec![vec![1.0, 0.0]]).unwrap();
        let out = mirror_block_step(&h, &x, 0, &[2.0, 0.0], 0.5).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn sum_of_unit_energies_matches_energy_kernel() {
        let energy = EnergyKernel::<f64>::new(2);
        let sum = SumSeparableKernel::new(vec![
            Box::new(EnergyPart::unit()) as Box<dyn SingleBlockKernel<f64>>,
            Box::new(EnergyPart::unit()),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let x = random_point(&mut rng, &[3, 2], 2.0);
            let i = rng.gen_range(0..2usize);
            let n = x.structure().block_size(i);
            let g: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let step = 0.1 + rng.gen::<f64>();
            let a = mirror_block_step(&energy, &x, i, &g, step).unwrap();
            let b = mirror_block_step(&sum, &x, i, &g, step).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn product_mirror_fixed_point_at_zero_gradient() {
        let h = onmf_kernel();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_point(&mut rng, &[3, 4], 1.0);
        for i in 0..2 {
            let n = x.structure().block_size(i);
            let out = mirror_block_step(&h, &x, i, &vec![0.0; n], 0.3).unwrap();
            for (o, xi) in out.iter().zip(x.block(i)) {
                assert!((o - xi).abs() <= 1e-10, "fixed point violated: {o} vs {xi}");
            }
        }
    }

    struct OpaqueKernel;

    impl Kernel<f64> for OpaqueKernel {
        fn num_blocks(&self) -> usize {
            1
        }
        fn value(&self, x: &BlockPoint<f64>) -> f64 {
            norm_sq(x.block(0))
        }
        fn block_gradient(&self, x: &BlockPoint<f64>, _i: usize) -> Vec<f64> {
            x.block(0).iter().map(|v| 2.0 * v).collect()
        }
        fn separability(&self) -> Separability {
            Separability::General
        }
        fn part(&self, _i: usize) -> Option<&dyn SingleBlockKernel<f64>> {
            None
        }
        fn block_scale(&self, _x: &BlockPoint<f64>, _i: usize) -> Result<f64> {
            Ok(1.0)
        }
    }

    /// Misdeclares its lower bound so that eta can cross zero.
    struct LyingPart;

    impl SingleBlockKernel<f64> for LyingPart {
        fn value(&self, z: &[f64]) -> f64 {
            z[0]
        }
        fn gradient(&self, z: &[f64]) -> Vec<f64> {
            vec![1.0; z.len()]
        }
        fn conjugate_gradient(&self, w: &[f64]) -> Vec<f64> {
            w.to_vec()
        }
        fn nonnegative_projection(&self, y: &[f64]) -> Vec<f64> {
            y.to_vec()
        }
        fn positive_lower_bound(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn mirror_step_error_paths() {
        let h = OpaqueKernel;
        let s = BlockStructure::new(vec![2]).unwrap();
        let x = BlockPoint::new(s, vec![vec![1.0, 1.0]]).unwrap();
        match mirror_block_step(&h, &x, 0, &[1.0, 1.0], 0.5) {
            Err(Error::Capability(_)) => {}
            other => panic!("expected capability error, got {other:?}"),
        }

        let lying = ProductSeparableKernel::new(vec![
            Box::new(LyingPart) as Box<dyn SingleBlockKernel<f64>>,
            Box::new(LyingPart),
        ])
        .unwrap();
        let s = BlockStructure::new(vec![1, 1]).unwrap();
        let x = BlockPoint::new(s, vec![vec![1.0], vec![-2.0]]).unwrap();
        match mirror_block_step(&lying, &x, 0, &[0.0], 0.5) {
            Err(Error::Inconsistency(_)) => {}
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn product_kernel_requires_positive_lower_bounds() {
        let r = ProductSeparableKernel::new(vec![
            Box::new(EnergyPart::new(1.0, 0.0)) as Box<dyn SingleBlockKernel<f64>>,
            Box::new(QuarticPart::new(1.0, 1.0, 1.0)),
        ]);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
