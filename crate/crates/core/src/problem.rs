//! Composite objectives `phi = f + sum_i g_i` and their block updates.
//!
//! The block update replaces block `i` with a minimizer of the linearized
//! model
//!
//! ```text
//! M_i(z) = <grad_i f(x), z - x_i> + (1/step) D(x + U_i(z - x_i), x) + g_i(z)
//! ```
//!
//! either through a problem-supplied closed form or, for separable kernels,
//! through a mirror step followed by the Bregman proximal map of `g_i`.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::block::{BlockPoint, BlockStructure};
use crate::error::{Error, Result};
use crate::kernel::{block_bregman_distance, mirror_step_scaled, Kernel, SingleBlockKernel};
use crate::vecops::{abs, dot, fmax, lit, sqrt};
use crate::Real;

/// Slack for the per-update descent guarantee, absolute.
pub const DESCENT_SLACK: f64 = 1e-9;

/// Smooth term `f` with per-block gradient oracles and, when known, the
/// relative-smoothness constants `L_i`.
pub trait SmoothTerm<T: Real>: Send + Sync {
    fn value(&self, x: &BlockPoint<T>) -> T;

    fn block_gradient(&self, x: &BlockPoint<T>, i: usize) -> Vec<T>;

    /// `(L_1, ..., L_N)` making `f` relatively smooth w.r.t. the kernel, or
    /// `None` when only the adaptive solver is usable.
    fn constants(&self) -> Option<Vec<T>> {
        None
    }
}

/// Nonsmooth per-block term `g_i` with a Bregman proximal map relative to a
/// single-block kernel part.
pub trait NonsmoothTerm<T: Real>: Send + Sync {
    /// `g_i(z)`; may be `+inf`.
    fn value(&self, z: &[T]) -> T;

    /// `argmin_z { g_i(z) + (1/step) D_{h_i}(z, mirror) }`.
    fn bregman_prox(
        &self,
        part: &dyn SingleBlockKernel<T>,
        mirror: &[T],
        step: T,
    ) -> Result<Vec<T>>;
}

/// `g identically 0`: the proximal map is the identity.
pub struct ZeroTerm;

impl<T: Real> NonsmoothTerm<T> for ZeroTerm {
    fn value(&self, _z: &[T]) -> T {
        T::zero()
    }

    fn bregman_prox(
        &self,
        _part: &dyn SingleBlockKernel<T>,
        mirror: &[T],
        _step: T,
    ) -> Result<Vec<T>> {
        Ok(mirror.to_vec())
    }
}

/// Indicator of the nonnegative orthant.
pub struct NonnegativeOrthant;

impl<T: Real> NonsmoothTerm<T> for NonnegativeOrthant {
    fn value(&self, z: &[T]) -> T {
        if z.iter().all(|v| *v >= T::zero()) {
            T::zero()
        } else {
            T::infinity()
        }
    }

    fn bregman_prox(
        &self,
        part: &dyn SingleBlockKernel<T>,
        mirror: &[T],
        _step: T,
    ) -> Result<Vec<T>> {
        Ok(part.nonnegative_projection(mirror))
    }
}

/// Problem-supplied closed-form block minimizer, overriding the generic
/// mirror-prox path for one block.
pub trait ClosedFormUpdate<T: Real>: Send + Sync {
    fn update(&self, x: &BlockPoint<T>, step: T) -> Result<Vec<T>>;
}

/// Draws points from the domain of `phi`, used to spot-check the
/// relative-smoothness inequality.
pub trait DomainSampler<T: Real>: Send + Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> BlockPoint<T>;
}

/// Per-block maxima of the sampled relative-smoothness violations.
#[derive(Debug, Clone)]
pub struct SmoothnessReport<T> {
    /// Max over samples of
    /// `f(x + U_i(y_i - x_i)) - f(x) - <grad_i f(x), y_i - x_i> - L_i D`.
    pub max_violation: Vec<T>,
    /// Largest `|f|` magnitude seen while sampling, for scaling tolerances.
    pub scale: T,
    pub samples: usize,
}

impl<T: Real> SmoothnessReport<T> {
    /// True when no block exceeds `tol` (absolute).
    pub fn certified(&self, tol: T) -> bool {
        self.max_violation.iter().all(|v| *v <= tol)
    }

    pub fn worst(&self) -> T {
        self.max_violation
            .iter()
            .fold(T::neg_infinity(), |acc, v| fmax(acc, *v))
    }
}

/// The composite problem `phi(x) = f(x) + sum_i g_i(x_i)` together with its
/// kernel and optional closed-form block updates.
///
/// Immutable once built; all operations are pure.
pub struct CompositeProblem<T: Real> {
    structure: BlockStructure,
    f: Box<dyn SmoothTerm<T>>,
    g: Vec<Box<dyn NonsmoothTerm<T>>>,
    h: Box<dyn Kernel<T>>,
    closed_forms: Vec<Option<Box<dyn ClosedFormUpdate<T>>>>,
    sampler: Option<Box<dyn DomainSampler<T>>>,
    lower_bound: Option<T>,
}

impl<T: Real> CompositeProblem<T> {
    pub fn new(
        structure: BlockStructure,
        f: Box<dyn SmoothTerm<T>>,
        g: Vec<Box<dyn NonsmoothTerm<T>>>,
        h: Box<dyn Kernel<T>>,
    ) -> Result<Self> {
        let n = structure.num_blocks();
        if g.len() != n {
            return Err(Error::Config(format!(
                "expected {n} nonsmooth terms, got {}",
                g.len()
            )));
        }
        if h.num_blocks() != n {
            return Err(Error::Config(format!(
                "kernel has {} blocks, structure has {n}",
                h.num_blocks()
            )));
        }
        if let Some(ls) = f.constants() {
            if ls.len() != n {
                return Err(Error::Config(format!(
                    "expected {n} smoothness constants, got {}",
                    ls.len()
                )));
            }
            if ls.iter().any(|l| !(*l >= T::zero()) || !l.is_finite()) {
                return Err(Error::Config(
                    "smoothness constants must be finite and >= 0".into(),
                ));
            }
        }
        let closed_forms = (0..n).map(|_| None).collect();
        Ok(Self {
            structure,
            f,
            g,
            h,
            closed_forms,
            sampler: None,
            lower_bound: None,
        })
    }

    pub fn with_closed_form(mut self, i: usize, update: Box<dyn ClosedFormUpdate<T>>) -> Self {
        self.closed_forms[i] = Some(update);
        self
    }

    pub fn with_sampler(mut self, sampler: Box<dyn DomainSampler<T>>) -> Self {
        self.sampler = Some(sampler);
        self
    }

    /// Declares a lower bound on `inf phi`, enabling iteration-count
    /// diagnostics.
    pub fn with_lower_bound(mut self, bound: T) -> Self {
        self.lower_bound = Some(bound);
        self
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn num_blocks(&self) -> usize {
        self.structure.num_blocks()
    }

    pub fn kernel(&self) -> &dyn Kernel<T> {
        self.h.as_ref()
    }

    pub fn smooth(&self) -> &dyn SmoothTerm<T> {
        self.f.as_ref()
    }

    pub fn nonsmooth(&self, i: usize) -> &dyn NonsmoothTerm<T> {
        self.g[i].as_ref()
    }

    pub fn constants(&self) -> Option<Vec<T>> {
        self.f.constants()
    }

    pub fn lower_bound(&self) -> Option<T> {
        self.lower_bound
    }

    /// `phi(x) = f(x) + sum_i g_i(x_i)`; `+inf` when any `g_i` is infinite.
    pub fn phi_value(&self, x: &BlockPoint<T>) -> Result<T> {
        let gsum = self.nonsmooth_sum(x)?;
        if gsum == T::infinity() {
            return Ok(T::infinity());
        }
        let fv = self.f.value(x);
        if !fv.is_finite() {
            return Err(Error::Numeric(
                "smooth term is not finite at the given point".into(),
            ));
        }
        Ok(fv + gsum)
    }

    pub(crate) fn nonsmooth_sum(&self, x: &BlockPoint<T>) -> Result<T> {
        let mut acc = T::zero();
        for (i, gi) in self.g.iter().enumerate() {
            let v = gi.value(x.block(i));
            if v == T::infinity() {
                return Ok(T::infinity());
            }
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "nonsmooth term {i} returned a non-finite value"
                )));
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Value of the block majorization model
    /// `<grad_i f(x), z - x_i> + (1/step) D(x + U_i(z - x_i), x) + g_i(z)`.
    pub fn block_model_value(&self, x: &BlockPoint<T>, i: usize, z: &[T], step: T) -> Result<T> {
        if !(step > T::zero()) {
            return Err(Error::Config("model step must be positive".into()));
        }
        let gv = self.g[i].value(z);
        if gv == T::infinity() {
            return Ok(T::infinity());
        }
        let grad = self.f.block_gradient(x, i);
        let xi = x.block(i);
        let linear = grad
            .iter()
            .zip(z.iter().zip(xi))
            .fold(T::zero(), |acc, (&g, (&zj, &xj))| acc + g * (zj - xj));
        let d = block_bregman_distance(self.h.as_ref(), x, i, z)?;
        Ok(linear + d / step + gv)
    }

    /// One element of the Bregman proximal alternating linearized mapping:
    /// the closed form when registered, the mirror-prox path otherwise.
    ///
    /// When `L_i` is declared the result is checked against the proximal
    /// alternating descent inequality
    /// `phi(x <- z) <= phi(x) - (1 - step L_i)/step * D + slack`; a violation
    /// is reported as an inconsistency instead of being silently ignored.
    pub fn block_update(&self, x: &BlockPoint<T>, i: usize, step: T) -> Result<Vec<T>> {
        let constants = self.f.constants();
        if let Some(ls) = &constants {
            let li = ls[i];
            if li > T::zero() && !(step > T::zero() && step * li < T::one()) {
                return Err(Error::Config(format!(
                    "step for block {i} must lie in (0, 1/L_i)"
                )));
            }
        }
        let z = self.block_update_raw(x, i, step)?;
        if let Some(ls) = &constants {
            let phi_x = self.phi_value(x)?;
            let shifted = x.with_block(i, z.clone());
            let phi_z = self.phi_value(&shifted)?;
            let d = block_bregman_distance(self.h.as_ref(), x, i, &z)?;
            let rate = (T::one() - step * ls[i]) / step;
            let slack = lit::<T>(DESCENT_SLACK);
            if phi_z > phi_x - rate * d + slack {
                return Err(Error::Inconsistency(format!(
                    "block {i} update increased the model bound: phi {phi_x:?} -> {phi_z:?}, \
                     required decrease {:?}; L_{i} is likely too small or the prox is broken",
                    rate * d
                )));
            }
        }
        Ok(z)
    }

    /// Block update without the descent audit; the solvers do their own
    /// per-iteration accounting.
    pub(crate) fn block_update_raw(&self, x: &BlockPoint<T>, i: usize, step: T) -> Result<Vec<T>> {
        if let Some(cf) = &self.closed_forms[i] {
            let z = cf.update(x, step)?;
            if z.len() != self.structure.block_size(i) {
                return Err(Error::Numeric(format!(
                    "closed-form update for block {i} returned a wrong-size vector"
                )));
            }
            return self.check_update(i, z);
        }
        let grad = self.f.block_gradient(x, i);
        self.block_update_from_gradient(x, i, &grad, step)
    }

    /// Mirror-prox path with the block gradient already computed (the
    /// adaptive solver reuses one gradient across line-search trials).
    pub(crate) fn block_update_from_gradient(
        &self,
        x: &BlockPoint<T>,
        i: usize,
        grad: &[T],
        step: T,
    ) -> Result<Vec<T>> {
        if let Some(cf) = &self.closed_forms[i] {
            let z = cf.update(x, step)?;
            return self.check_update(i, z);
        }
        let (mirror, mu) = mirror_step_scaled(self.h.as_ref(), x, i, grad, step)?;
        let part = self.h.part(i).ok_or_else(|| {
            Error::Capability(format!("kernel exposes no single-block part for block {i}"))
        })?;
        let z = self.g[i].bregman_prox(part, &mirror, mu)?;
        self.check_update(i, z)
    }

    fn check_update(&self, i: usize, z: Vec<T>) -> Result<Vec<T>> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "update for block {i} is not finite"
            )));
        }
        if self.g[i].value(&z) == T::infinity() {
            return Err(Error::Inconsistency(format!(
                "update for block {i} left the domain of its nonsmooth term"
            )));
        }
        Ok(z)
    }

    /// Samples the per-block upper-estimate inequality
    /// `f(x + U_i(y_i - x_i)) <= f(x) + <grad_i f(x), y_i - x_i> + L_i D`
    /// and reports the worst violation per block. Deterministic for a fixed
    /// seed.
    pub fn verify_relative_smoothness(
        &self,
        samples: usize,
        seed: u64,
    ) -> Result<SmoothnessReport<T>> {
        let ls = self
            .f
            .constants()
            .ok_or_else(|| Error::Capability("smoothness constants are not declared".into()))?;
        self.verify_relative_smoothness_at(&ls, samples, seed)
    }

    /// Same check with explicit constants (e.g. deliberately lowered ones).
    pub fn verify_relative_smoothness_at(
        &self,
        constants: &[T],
        samples: usize,
        seed: u64,
    ) -> Result<SmoothnessReport<T>> {
        if constants.len() != self.num_blocks() {
            return Err(Error::Config("one constant per block is required".into()));
        }
        let sampler = self
            .sampler
            .as_ref()
            .ok_or_else(|| Error::Capability("no domain sampler supplied".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.num_blocks();
        let mut max_violation = vec![T::neg_infinity(); n];
        let mut scale = T::one();
        for _ in 0..samples {
            let x = sampler.sample(&mut rng);
            let y = sampler.sample(&mut rng);
            let fx = self.f.value(&x);
            scale = fmax(scale, abs(fx));
            for i in 0..n {
                let yi = y.block(i);
                let shifted = x.with_block(i, yi.to_vec());
                let lhs = self.f.value(&shifted);
                scale = fmax(scale, abs(lhs));
                let grad = self.f.block_gradient(&x, i);
                let xi = x.block(i);
                let inner = grad
                    .iter()
                    .zip(yi.iter().zip(xi))
                    .fold(T::zero(), |acc, (&g, (&yj, &xj))| acc + g * (yj - xj));
                let d = block_bregman_distance(self.h.as_ref(), &x, i, yi)?;
                let viol = lhs - fx - inner - constants[i] * d;
                if !viol.is_finite() {
                    return Err(Error::Numeric("non-finite violation sample".into()));
                }
                max_violation[i] = fmax(max_violation[i], viol);
            }
        }
        Ok(SmoothnessReport {
            max_violation,
            scale,
            samples,
        })
    }

    /// Central-difference check of the block gradients at `x`, returning the
    /// worst relative error. Step is `1e-6 * (1 + ||x||)` per coordinate.
    pub fn gradient_check(&self, x: &BlockPoint<T>) -> T {
        let norm = sqrt(x.blocks().iter().fold(T::zero(), |acc, b| acc + dot(b, b)));
        let step = lit::<T>(1e-6) * (T::one() + norm);
        let mut worst = T::zero();
        for i in 0..self.num_blocks() {
            let grad = self.f.block_gradient(x, i);
            let gnorm = sqrt(dot(&grad, &grad));
            for j in 0..x.structure().block_size(i) {
                let mut plus = x.block(i).to_vec();
                plus[j] += step;
                let mut minus = x.block(i).to_vec();
                minus[j] -= step;
                let fp = self.f.value(&x.with_block(i, plus));
                let fm = self.f.value(&x.with_block(i, minus));
                let fd = (fp - fm) / (lit::<T>(2.0) * step);
                let err = abs(fd - grad[j]) / fmax(T::one(), gnorm);
                worst = fmax(worst, err);
            }
        }
        worst
    }
}
