//! Multi-block Bregman proximal alternating linearized minimization.
//!
//! This crate minimizes composite objectives of the form
//!
//! ```text
//! phi(x) = f(x) + g_1(x_1) + ... + g_N(x_N)
//! ```
//!
//! where the decision vector is split into `N` blocks, `f` is smooth relative
//! to a multi-block Bregman kernel `h` with per-block constants `L_i`, and the
//! `g_i` are nonsmooth block penalties with cheap Bregman proximal maps. The
//! driver cycles through the blocks Gauss-Seidel style, replacing each block
//! by the minimizer of a linearized model regularized with the block Bregman
//! distance of `h`. Two step regimes are provided: fixed steps
//! `gamma_i < 1/L_i`, and a backtracking regime that grows per-block estimates
//! of the constants on the fly.
//!
//! The [`onmf`] module instantiates the machinery for penalized orthogonal
//! nonnegative matrix factorization, where both block subproblems are solved
//! in closed form (the second one through the positive root of a depressed
//! cubic).
//!
//! Core math is generic over the scalar type; `f64` aliases for the main
//! types are exported at the crate root.

// Validation deliberately writes `!(x > 0)` instead of `x <= 0`: the negated
// form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod block;
pub mod cubic;
pub mod error;
pub mod kernel;
pub mod onmf;
pub mod problem;
pub mod solver;

pub use block::{BlockPoint, BlockStructure};
pub use error::{Error, Result};
pub use kernel::{
    block_bregman_distance, mirror_block_step, EnergyKernel, Kernel, ProductSeparableKernel,
    Separability, SingleBlockKernel, SumSeparableKernel,
};
pub use problem::{
    CompositeProblem, DomainSampler, NonnegativeOrthant, NonsmoothTerm, SmoothTerm,
    SmoothnessReport, ZeroTerm,
};
pub use solver::{
    abpalm_run, bpalm_run, continuation_run, solve, subgradient_residual, write_trace_csv,
    IterationRecord, SolveResult, SolverConfig, StageBudget, StepMode, Termination,
};

/// Floating-point scalar for all numeric code; implemented by `f32` and `f64`.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + nalgebra::RealField + Copy + Send + Sync
{
}

impl<T> Real for T where
    T: num_traits::Float + num_traits::FromPrimitive + nalgebra::RealField + Copy + Send + Sync
{
}

/// Double-precision aliases for the main types.
pub type BlockPoint64 = BlockPoint<f64>;
pub type CompositeProblem64 = CompositeProblem<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolveResult64 = SolveResult<f64>;
pub type OnmfProblem64 = onmf::OnmfProblem<f64>;
pub type Factors64 = onmf::Factors<f64>;

pub(crate) mod vecops {
    use crate::Real;
    use num_traits::Float;

    pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
    }

    pub fn norm_sq<T: Real>(a: &[T]) -> T {
        dot(a, a)
    }

    /// Converts an `f64` literal into the working scalar type.
    pub fn lit<T: Real>(v: f64) -> T {
        T::from_f64(v).expect("literal representable in scalar type")
    }

    // `num_traits::Float` and nalgebra's `ComplexField` overlap on several
    // method names, making plain method calls ambiguous on a generic
    // scalar. These shims pin the `Float` versions.

    pub fn sqrt<T: Real>(x: T) -> T {
        Float::sqrt(x)
    }

    pub fn cbrt<T: Real>(x: T) -> T {
        Float::cbrt(x)
    }

    pub fn abs<T: Real>(x: T) -> T {
        Float::abs(x)
    }

    pub fn powi<T: Real>(x: T, n: i32) -> T {
        Float::powi(x, n)
    }

    pub fn fmax<T: Real>(a: T, b: T) -> T {
        Float::max(a, b)
    }

    pub fn fmin<T: Real>(a: T, b: T) -> T {
        Float::min(a, b)
    }
}
