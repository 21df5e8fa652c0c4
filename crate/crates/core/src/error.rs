//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors surfaced by kernels, problems, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: parameter ranges, shapes, step sizes.
    #[error("config: {0}")]
    Config(String),

    /// The requested operation is not supported by the chosen kernel or
    /// term combination (e.g. a mirror step on a non-separable kernel).
    #[error("capability: {0}")]
    Capability(String),

    /// A point left the domain of the kernel or of the objective.
    #[error("domain: {0}")]
    Domain(String),

    /// Non-finite arithmetic or a failed numeric subroutine.
    #[error("numeric: {0}")]
    Numeric(String),

    /// A guaranteed inequality failed beyond numerical slack. This usually
    /// means a wrong smoothness constant or a broken proximal step.
    #[error("internal consistency: {0}")]
    Inconsistency(String),

    /// Backtracking exceeded the trial cap; the smooth term is likely not
    /// relatively smooth with respect to the kernel, or an oracle is broken.
    #[error("line search on block {block} exceeded {trials} trials")]
    LinesearchDiverged { block: usize, trials: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
