use thiserror::Error;

/// Errors raised by method design, analysis and integration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid user-facing parameter (stage count, step size, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The damping system could not be solved, or produced an unusable triple.
    #[error("design failure after {iterations} iterations (residual {residual:e}): {reason}")]
    Design {
        reason: String,
        iterations: usize,
        residual: f64,
    },

    /// A stage or step of the two-step scheme produced a non-finite or huge value.
    #[error("blow-up at t = {t} (stage {stage})")]
    BlowUp { t: f64, stage: usize },

    /// The implicit reference solver failed to converge even after step halving.
    #[error("reference solver failed at t = {t}: {newton_iters} Newton iterations, residual {residual:e}")]
    Reference {
        t: f64,
        newton_iters: usize,
        residual: f64,
    },

    /// A reference solution is not accurate enough for the experiment using it.
    #[error("reference for {problem} not certified: estimated error {estimate:e} > required {required:e}")]
    Certification {
        problem: String,
        estimate: f64,
        required: f64,
    },

    /// Stage selection exceeded the supported stage count.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
