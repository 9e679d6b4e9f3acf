use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FtgError {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter combination does not describe a member of the family.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The sample cannot support the requested estimate.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// An iterative method stopped without meeting its tolerance.
    #[error("{method} did not converge after {iterations} iterations (last iterate {last:?})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        last: Vec<f64>,
    },

    /// A rejection sampler fell below its minimum acceptance rate.
    #[error("rejection sampler stalled: {accepted} accepted out of {attempts} attempts")]
    SamplerStalled { accepted: u64, attempts: u64 },

    /// Too many replicates of a resampling procedure failed.
    #[error("{failed} of {total} replicates failed: {last}")]
    ReplicateFailures { failed: usize, total: usize, last: String },

    /// Input data could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, FtgError>;

pub(crate) fn domain(msg: impl Into<String>) -> FtgError {
    FtgError::Domain(msg.into())
}
