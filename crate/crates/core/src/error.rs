/// Failure modes shared across the crate.
///
/// Numeric routines return errors instead of silently producing NaN: a
/// caller that hits `BisectionDiverged` or `CovarianceConditioning` gets the
/// offending residual or component index in the message.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid argument value (negative entropic index, empty score vector,
    /// probabilities that do not sum to one, and similar).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The normalization solve did not reach the residual tolerance.
    #[error("bisection did not converge after {iterations} iterations (residual {residual:.3e})")]
    BisectionDiverged { iterations: usize, residual: f64 },

    /// A mixture covariance lost positive definiteness.
    #[error("covariance of component {component} is not positive definite")]
    CovarianceConditioning { component: usize },

    /// Training loss exceeded the divergence guard.
    #[error("training diverged at epoch {epoch}: loss {loss:.6e} exceeds {limit:.1e}")]
    TrainingDiverged { epoch: usize, loss: f64, limit: f64 },

    /// A loss term evaluated to NaN or infinity; the term is named.
    #[error("non-finite value in {term}")]
    NonFinite { term: String },

    /// Malformed IDX image/label file; the byte offset locates the problem.
    #[error("idx format error at byte {offset}: {message}")]
    IdxFormat { offset: u64, message: String },

    /// Malformed checkpoint file; the line number locates the problem.
    #[error("checkpoint error at line {line}: {message}")]
    Checkpoint { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
