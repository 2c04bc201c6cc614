use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    /// A computed probability left [0, 1] by more than round-off. This points
    /// at a formula or parameter bug rather than bad input.
    #[error("numeric error in {op}: {reason}")]
    Numeric { op: &'static str, reason: String },

    #[error("quadrature did not converge within {budget} evaluations (estimate {estimate:e}, error {error:e})")]
    Convergence {
        budget: usize,
        estimate: f64,
        error: f64,
    },

    /// The requested backend/configuration combination is not defined.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn numeric(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Numeric {
            op,
            reason: reason.into(),
        }
    }

    /// True for errors caused by caller input rather than computation.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::Unsupported(_))
    }
}
