use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("{function}: argument outside domain ({detail})")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// Invalid configuration value.
    #[error("invalid `{key}`: {constraint}")]
    Validation { key: String, constraint: String },

    /// Two interference terms closer than the distinctness guard.
    #[error(
        "{list} interference terms {first} and {second} are not distinct (relative gap below 1e-9)"
    )]
    NotDistinct {
        list: &'static str,
        first: usize,
        second: usize,
    },

    /// A coefficient denominator vanished (α_k·v = 1 or α_k = α_i).
    #[error("degenerate recursion input: {detail}")]
    Degenerate { detail: String },

    /// P(π₂) underflowed; the second decoding order never occurs.
    #[error("decoding order {order} has zero probability at s = {backoff_db} dB")]
    DegenerateOrder { order: u8, backoff_db: f64 },

    #[error("quadrature did not reach tolerance after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("{series} series did not contract within {terms} terms (partial sum {partial_sum:e})")]
    Series {
        series: &'static str,
        partial_sum: f64,
        terms: usize,
    },

    #[error("contour integral did not converge: {detail}")]
    Contour { detail: String },

    #[error("oracle cost guard: {detail}")]
    CostGuard { detail: String },
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub fn validation(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    /// True for input and configuration errors, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Validation { .. }
                | Error::NotDistinct { .. }
                | Error::CostGuard { .. }
        )
    }
}
