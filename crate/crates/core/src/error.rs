use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories. The CLI maps each category onto a distinct exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Vector lengths or matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A 1-based coordinate is outside `1..=n`.
    #[error("coordinate {index} out of range 1..={n}")]
    CoordinateOutOfRange { index: usize, n: usize },

    /// A moment (mean, variance, conditional mean) does not exist for the model.
    #[error("infinite moment: {quantity} requires tail index > {required}, got {index_value}")]
    InfiniteMoment {
        quantity: String,
        index_value: f64,
        required: f64,
    },

    /// A series, recursion or root search failed to reach its tolerance.
    #[error("numeric non-convergence: {0}")]
    NonConvergence(String),

    /// A combinatorial size guard (dimension, term count) was exceeded.
    #[error("size guard exceeded: {0}")]
    Guard(String),

    /// Not enough Monte Carlo draws for the requested statistic.
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn infinite_moment(
        quantity: impl Into<String>,
        index_value: f64,
        required: f64,
    ) -> Self {
        Error::InfiniteMoment {
            quantity: quantity.into(),
            index_value,
            required,
        }
    }
}
