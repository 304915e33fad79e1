use thiserror::Error;

use crate::point::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("unrelated primitive measures: {left} and {right}")]
    UnrelatedPrimitives { left: String, right: String },

    #[error("invalid parameter for {family}: {message}")]
    InvalidParameter { family: String, message: String },

    #[error("unknown parameterization {{{names}}} for {family}")]
    UnknownParameterization { family: String, names: String },

    #[error("unknown measure family '{0}'")]
    UnknownFamily(String),

    #[error("not a probability measure: {0}")]
    NotProbability(String),

    #[error("density is negative ({value}) at {at}")]
    NegativeDensity { value: f64, at: String },

    #[error("undefined density at {0}")]
    UndefinedDensity(String),

    #[error("singular transform: {0}")]
    SingularTransform(String),

    #[error("invalid construction: {0}")]
    Invalid(String),

    #[error("{0}")]
    Kernel(String),
}

impl MeasureError {
    pub(crate) fn shape(expected: impl Into<String>, found: &Point) -> Self {
        MeasureError::ShapeMismatch { expected: expected.into(), found: found.to_string() }
    }

    pub(crate) fn param(family: &str, message: impl Into<String>) -> Self {
        MeasureError::InvalidParameter { family: family.to_string(), message: message.into() }
    }

    /// True for failures that are measure-theoretic rather than usage errors.
    pub fn is_measure_theoretic(&self) -> bool {
        matches!(self, MeasureError::UnrelatedPrimitives { .. } | MeasureError::UndefinedDensity(_))
    }
}

pub type Result<T, E = MeasureError> = std::result::Result<T, E>;
