use thiserror::Error;

pub type Result<T> = std::result::Result<T, SfmError>;

#[derive(Debug, Clone, Error)]
pub enum SfmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exhaustive routine was asked to run past its configured size limit.
    #[error("{what}: size {size} exceeds the exhaustive limit {limit}")]
    CapabilityExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("not submodular: F({a:?}) + F({b:?}) < F(A∪B) + F(A∩B) by {excess:e}")]
    NotSubmodular {
        a: Vec<usize>,
        b: Vec<usize>,
        excess: f64,
    },

    /// Min-norm-point iteration ran out of major cycles.
    #[error("projection did not converge (component {component:?}): residual {residual:e} after {cycles} cycles")]
    ProjectionFailed {
        component: Option<usize>,
        residual: f64,
        cycles: usize,
        best: Vec<f64>,
    },
}

impl SfmError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        SfmError::InvalidInput(msg.into())
    }

    pub(crate) fn with_component(self, index: usize) -> Self {
        match self {
            SfmError::ProjectionFailed {
                residual,
                cycles,
                best,
                ..
            } => SfmError::ProjectionFailed {
                component: Some(index),
                residual,
                cycles,
                best,
            },
            other => other,
        }
    }
}
