use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid measure spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate measure: {0}")]
    Degenerate(String),
    #[error("point {0} lies outside the upper half-plane")]
    Domain(String),
    #[error("divergent integral: {0}")]
    Divergence(String),
    #[error("quadrature failed to converge (residual estimate {residual:e})")]
    QuadratureFailure { residual: f64 },
    #[error("Stieltjes inversion failed at x = {x}: {reason}")]
    InversionFailure { x: f64, reason: String },
    #[error("companion measure recovery failed: recovered mass {mass}")]
    CompanionRecovery { mass: f64 },
    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),
    #[error("could not invert the flow map at x = {x}")]
    FlowInversion { x: f64 },
    #[error("fixed point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    FixedPointFailure { iterations: usize, residual: f64 },
    #[error("ambiguous endpoint exponent fit: {0}")]
    AmbiguousEndpoint(String),
}

impl Error {
    /// True for failures of an iterative solver (root finding, fixed point,
    /// quadrature, inversion) as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. }
                | Error::InversionFailure { .. }
                | Error::CompanionRecovery { .. }
                | Error::InternalConsistency(_)
                | Error::FlowInversion { .. }
                | Error::FixedPointFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
