use thiserror::Error;

/// Failures raised by the numerical model.
///
/// Every variant signals that a state left the domain where the equations
/// are defined, or that an iterative solve did not converge. None of them is
/// recovered from silently.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in field `{0}`")]
    NonFinite(&'static str),

    #[error("gamma below one ({value}) in gamma-Laplacian coefficient")]
    GammaBelowOne { value: f64 },

    #[error("right-hand side has non-zero mean {mean:e} (norm {norm:e}); periodic Poisson problem is not solvable")]
    NonZeroMean { mean: f64, norm: f64 },

    #[error("superluminal velocity: |v|/c = {ratio} exceeds the allowed maximum {max}")]
    SuperluminalVelocity { ratio: f64, max: f64 },

    #[error("non-positive density {value} encountered")]
    NonPositiveDensity { value: f64 },

    #[error("divergence-free projection did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionDiverged { iterations: usize, residual: f64 },

    #[error("gamma-Laplacian inversion did not converge after {iterations} iterations (residual {residual:e})")]
    InverterDiverged { iterations: usize, residual: f64 },

    #[error("functional {functional} is not defined for a {state} state")]
    IncompatibleFunctional {
        functional: &'static str,
        state: &'static str,
    },

    #[error("invalid equation of state: {0}")]
    InvalidEos(String),

    #[error("invalid physical constants: {0}")]
    InvalidConstants(String),

    #[error("invalid step control: {0}")]
    InvalidStep(String),
}

pub type Result<T> = std::result::Result<T, Error>;
