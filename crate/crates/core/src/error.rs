//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimensions too small: {0}x{1}x{2} (need at least 4 per axis)")]
    GridTooSmall(usize, usize, usize),
    #[error("grid spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("voxel mask is empty")]
    EmptyMask,
    #[error("domain is not star-shaped with respect to ({0}, {1}, {2})")]
    NotStarShaped(f64, f64, f64),
    #[error("point ({0}, {1}, {2}) lies outside the grid box")]
    OutOfGrid(f64, f64, f64),
    #[error("field component count mismatch: expected {expected}, got {got}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("Cauchy kernel evaluated at the origin")]
    SingularPoint,
    #[error("quadrature needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("radial moment exponent must exceed -1, got {0}")]
    BadExponent(f64),
    #[error("conductivity must be strictly positive (min sampled value {0})")]
    NonPositiveConductivity(f64),
    #[error("precondition `{check}` violated: relative residual {relative:.3e} exceeds {tolerance:.3e}")]
    Precondition {
        check: String,
        relative: f64,
        tolerance: f64,
    },
    #[error("conjugate gradients stalled after {iterations} iterations, relative residual {relative:.3e}")]
    CgDiverged { iterations: usize, relative: f64 },
    #[error("boundary value mismatch: max deviation {0:.3e} at boundary-adjacent voxels")]
    BoundaryMismatch(f64),
    #[error("unknown builtin field `{0}`")]
    UnknownField(String),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit-code class used by the CLI: precondition gates are distinguished
    /// from ordinary failures so scripted callers can tell rejected data from
    /// broken runs.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Precondition { .. } | Error::NotStarShaped(..) | Error::NonPositiveConductivity(..)
        )
    }
}
