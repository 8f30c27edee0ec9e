use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve {index}: {reason}")]
    InvalidCurve { index: usize, reason: String },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("point {point} lies on or too close to the boundary")]
    OnBoundary { point: Complex64 },

    #[error("point {point} lies outside the domain")]
    OutsideDomain { point: Complex64 },

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("base point selection failed after {tries} attempts: {reason}")]
    BasePoint { tries: usize, reason: String },

    #[error("zero localization failed: {0}; re-choose the base point")]
    ZeroLocation(String),

    #[error("evaluation too close to a singular configuration: {0}")]
    NearSingular(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("artifact: {0}")]
    Artifact(String),
}
