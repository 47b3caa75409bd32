use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CalculusError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("damping must be positive, got {0}")]
    BadDamping(f64),

    #[error("damped system is numerically singular; increase the damping")]
    DampingTooSmall,

    #[error("curvature along the constraint gradient vanished; increase the damping")]
    VanishingCurvature,
}
