//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Array or matrix shapes are inconsistent with each other or with the group.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument lies outside the documented domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `2 t |mu|` is (numerically) an integer, where the space-side kernel is singular.
    #[error("singular time: 2t|mu| = {0} is within the guard margin of an integer")]
    SingularTime(f64),

    /// Evaluation at a pole of `tau cot tau` or of a derived phase function.
    #[error("pole: argument {0} is a nonzero multiple of pi")]
    Pole(f64),

    /// The adaptive quadrature exhausted its panel budget.
    #[error("quadrature did not converge: estimated error {estimate:.3e} after {panels} panels")]
    Quadrature { estimate: f64, panels: usize },

    /// A resolution certificate (grid or quadrature refinement) failed.
    #[error("resolution certificate failed: {0}")]
    Resolution(String),

    /// The requested computation exceeds the configured desk-scale budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// A truncated expansion (Hermite, Laguerre, spectral) left too much mass in its tail.
    #[error("truncation: {0}")]
    Truncation(String),

    /// A transform reached the edge of its frequency box.
    #[error("aliasing: {0}")]
    Aliasing(String),

    /// Not enough data for a least-squares fit.
    #[error("fit: {0}")]
    Fit(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
