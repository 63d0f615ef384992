//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image dimensions {0}x{1} do not match {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("class count mismatch: {0} vs {1}")]
    ClassMismatch(usize, usize),

    #[error("invalid label image: {0}")]
    InvalidLabelImage(String),

    #[error("expected a binary mask (2 classes), got {0} classes")]
    NonBinaryMask(usize),

    #[error("invalid transition matrix, column {column}: {reason}")]
    InvalidNtm { column: usize, reason: String },

    #[error("probability {0} out of range [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("{0} out of range: {1}")]
    OutOfRange(&'static str, String),

    #[error("image too small: {0}x{1} requires at least {2}x{2}")]
    ImageTooSmall(usize, usize, usize),

    #[error("malformed {format} file: {reason}")]
    Format { format: &'static str, reason: String },

    #[error("predictor failed at epoch {epoch}: {reason}")]
    Predictor { epoch: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
