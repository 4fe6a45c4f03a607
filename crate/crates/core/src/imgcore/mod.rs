//! Grayscale slice representation, PGM I/O, interpolated sampling and resizing.

mod image;
mod interp;
mod normalize;
mod pgm;

pub use image::{BitDepth, Image, InterpKind};
pub use interp::{resize, sample};
pub use normalize::normalize_intensity;
pub use pgm::{load_pgm, save_pgm, PgmError};

pub(crate) use interp::sample_finite as interp_sample;
pub(crate) use normalize::percentile_sorted;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("intensity buffer holds {actual} values, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("intensity {value} at index {index} lies outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },
    #[error("sample coordinate ({x}, {y}) is not finite")]
    NonFiniteCoordinate { x: f64, y: f64 },
}
