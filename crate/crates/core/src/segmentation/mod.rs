//! Black (cavity) / white (tissue) pixel classification.
//!
//! The default path thresholds the intensity histogram with Otsu's rule;
//! fuzzy C-means on intensity is available as an alternative backend.

mod binary;
mod fcm;
mod histogram;

pub use binary::{binarize, BinaryMap, SegMethod};
pub use fcm::{fcm_segment, memberships_to_binary, FcmParams, MembershipMap};
pub use histogram::{histogram, otsu_threshold, Histogram, DEFAULT_BINS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SegmentationError {
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("histogram is degenerate: all mass lies in one bin")]
    DegenerateHistogram,
    #[error("threshold {0} lies outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("invalid fuzzy c-means parameter: {0}")]
    InvalidParameter(String),
    #[error("image has {distinct} distinct intensities, fewer than the {clusters} requested clusters")]
    DegenerateInput { distinct: usize, clusters: usize },
    #[error("binary map is {actual} pixels, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}
