use serde::{Deserialize, Serialize};

use super::SegmentationError;
use crate::imgcore::Image;

/// How a [`BinaryMap`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegMethod {
    Otsu,
    FixedThreshold,
    Fcm,
    /// Known geometry, e.g. a phantom's ventricle disk.
    GroundTruth,
}

impl SegMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SegMethod::Otsu => "otsu",
            SegMethod::FixedThreshold => "fixed_threshold",
            SegMethod::Fcm => "fcm",
            SegMethod::GroundTruth => "ground_truth",
        }
    }
}

/// Per-pixel cavity flags, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMap {
    pub width: usize,
    pub height: usize,
    pub black: Vec<bool>,
    pub threshold_used: Option<f64>,
    pub method: SegMethod,
}

impl BinaryMap {
    pub fn new(
        width: usize,
        height: usize,
        black: Vec<bool>,
        method: SegMethod,
        threshold_used: Option<f64>,
    ) -> Result<Self, SegmentationError> {
        if black.len() != width * height {
            return Err(SegmentationError::LengthMismatch {
                expected: width * height,
                actual: black.len(),
            });
        }
        Ok(Self {
            width,
            height,
            black,
            threshold_used,
            method,
        })
    }

    #[inline]
    pub fn is_black(&self, x: usize, y: usize) -> bool {
        self.black[y * self.width + x]
    }

    pub fn black_count(&self) -> usize {
        self.black.iter().filter(|&&b| b).count()
    }

    pub fn white_count(&self) -> usize {
        self.black.len() - self.black_count()
    }

    /// Black pixels become intensity 0, white pixels 1.
    pub fn to_image(&self) -> Image {
        Image::from_fn_clamped(self.width, self.height, |x, y| {
            if self.is_black(x, y) {
                0.0
            } else {
                1.0
            }
        })
    }

    /// Inverse of [`BinaryMap::to_image`]: pixels below one half are black.
    pub fn from_image(img: &Image, method: SegMethod, threshold_used: Option<f64>) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            black: img.data().iter().map(|&v| v < 0.5).collect(),
            threshold_used,
            method,
        }
    }
}

/// `black ⇔ intensity < threshold`.
pub fn binarize(img: &Image, threshold: f64) -> Result<BinaryMap, SegmentationError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(SegmentationError::ThresholdOutOfRange(threshold));
    }
    Ok(BinaryMap {
        width: img.width(),
        height: img.height(),
        black: img.data().iter().map(|&v| v < threshold).collect(),
        threshold_used: Some(threshold),
        method: SegMethod::FixedThreshold,
    })
}
