use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ImageError;

/// Bit depth of the file an image was decoded from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn maxval(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            8 => Some(BitDepth::Eight),
            16 => Some(BitDepth::Sixteen),
            _ => None,
        }
    }
}

/// Interpolation kernel used when sampling between pixel centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpKind {
    Nearest,
    #[default]
    Bilinear,
    Bicubic,
}

impl InterpKind {
    pub const ALL: [InterpKind; 3] = [InterpKind::Nearest, InterpKind::Bilinear, InterpKind::Bicubic];

    pub fn as_str(self) -> &'static str {
        match self {
            InterpKind::Nearest => "nearest",
            InterpKind::Bilinear => "bilinear",
            InterpKind::Bicubic => "bicubic",
        }
    }
}

impl fmt::Display for InterpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InterpKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nearest" => Ok(InterpKind::Nearest),
            "bilinear" => Ok(InterpKind::Bilinear),
            "bicubic" => Ok(InterpKind::Bicubic),
            other => Err(format!("unknown interpolation kind '{other}' (expected nearest, bilinear or bicubic)")),
        }
    }
}

/// A 2D grayscale slice with intensities normalized to `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
    source_bit_depth: BitDepth,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::LengthMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ImageError::IntensityOutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            data,
            source_bit_depth: BitDepth::Eight,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    /// Builds an image from a per-pixel function `f(x, y)`; values are validated.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Like `from_fn`, but clamps into `[0, 1]` instead of rejecting. Dimensions must be non-zero.
    pub(crate) fn from_fn_clamped(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        debug_assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            data,
            source_bit_depth: BitDepth::Eight,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn source_bit_depth(&self) -> BitDepth {
        self.source_bit_depth
    }

    pub fn with_source_bit_depth(mut self, depth: BitDepth) -> Self {
        self.source_bit_depth = depth;
        self
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the image rectangle (edge replication).
    #[inline]
    pub(crate) fn get_clamped(&self, x: i64, y: i64) -> f64 {
        let cx = x.clamp(0, self.width as i64 - 1) as usize;
        let cy = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[cy * self.width + cx]
    }

    /// Rounds every intensity to the grid of the given bit depth, exactly as a
    /// `save_pgm`/`load_pgm` round trip at that depth would.
    pub fn quantized(&self, depth: BitDepth) -> Image {
        let maxval = depth.maxval() as f64;
        Image {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&v| quantize_sample(v, depth) as f64 / maxval)
                .collect(),
            source_bit_depth: depth,
        }
    }
}

/// `round(v * maxval)` with halves rounded up, clamped to the representable range.
pub(crate) fn quantize_sample(v: f64, depth: BitDepth) -> u32 {
    let maxval = depth.maxval() as f64;
    (v * maxval + 0.5).floor().clamp(0.0, maxval) as u32
}
