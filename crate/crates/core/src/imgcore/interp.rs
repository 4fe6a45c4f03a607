//! Point sampling with nearest, bilinear and bicubic kernels, and resizing.
//!
//! Coordinates are in pixel units with pixel `(i, j)` centered at `(i, j)`.
//! Neighborhoods that cross the border replicate the edge pixels. Once a
//! coordinate lies farther from the image rectangle than the kernel reaches
//! (0.5 px nearest, 1 px bilinear, 2 px bicubic) the sample is background 0.

use super::image::{Image, InterpKind};
use super::ImageError;

/// Keys cubic convolution parameter.
const CUBIC_A: f64 = -0.5;

impl InterpKind {
    /// Distance past the outermost pixel center that still receives edge-replicated values.
    pub fn support_margin(self) -> f64 {
        match self {
            InterpKind::Nearest => 0.5,
            InterpKind::Bilinear => 1.0,
            InterpKind::Bicubic => 2.0,
        }
    }
}

pub fn sample(img: &Image, x: f64, y: f64, kind: InterpKind) -> Result<f64, ImageError> {
    if !x.is_finite() || !y.is_finite() {
        return Err(ImageError::NonFiniteCoordinate { x, y });
    }
    Ok(sample_finite(img, x, y, kind))
}

pub(crate) fn sample_finite(img: &Image, x: f64, y: f64, kind: InterpKind) -> f64 {
    let margin = kind.support_margin();
    let max_x = (img.width() - 1) as f64 + margin;
    let max_y = (img.height() - 1) as f64 + margin;
    if x < -margin || y < -margin || x > max_x || y > max_y {
        return 0.0;
    }
    match kind {
        InterpKind::Nearest => {
            img.get_clamped((x + 0.5).floor() as i64, (y + 0.5).floor() as i64)
        }
        InterpKind::Bilinear => bilinear(img, x, y),
        InterpKind::Bicubic => bicubic(img, x, y),
    }
}

fn bilinear(img: &Image, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (ix, iy) = (x0 as i64, y0 as i64);
    let v00 = img.get_clamped(ix, iy);
    let v10 = img.get_clamped(ix + 1, iy);
    let v01 = img.get_clamped(ix, iy + 1);
    let v11 = img.get_clamped(ix + 1, iy + 1);
    let top = v00 + fx * (v10 - v00);
    let bottom = v01 + fx * (v11 - v01);
    (top + fy * (bottom - top)).clamp(0.0, 1.0)
}

fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        ((CUBIC_A + 2.0) * t - (CUBIC_A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((CUBIC_A * t - 5.0 * CUBIC_A) * t + 8.0 * CUBIC_A) * t - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

fn bicubic(img: &Image, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (ix, iy) = (x0 as i64, y0 as i64);
    let wx = [
        cubic_weight(fx + 1.0),
        cubic_weight(fx),
        cubic_weight(1.0 - fx),
        cubic_weight(2.0 - fx),
    ];
    let wy = [
        cubic_weight(fy + 1.0),
        cubic_weight(fy),
        cubic_weight(1.0 - fy),
        cubic_weight(2.0 - fy),
    ];
    // Accumulate deviations from the anchor pixel: the weights sum to one, so
    // this keeps constant neighborhoods (and grid nodes) exact.
    let anchor = img.get_clamped(ix, iy);
    let mut acc = 0.0;
    for (j, wyj) in wy.iter().enumerate() {
        if *wyj == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (i, wxi) in wx.iter().enumerate() {
            if *wxi == 0.0 {
                continue;
            }
            let v = img.get_clamped(ix + i as i64 - 1, iy + j as i64 - 1);
            row += wxi * (v - anchor);
        }
        acc += wyj * row;
    }
    (anchor + acc).clamp(0.0, 1.0)
}

/// Resamples to `new_width × new_height` with pixel-center alignment.
pub fn resize(
    img: &Image,
    new_width: usize,
    new_height: usize,
    kind: InterpKind,
) -> Result<Image, ImageError> {
    if new_width == 0 || new_height == 0 {
        return Err(ImageError::ZeroDimension {
            width: new_width,
            height: new_height,
        });
    }
    let sx = img.width() as f64 / new_width as f64;
    let sy = img.height() as f64 / new_height as f64;
    Ok(Image::from_fn_clamped(new_width, new_height, |i, j| {
        let x = (i as f64 + 0.5) * sx - 0.5;
        let y = (j as f64 + 0.5) * sy - 0.5;
        sample_finite(img, x, y, kind)
    })
    .with_source_bit_depth(img.source_bit_depth()))
}
