//! Region of interest, black/white pixel counting and brain-size comparison.

use serde::{Deserialize, Serialize};

use crate::imgcore::Image;
use crate::segmentation::BinaryMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasurementError {
    #[error("region of interest {0} does not overlap the {1}x{2} image")]
    EmptyRoi(String, usize, usize),
    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("{0} image has no pixels at or above the foreground threshold")]
    NoForeground(&'static str),
    #[error("foreground threshold {0} must lie strictly between 0 and 1")]
    BadForegroundThreshold(f64),
}

/// Geometric definition of the region of interest, in reference-space pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum RoiShape {
    /// Inclusive pixel bounds.
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Full,
}

impl RoiShape {
    pub fn describe(&self) -> String {
        match self {
            RoiShape::Rect { x0, y0, x1, y1 } => format!("rect ({x0}, {y0})-({x1}, {y1})"),
            RoiShape::Ellipse { cx, cy, rx, ry } => {
                format!("ellipse center ({cx}, {cy}) radii ({rx}, {ry})")
            }
            RoiShape::Full => "full frame".to_string(),
        }
    }

    pub fn from_json(json: &str) -> Result<Self, MeasurementError> {
        serde_json::from_str(json).map_err(|e| MeasurementError::InvalidRoi(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiMask {
    pub width: usize,
    pub height: usize,
    pub inside: Vec<bool>,
    pub shape: RoiShape,
}

impl RoiMask {
    pub fn area(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}

pub fn make_roi(shape: &RoiShape, width: usize, height: usize) -> Result<RoiMask, MeasurementError> {
    let all_finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
    let inside: Vec<bool> = match *shape {
        RoiShape::Full => vec![true; width * height],
        RoiShape::Rect { x0, y0, x1, y1 } => {
            if !all_finite(&[x0, y0, x1, y1]) {
                return Err(MeasurementError::InvalidRoi("non-finite rectangle bound".into()));
            }
            (0..height)
                .flat_map(|y| (0..width).map(move |x| (x as f64, y as f64)))
                .map(|(x, y)| x0 <= x && x <= x1 && y0 <= y && y <= y1)
                .collect()
        }
        RoiShape::Ellipse { cx, cy, rx, ry } => {
            if !all_finite(&[cx, cy, rx, ry]) || !(rx > 0.0) || !(ry > 0.0) {
                return Err(MeasurementError::InvalidRoi(
                    "ellipse needs finite center and positive radii".into(),
                ));
            }
            (0..height)
                .flat_map(|y| (0..width).map(move |x| (x as f64, y as f64)))
                .map(|(x, y)| {
                    let u = (x - cx) / rx;
                    let v = (y - cy) / ry;
                    u * u + v * v <= 1.0
                })
                .collect()
        }
    };
    if !inside.iter().any(|&b| b) {
        return Err(MeasurementError::EmptyRoi(shape.describe(), width, height));
    }
    Ok(RoiMask {
        width,
        height,
        inside,
        shape: shape.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelCounts {
    pub black_count: u64,
    pub white_count: u64,
    pub roi_area: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub black_coords: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub white_coords: Option<Vec<[usize; 2]>>,
}

/// Tallies black and white pixels inside the ROI; coordinates are `[x, y]` in row-major order.
pub fn count_pixels(
    bm: &BinaryMap,
    roi: &RoiMask,
    emit_coords: bool,
) -> Result<PixelCounts, MeasurementError> {
    if bm.width != roi.width || bm.height != roi.height {
        return Err(MeasurementError::DimensionMismatch(bm.width, bm.height, roi.width, roi.height));
    }
    let mut black = 0u64;
    let mut white = 0u64;
    let mut black_coords = emit_coords.then(Vec::new);
    let mut white_coords = emit_coords.then(Vec::new);
    for (k, (&is_black, &inside)) in bm.black.iter().zip(&roi.inside).enumerate() {
        if !inside {
            continue;
        }
        let (list, counter) = if is_black {
            (&mut black_coords, &mut black)
        } else {
            (&mut white_coords, &mut white)
        };
        *counter += 1;
        if let Some(list) = list {
            list.push([k % bm.width, k / bm.width]);
        }
    }
    Ok(PixelCounts {
        black_count: black,
        white_count: white,
        roi_area: black + white,
        black_coords,
        white_coords,
    })
}

/// Inclusive bounding box `[x0, y0, x1, y1]`.
pub type BoundingBox = [usize; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeComparison {
    pub target_extent: BoundingBox,
    pub reference_extent: BoundingBox,
    pub target_area: u64,
    pub reference_area: u64,
    pub area_ratio: f64,
}

fn foreground(img: &Image, threshold: f64) -> Option<(BoundingBox, u64)> {
    let mut bbox = [usize::MAX, usize::MAX, 0, 0];
    let mut area = 0u64;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) >= threshold {
                area += 1;
                bbox[0] = bbox[0].min(x);
                bbox[1] = bbox[1].min(y);
                bbox[2] = bbox[2].max(x);
                bbox[3] = bbox[3].max(y);
            }
        }
    }
    (area > 0).then_some((bbox, area))
}

/// Compares head foreground (`intensity >= foreground_threshold`) of two registered slices.
pub fn compare_sizes(
    target: &Image,
    reference: &Image,
    foreground_threshold: f64,
) -> Result<SizeComparison, MeasurementError> {
    if !(foreground_threshold > 0.0 && foreground_threshold < 1.0) {
        return Err(MeasurementError::BadForegroundThreshold(foreground_threshold));
    }
    if target.width() != reference.width() || target.height() != reference.height() {
        return Err(MeasurementError::DimensionMismatch(
            target.width(),
            target.height(),
            reference.width(),
            reference.height(),
        ));
    }
    let (target_extent, target_area) =
        foreground(target, foreground_threshold).ok_or(MeasurementError::NoForeground("target"))?;
    let (reference_extent, reference_area) = foreground(reference, foreground_threshold)
        .ok_or(MeasurementError::NoForeground("reference"))?;
    Ok(SizeComparison {
        target_extent,
        reference_extent,
        target_area,
        reference_area,
        area_ratio: target_area as f64 / reference_area as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::SegMethod;

    fn map(width: usize, height: usize, black: Vec<bool>) -> BinaryMap {
        BinaryMap::new(width, height, black, SegMethod::FixedThreshold, Some(0.5)).unwrap()
    }

    #[test]
    fn roi_examples() {
        assert_eq!(make_roi(&RoiShape::Full, 4, 4).unwrap().area(), 16);
        let rect = RoiShape::Rect { x0: 1.0, y0: 1.0, x1: 2.0, y1: 2.0 };
        assert_eq!(make_roi(&rect, 4, 4).unwrap().area(), 4);
        let clipped = RoiShape::Rect { x0: -5.0, y0: 2.0, x1: 1.0, y1: 50.0 };
        assert_eq!(make_roi(&clipped, 4, 4).unwrap().area(), 4);
        let outside = RoiShape::Rect { x0: 10.0, y0: 0.0, x1: 12.0, y1: 3.0 };
        assert!(matches!(make_roi(&outside, 4, 4), Err(MeasurementError::EmptyRoi(..))));
        let bad = RoiShape::Ellipse { cx: 1.0, cy: 1.0, rx: 0.0, ry: 2.0 };
        assert!(matches!(make_roi(&bad, 4, 4), Err(MeasurementError::InvalidRoi(_))));
    }

    #[test]
    fn roi_json_forms() {
        assert_eq!(RoiShape::from_json(r#"{"shape":"full"}"#).unwrap(), RoiShape::Full);
        assert_eq!(
            RoiShape::from_json(r#"{"shape":"ellipse","cx":8,"cy":8,"rx":4,"ry":3}"#).unwrap(),
            RoiShape::Ellipse { cx: 8.0, cy: 8.0, rx: 4.0, ry: 3.0 }
        );
        assert!(RoiShape::from_json(r#"{"shape":"triangle"}"#).is_err());
        assert!(RoiShape::from_json(r#"{"shape":"rect","x0":1}"#).is_err());
    }

    #[test]
    fn counts_with_coordinates() {
        let bm = map(3, 3, vec![true; 9]);
        let roi = make_roi(&RoiShape::Full, 3, 3).unwrap();
        let c = count_pixels(&bm, &roi, false).unwrap();
        assert_eq!((c.black_count, c.white_count, c.roi_area), (9, 0, 9));
        assert!(c.black_coords.is_none());

        let bm = map(2, 2, vec![true, false, false, true]);
        let c = count_pixels(&bm, &roi_for(2, 2), true).unwrap();
        assert_eq!(c.black_coords.unwrap(), vec![[0, 0], [1, 1]]);
        assert_eq!(c.white_coords.unwrap(), vec![[1, 0], [0, 1]]);

        assert!(count_pixels(&bm, &roi, false).is_err());
    }

    fn roi_for(w: usize, h: usize) -> RoiMask {
        make_roi(&RoiShape::Full, w, h).unwrap()
    }

    #[test]
    fn size_comparison_examples() {
        let img = Image::from_fn(6, 6, |x, y| if (1..5).contains(&x) && (2..5).contains(&y) { 0.8 } else { 0.0 })
            .unwrap();
        let same = compare_sizes(&img, &img, 0.05).unwrap();
        assert_eq!(same.area_ratio, 1.0);
        assert_eq!(same.target_extent, [1, 2, 4, 4]);
        assert_eq!(same.target_extent, same.reference_extent);
        let empty = Image::filled(6, 6, 0.0).unwrap();
        assert_eq!(
            compare_sizes(&empty, &img, 0.05),
            Err(MeasurementError::NoForeground("target"))
        );
        assert!(compare_sizes(&img, &img, 1.0).is_err());
        assert!(compare_sizes(&img, &Image::filled(5, 6, 1.0).unwrap(), 0.5).is_err());
    }
}
