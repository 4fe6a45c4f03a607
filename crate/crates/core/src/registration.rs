//! Landmark-based affine registration.
//!
//! Transforms are fitted in the reference → subject direction, so warping a
//! subject into reference space samples the subject at `T(p)` for every
//! reference pixel `p` without inverting anything.

use serde::{Deserialize, Serialize};

use crate::imgcore::{self, Image, InterpKind};

/// Smallest admissible `|ae - bd|`.
pub const MIN_DETERMINANT: f64 = 1e-9;
/// Reference landmarks whose largest triangle is smaller than this (px²) are collinear.
pub const MIN_TRIANGLE_AREA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegistrationError {
    #[error("at least 3 landmark pairs are required, got {0}")]
    InsufficientLandmarks(usize),
    #[error("reference landmarks are collinear (largest triangle area {0:e} px²)")]
    Degenerate(f64),
    #[error("affine transform is singular (determinant {0:e})")]
    Singular(f64),
    #[error("non-finite coordinate in landmark pair {0}")]
    NonFinite(usize),
    #[error("residual needs at least one landmark pair")]
    NoPairs,
    #[error("invalid landmark file: {0}")]
    Parse(String),
    #[error(transparent)]
    Image(#[from] imgcore::ImageError),
}

/// A biomarker seen in both images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPointPair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(rename = "ref")]
    pub ref_point: [f64; 2],
    #[serde(rename = "subj")]
    pub subj_point: [f64; 2],
}

impl ControlPointPair {
    pub fn new(ref_point: [f64; 2], subj_point: [f64; 2]) -> Self {
        Self {
            label: None,
            ref_point,
            subj_point,
        }
    }

    pub fn labeled(label: impl Into<String>, ref_point: [f64; 2], subj_point: [f64; 2]) -> Self {
        Self {
            label: Some(label.into()),
            ref_point,
            subj_point,
        }
    }
}

/// `(x, y) ↦ (a·x + b·y + c, d·x + e·y + f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform2D {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineTransform2D {
    pub const IDENTITY: AffineTransform2D = AffineTransform2D {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        e: 1.0,
        f: 0.0,
    };

    /// Validated constructor; rejects singular or non-finite coefficients.
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self, RegistrationError> {
        let t = Self { a, b, c, d, e, f };
        t.check()?;
        Ok(t)
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            c: dx,
            f: dy,
            ..Self::IDENTITY
        }
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    pub fn from_coefficients(k: [f64; 6]) -> Self {
        Self {
            a: k[0],
            b: k[1],
            c: k[2],
            d: k[3],
            e: k[4],
            f: k[5],
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn check(&self) -> Result<(), RegistrationError> {
        let det = self.determinant();
        if !self.coefficients().iter().all(|k| k.is_finite()) || !(det.abs() > MIN_DETERMINANT) {
            return Err(RegistrationError::Singular(det));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.a * p[0] + self.b * p[1] + self.c,
            self.d * p[0] + self.e * p[1] + self.f,
        ]
    }

    pub fn inverse(&self) -> Result<Self, RegistrationError> {
        self.check()?;
        let det = self.determinant();
        let (a, b, d, e) = (self.e / det, -self.b / det, -self.d / det, self.a / det);
        Ok(Self {
            a,
            b,
            c: -(a * self.c + b * self.f),
            d,
            e,
            f: -(d * self.c + e * self.f),
        })
    }
}

pub fn apply_affine(t: &AffineTransform2D, p: [f64; 2]) -> [f64; 2] {
    t.apply(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    pub transform: AffineTransform2D,
    pub rmse: f64,
    pub pair_count: usize,
}

fn triangle_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])).abs()
}

fn largest_triangle_area(points: &[[f64; 2]]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            for k in j + 1..points.len() {
                best = best.max(triangle_area(points[i], points[j], points[k]));
            }
        }
    }
    best
}

/// Least-squares affine fit mapping reference landmarks onto subject landmarks.
///
/// Coordinates are centered on the reference centroid, which splits the
/// normal equations into a 2×2 system for the linear part of each output
/// row; the offsets then follow from the centroids.
pub fn estimate_affine(pairs: &[ControlPointPair]) -> Result<RegistrationResult, RegistrationError> {
    if pairs.len() < 3 {
        return Err(RegistrationError::InsufficientLandmarks(pairs.len()));
    }
    for (i, p) in pairs.iter().enumerate() {
        if !p.ref_point.iter().chain(&p.subj_point).all(|v| v.is_finite()) {
            return Err(RegistrationError::NonFinite(i));
        }
    }
    let refs: Vec<[f64; 2]> = pairs.iter().map(|p| p.ref_point).collect();
    let area = largest_triangle_area(&refs);
    if !(area > MIN_TRIANGLE_AREA) {
        return Err(RegistrationError::Degenerate(area));
    }

    let n = pairs.len() as f64;
    let mean = |f: &dyn Fn(&ControlPointPair) -> f64| pairs.iter().map(f).sum::<f64>() / n;
    let (mx, my) = (mean(&|p| p.ref_point[0]), mean(&|p| p.ref_point[1]));
    let (mu, mv) = (mean(&|p| p.subj_point[0]), mean(&|p| p.subj_point[1]));

    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    let (mut sxu, mut syu, mut sxv, mut syv) = (0.0, 0.0, 0.0, 0.0);
    for p in pairs {
        let dx = p.ref_point[0] - mx;
        let dy = p.ref_point[1] - my;
        let du = p.subj_point[0] - mu;
        let dv = p.subj_point[1] - mv;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxu += dx * du;
        syu += dy * du;
        sxv += dx * dv;
        syv += dy * dv;
    }
    let det = sxx * syy - sxy * sxy;
    if !(det.abs() > 0.0) {
        return Err(RegistrationError::Degenerate(area));
    }
    let a = (sxu * syy - syu * sxy) / det;
    let b = (syu * sxx - sxu * sxy) / det;
    let d = (sxv * syy - syv * sxy) / det;
    let e = (syv * sxx - sxv * sxy) / det;
    let transform = AffineTransform2D::new(a, b, mu - a * mx - b * my, d, e, mv - d * mx - e * my)?;
    let rmse = registration_residual(&transform, pairs)?;
    Ok(RegistrationResult {
        transform,
        rmse,
        pair_count: pairs.len(),
    })
}

/// Root-mean-square landmark distance `‖T(ref) − subj‖` over all pairs.
pub fn registration_residual(
    t: &AffineTransform2D,
    pairs: &[ControlPointPair],
) -> Result<f64, RegistrationError> {
    if pairs.is_empty() {
        return Err(RegistrationError::NoPairs);
    }
    let sum: f64 = pairs
        .iter()
        .map(|p| {
            let q = t.apply(p.ref_point);
            (q[0] - p.subj_point[0]).powi(2) + (q[1] - p.subj_point[1]).powi(2)
        })
        .sum();
    Ok((sum / pairs.len() as f64).sqrt())
}

/// Resamples `subject` onto a `ref_width × ref_height` grid through `t`.
pub fn warp_to_reference(
    subject: &Image,
    t: &AffineTransform2D,
    ref_width: usize,
    ref_height: usize,
    kind: InterpKind,
) -> Result<Image, RegistrationError> {
    t.check()?;
    if ref_width == 0 || ref_height == 0 {
        return Err(imgcore::ImageError::ZeroDimension {
            width: ref_width,
            height: ref_height,
        }
        .into());
    }
    Ok(Image::from_fn_clamped(ref_width, ref_height, |x, y| {
        let [sx, sy] = t.apply([x as f64, y as f64]);
        imgcore::interp_sample(subject, sx, sy, kind)
    })
    .with_source_bit_depth(subject.source_bit_depth()))
}

pub fn parse_landmarks(json: &str) -> Result<Vec<ControlPointPair>, RegistrationError> {
    serde_json::from_str(json).map_err(|e| RegistrationError::Parse(e.to_string()))
}

pub fn landmarks_to_json(pairs: &[ControlPointPair]) -> String {
    serde_json::to_string_pretty(pairs).expect("landmarks serialize")
}
