//! Browser demo: phantom segmentation overlay, resampling-kernel zoom and
//! landmark registration, exported through wasm-bindgen.

use mriscreen_core::imgcore::resize;
use mriscreen_core::phantom::{generate_phantom, Phantom, PhantomSpec};
use mriscreen_core::pipeline::{segment_stage, SegChoice, SegmentationParams};
use mriscreen_core::registration::{estimate_affine, warp_to_reference, AffineTransform2D, ControlPointPair};
use mriscreen_core::{Image, InterpKind};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const SIZE: usize = 128;

fn demo_spec(seed: u64, ventricle_radius: f64, noise_sd: f64) -> PhantomSpec {
    PhantomSpec {
        width: SIZE,
        height: SIZE,
        head_radius: 50.0,
        ventricle_radius,
        noise_sd,
        seed,
        ..PhantomSpec::default()
    }
}

fn phantom(seed: u64, ventricle_radius: f64, noise_sd: f64) -> Result<Phantom, JsError> {
    generate_phantom(&demo_spec(seed, ventricle_radius, noise_sd)).map_err(|e| JsError::new(&e.to_string()))
}

fn gray(v: f64) -> [u8; 4] {
    let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    [g, g, g, 255]
}

fn to_rgba(img: &Image) -> Vec<u8> {
    img.data().iter().flat_map(|&v| gray(v)).collect()
}

/// An RGBA image ready for `ImageData`.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Frame {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl Frame {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

impl Frame {
    fn from_image(img: &Image) -> Self {
        Self { width: img.width(), height: img.height(), rgba: to_rgba(img) }
    }
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SegmentationView {
    frame: Frame,
    threshold: f64,
    black_count: usize,
    truth_count: usize,
    agreement: f64,
}

#[wasm_bindgen]
impl SegmentationView {
    /// Slice with segmented pixels in red and disagreements with ground truth in yellow.
    #[wasm_bindgen(getter)]
    pub fn frame(&self) -> Frame {
        self.frame.clone()
    }

    /// Otsu threshold, or NaN for fuzzy c-means.
    #[wasm_bindgen(getter)]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[wasm_bindgen(getter)]
    pub fn black_count(&self) -> usize {
        self.black_count
    }

    #[wasm_bindgen(getter)]
    pub fn truth_count(&self) -> usize {
        self.truth_count
    }

    /// Fraction of head pixels whose label matches the ground truth.
    #[wasm_bindgen(getter)]
    pub fn agreement(&self) -> f64 {
        self.agreement
    }
}

/// Segments a noisy phantom with `method` ("otsu" or "fcm") and compares it with the ground truth.
#[wasm_bindgen]
pub fn segment_phantom(seed: u64, ventricle_radius: f64, noise_sd: f64, method: &str) -> Result<SegmentationView, JsError> {
    let method: SegChoice = method.parse().map_err(|e: String| JsError::new(&e))?;
    let p = phantom(seed, ventricle_radius, noise_sd)?;
    let params = SegmentationParams { method, ..SegmentationParams::default() };
    let (bm, record, _) = segment_stage(&p.image, &params).map_err(|e| JsError::new(&e.to_string()))?;

    let spec = demo_spec(seed, ventricle_radius, noise_sd);
    let [hx, hy] = spec.head_center();
    let mut rgba = Vec::with_capacity(SIZE * SIZE * 4);
    let (mut head, mut agree) = (0usize, 0usize);
    for (k, &v) in p.image.data().iter().enumerate() {
        let (x, y) = ((k % SIZE) as f64, (k / SIZE) as f64);
        let in_head = (x - hx).powi(2) + (y - hy).powi(2) <= spec.head_radius.powi(2);
        let (seg, truth) = (bm.black[k], p.ground_truth.black[k]);
        if in_head {
            head += 1;
            agree += (seg == truth) as usize;
        }
        rgba.extend(match (in_head && seg != truth, in_head && seg) {
            (true, _) => [255, 220, 0, 255],
            (false, true) => [220, 40, 40, 255],
            _ => gray(v),
        });
    }
    Ok(SegmentationView {
        frame: Frame { width: SIZE, height: SIZE, rgba },
        threshold: record.threshold_used.unwrap_or(f64::NAN),
        black_count: bm.black_count(),
        truth_count: p.ground_truth.black_count(),
        agreement: agree as f64 / head as f64,
    })
}

/// Upsamples a 16x16 patch on the ventricle edge by `factor` with the named kernel.
#[wasm_bindgen]
pub fn zoom_patch(kind: &str, factor: usize, noise_sd: f64) -> Result<Frame, JsError> {
    let kind: InterpKind = kind.parse().map_err(|e: String| JsError::new(&e))?;
    if !(1..=32).contains(&factor) {
        return Err(JsError::new("zoom factor must be between 1 and 32"));
    }
    let p = phantom(0, 20.0, noise_sd)?;
    let (x0, y0) = (SIZE / 2 + 12, SIZE / 2 - 8);
    let patch = Image::from_fn(16, 16, |x, y| p.image.get(x0 + x, y0 + y)).map_err(|e| JsError::new(&e.to_string()))?;
    let zoomed = resize(&patch, 16 * factor, 16 * factor, kind).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(Frame::from_image(&zoomed))
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct RegistrationView {
    subject: Frame,
    registered: Frame,
    difference: Frame,
    rmse: f64,
    coefficients: Vec<f64>,
    truth: Vec<f64>,
}

#[wasm_bindgen]
impl RegistrationView {
    #[wasm_bindgen(getter)]
    pub fn subject(&self) -> Frame {
        self.subject.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn registered(&self) -> Frame {
        self.registered.clone()
    }

    /// |registered − reference|, brightened 4×.
    #[wasm_bindgen(getter)]
    pub fn difference(&self) -> Frame {
        self.difference.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn rmse(&self) -> f64 {
        self.rmse
    }

    /// Estimated `[a, b, c, d, e, f]`.
    #[wasm_bindgen(getter)]
    pub fn coefficients(&self) -> Vec<f64> {
        self.coefficients.clone()
    }

    /// The transform used to build the subject.
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }
}

/// Moves the phantom by a rotation/scale/shift, jitters 8 landmarks by up to
/// `jitter` px, then fits the affine and warps the subject back.
#[wasm_bindgen]
pub fn register_demo(angle_deg: f64, scale: f64, tx: f64, ty: f64, jitter: f64, seed: u64) -> Result<RegistrationView, JsError> {
    let err = |e: &dyn std::fmt::Display| JsError::new(&e.to_string());
    if !(scale > 0.0) || !jitter.is_finite() || jitter < 0.0 {
        return Err(JsError::new("scale must be positive and jitter non-negative"));
    }
    let reference = phantom(1, 20.0, 0.02)?;
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let c = (SIZE / 2) as f64;
    // Reference-to-subject map: rotate and scale about the image center, then shift.
    let (a, b, d, e) = (scale * cos, -scale * sin, scale * sin, scale * cos);
    let truth = AffineTransform2D::new(a, b, c - a * c - b * c + tx, d, e, c - d * c - e * c + ty).map_err(|e| err(&e))?;
    let inverse = truth.inverse().map_err(|e| err(&e))?;
    let subject = warp_to_reference(&reference.image, &inverse, SIZE, SIZE, InterpKind::Bilinear).map_err(|e| err(&e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wobble = || jitter * (2.0 * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 1.0);
    let r = 50.0;
    let s = r * std::f64::consts::FRAC_1_SQRT_2;
    let pairs: Vec<ControlPointPair> = [[0.0, -r], [0.0, r], [-r, 0.0], [r, 0.0], [s, s], [-s, s], [s, -s], [-s, -s]]
        .iter()
        .map(|&[dx, dy]| {
            let p = [c + dx, c + dy];
            let q = truth.apply(p);
            ControlPointPair::new(p, [q[0] + wobble(), q[1] + wobble()])
        })
        .collect();
    let fit = estimate_affine(&pairs).map_err(|e| err(&e))?;
    let registered = warp_to_reference(&subject, &fit.transform, SIZE, SIZE, InterpKind::Bilinear).map_err(|e| err(&e))?;
    let diff = Image::from_fn(SIZE, SIZE, |x, y| ((registered.get(x, y) - reference.image.get(x, y)).abs() * 4.0).min(1.0))
        .map_err(|e| err(&e))?;
    Ok(RegistrationView {
        subject: Frame::from_image(&subject),
        registered: Frame::from_image(&registered),
        difference: Frame::from_image(&diff),
        rmse: fit.rmse,
        coefficients: fit.transform.coefficients().to_vec(),
        truth: truth.coefficients().to_vec(),
    })
}
