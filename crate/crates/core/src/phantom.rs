//! Synthetic brain-slice phantoms: a bright head disk holding one dark
//! ventricle disk, with seeded Gaussian noise.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imgcore::Image;
use crate::registration::ControlPointPair;
use crate::segmentation::{BinaryMap, SegMethod};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid phantom spec: {0}")]
pub struct PhantomError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub head_radius: f64,
    pub ventricle_radius: f64,
    /// Ventricle center relative to the head center, in pixels.
    pub ventricle_offset: [f64; 2],
    pub tissue_intensity: f64,
    pub cavity_intensity: f64,
    pub background_intensity: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            head_radius: 100.0,
            ventricle_radius: 20.0,
            ventricle_offset: [0.0, 0.0],
            tissue_intensity: 0.7,
            cavity_intensity: 0.1,
            background_intensity: 0.0,
            noise_sd: 0.03,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// Head center: the pixel at `(width / 2, height / 2)`.
    pub fn head_center(&self) -> [f64; 2] {
        [(self.width / 2) as f64, (self.height / 2) as f64]
    }

    pub fn ventricle_center(&self) -> [f64; 2] {
        let [cx, cy] = self.head_center();
        [cx + self.ventricle_offset[0], cy + self.ventricle_offset[1]]
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let fail = |m: &str| Err(PhantomError(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return fail("dimensions must be at least 1x1");
        }
        for (name, v) in [
            ("tissue_intensity", self.tissue_intensity),
            ("cavity_intensity", self.cavity_intensity),
            ("background_intensity", self.background_intensity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PhantomError(format!("{name} {v} outside [0, 1]")));
            }
        }
        if !(self.cavity_intensity < self.tissue_intensity) {
            return fail("cavity_intensity must be below tissue_intensity");
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return fail("noise_sd must be finite and >= 0");
        }
        if !(self.head_radius > 0.0) || !(self.ventricle_radius > 0.0) {
            return fail("radii must be positive");
        }
        let [ox, oy] = self.ventricle_offset;
        let reach = (ox * ox + oy * oy).sqrt() + self.ventricle_radius;
        if !(reach < self.head_radius) {
            return fail("ventricle disk must lie strictly inside the head disk");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: Image,
    pub ground_truth: BinaryMap,
    pub landmarks: Vec<ControlPointPair>,
}

/// Standard normal deviates from the Box–Muller transform over a ChaCha8 stream.
struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn in_disk(x: usize, y: usize, center: [f64; 2], radius: f64) -> bool {
    let dx = x as f64 - center[0];
    let dy = y as f64 - center[1];
    dx * dx + dy * dy <= radius * radius
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom, PhantomError> {
    spec.validate()?;
    let head = spec.head_center();
    let ventricle = spec.ventricle_center();
    let mut noise = GaussianStream::new(spec.seed);

    let mut data = Vec::with_capacity(spec.width * spec.height);
    let mut black = Vec::with_capacity(spec.width * spec.height);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let in_ventricle = in_disk(x, y, ventricle, spec.ventricle_radius);
            let base = if in_ventricle {
                spec.cavity_intensity
            } else if in_disk(x, y, head, spec.head_radius) {
                spec.tissue_intensity
            } else {
                spec.background_intensity
            };
            let v = if spec.noise_sd > 0.0 {
                base + spec.noise_sd * noise.next()
            } else {
                base
            };
            data.push(v.clamp(0.0, 1.0));
            black.push(in_ventricle);
        }
    }
    let image = Image::new(spec.width, spec.height, data).map_err(|e| PhantomError(e.to_string()))?;
    let ground_truth = BinaryMap::new(spec.width, spec.height, black, SegMethod::GroundTruth, None)
        .map_err(|e| PhantomError(e.to_string()))?;

    let r = spec.head_radius;
    let [cx, cy] = head;
    let landmarks = [
        ("head_top", [cx, cy - r]),
        ("head_bottom", [cx, cy + r]),
        ("head_left", [cx - r, cy]),
        ("head_right", [cx + r, cy]),
    ]
    .into_iter()
    .map(|(label, p)| ControlPointPair::labeled(label, p, p))
    .collect();

    Ok(Phantom {
        image,
        ground_truth,
        landmarks,
    })
}
