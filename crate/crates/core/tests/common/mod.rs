//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use mriscreen_core::registration::ControlPointPair;
use mriscreen_core::Image;
use rand::Rng;

/// Gaussian elimination with partial pivoting on a 3×3 system.
pub fn gauss_solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// Least-squares affine coefficients from the uncentered 3×3 normal equations.
pub fn affine_normal_equations(pairs: &[ControlPointPair]) -> [f64; 6] {
    let mut m = [[0.0; 3]; 3];
    let mut bu = [0.0; 3];
    let mut bv = [0.0; 3];
    for p in pairs {
        let row = [p.ref_point[0], p.ref_point[1], 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            bu[i] += row[i] * p.subj_point[0];
            bv[i] += row[i] * p.subj_point[1];
        }
    }
    let u = gauss_solve3(m, bu);
    let v = gauss_solve3(m, bv);
    [u[0], u[1], u[2], v[0], v[1], v[2]]
}

pub fn sum_squared_residuals(k: &[f64; 6], pairs: &[ControlPointPair]) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let [x, y] = p.ref_point;
            let u = k[0] * x + k[1] * y + k[2];
            let v = k[3] * x + k[4] * y + k[5];
            (u - p.subj_point[0]).powi(2) + (v - p.subj_point[1]).powi(2)
        })
        .sum()
}

pub fn rmse_by_summation(k: &[f64; 6], pairs: &[ControlPointPair]) -> f64 {
    (sum_squared_residuals(k, pairs) / pairs.len() as f64).sqrt()
}

/// Exhaustive Otsu: every split `k`, class sizes and sums tallied from scratch.
/// Between-class variance `n0·n1·(S0/n0 − S1/n1)² / N²` is compared as the exact
/// fraction `(n1·S0 − n0·S1)² / (n0·n1)`, and only a strict improvement replaces
/// the best, so the lowest of tied thresholds wins.
pub fn otsu_exhaustive(counts: &[u64]) -> Option<f64> {
    let bins = counts.len();
    let mut best: Option<(usize, u128, u128)> = None;
    for k in 1..bins {
        let (mut n0, mut s0, mut n1, mut s1) = (0u128, 0u128, 0u128, 0u128);
        for (i, &c) in counts.iter().enumerate() {
            if i < k {
                n0 += c as u128;
                s0 += i as u128 * c as u128;
            } else {
                n1 += c as u128;
                s1 += i as u128 * c as u128;
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (n1 * s0).abs_diff(n0 * s1);
        let (num, den) = (diff * diff, n0 * n1);
        if best.map_or(true, |(_, bn, bd)| num * bd > bn * den) {
            best = Some((k, num, den));
        }
    }
    best.map(|(k, _, _)| k as f64 / bins as f64)
}

/// The textbook four-term bilinear blend.
pub fn bilinear_closed_form(img: &Image, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let v00 = img.get(x0, y0);
    let v10 = img.get(x0 + 1, y0);
    let v01 = img.get(x0, y0 + 1);
    let v11 = img.get(x0 + 1, y0 + 1);
    (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11
}

pub fn random_image<R: Rng>(rng: &mut R, width: usize, height: usize) -> Image {
    let data = (0..width * height).map(|_| rng.random::<f64>()).collect();
    Image::new(width, height, data).unwrap()
}

/// Mean by summation, then variance from deviations about that mean.
pub fn two_pass_mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut mean = 0.0;
    for x in xs {
        mean += x;
    }
    mean /= n;
    let mut ss = 0.0;
    for x in xs {
        ss += (x - mean) * (x - mean);
    }
    (mean, (ss / (n - 1.0)).sqrt())
}

/// A random affine with |det| in [0.5, 2] and translations within ±20 px.
pub fn random_affine<R: Rng>(rng: &mut R) -> [f64; 6] {
    loop {
        let a = rng.random_range(-1.6..1.6);
        let b = rng.random_range(-1.0..1.0);
        let d = rng.random_range(-1.0..1.0);
        let e = rng.random_range(-1.6..1.6);
        let det: f64 = a * e - b * d;
        if (0.5..=2.0).contains(&det.abs()) {
            return [a, b, rng.random_range(-20.0..20.0), d, e, rng.random_range(-20.0..20.0)];
        }
    }
}

pub fn apply6(k: &[f64; 6], p: [f64; 2]) -> [f64; 2] {
    [k[0] * p[0] + k[1] * p[1] + k[2], k[3] * p[0] + k[4] * p[1] + k[5]]
}

/// A fixed phantom pair run through the default pipeline at the epoch timestamp.
pub fn golden_run() -> mriscreen_core::pipeline::PipelineOutput {
    use mriscreen_core::analysis::{NormativeBaseline, AREA_RATIO, CAVITY_RATIO};
    use mriscreen_core::measurement::RoiShape;
    use mriscreen_core::phantom::{generate_phantom, PhantomSpec};
    use mriscreen_core::pipeline::{run, PipelineInputs, PipelineParams, Subject};

    let base = PhantomSpec { width: 128, height: 128, head_radius: 50.0, ventricle_radius: 10.0, ..PhantomSpec::default() };
    let reference = generate_phantom(&base).unwrap();
    let target = generate_phantom(&PhantomSpec { ventricle_radius: 14.0, head_radius: 47.0, seed: 5, ..base }).unwrap();
    let row = |metric: &str, mean: f64, sd: f64| NormativeBaseline {
        age_min: 60.0,
        age_max: 80.0,
        metric: metric.into(),
        mean,
        sd,
        n: 20,
    };
    let baselines = [row(CAVITY_RATIO, 0.045, 0.01), row(AREA_RATIO, 1.0, 0.05)];
    let roi = RoiShape::Ellipse { cx: 64.0, cy: 64.0, rx: 40.0, ry: 40.0 };
    let inputs = PipelineInputs {
        target: &target.image,
        reference: &reference.image,
        landmarks: &target.landmarks,
        roi: &roi,
        baselines: &baselines,
        subject: Subject { id: "phantom-05".into(), age: 72.0 },
    };
    run(&inputs, &PipelineParams::default(), chrono::DateTime::<chrono::Utc>::UNIX_EPOCH).unwrap()
}

pub fn golden_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/phantom_report.txt")
}
