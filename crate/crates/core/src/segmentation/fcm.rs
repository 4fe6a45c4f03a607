//! Fuzzy C-means on the 1D intensity feature, with an optional spatial pass.

use serde::{Deserialize, Serialize};

use super::{BinaryMap, SegMethod, SegmentationError};
use crate::imgcore::{percentile_sorted, Image};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcmParams {
    pub clusters: usize,
    pub fuzzifier: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub spatial_window: usize,
    /// Recorded for provenance; initialization is deterministic.
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        Self {
            clusters: 3,
            fuzzifier: 2.0,
            tolerance: 1e-5,
            max_iter: 300,
            spatial_window: 0,
            seed: 0,
        }
    }
}

impl FcmParams {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        let bad = |m: String| Err(SegmentationError::InvalidParameter(m));
        if self.clusters < 2 {
            return bad(format!("cluster count must be >= 2, got {}", self.clusters));
        }
        if !(self.fuzzifier > 1.0) || !self.fuzzifier.is_finite() {
            return bad(format!("fuzzifier must be > 1, got {}", self.fuzzifier));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return bad(format!("tolerance must be > 0, got {}", self.tolerance));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMap {
    pub width: usize,
    pub height: usize,
    pub cluster_count: usize,
    /// Ascending.
    pub centers: Vec<f64>,
    /// Pixel-major: `memberships[p * cluster_count + i]`.
    pub memberships: Vec<f64>,
    pub fuzzifier: f64,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_objective: f64,
    /// Objective after the initial membership update and after every iteration.
    pub objective_history: Vec<f64>,
}

impl MembershipMap {
    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.memberships[p * self.cluster_count..(p + 1) * self.cluster_count]
    }
}

/// Writes the optimal memberships for fixed `centers` into `out`.
fn update_memberships(data: &[f64], centers: &[f64], m: f64, out: &mut [f64]) {
    let c = centers.len();
    let exponent = 2.0 / (m - 1.0);
    for (k, &x) in data.iter().enumerate() {
        let row = &mut out[k * c..(k + 1) * c];
        let mut dmin = f64::INFINITY;
        let mut hit = None;
        for (i, &v) in centers.iter().enumerate() {
            let d = (x - v).abs();
            if d == 0.0 && hit.is_none() {
                hit = Some(i);
            }
            dmin = dmin.min(d);
        }
        if let Some(h) = hit {
            row.fill(0.0);
            row[h] = 1.0;
            continue;
        }
        // u_i = 1 / Σ_j (d_i/d_j)^p, evaluated as (dmin/d_i)^p normalized,
        // which cannot overflow.
        let mut sum = 0.0;
        for (i, &v) in centers.iter().enumerate() {
            let r = (dmin / (x - v).abs()).powf(exponent);
            row[i] = r;
            sum += r;
        }
        for u in row.iter_mut() {
            *u /= sum;
        }
    }
}

fn objective(data: &[f64], centers: &[f64], m: f64, u: &[f64]) -> f64 {
    let c = centers.len();
    data.iter()
        .enumerate()
        .map(|(k, &x)| {
            centers
                .iter()
                .enumerate()
                .map(|(i, &v)| u[k * c + i].powf(m) * (x - v) * (x - v))
                .sum::<f64>()
        })
        .sum()
}

fn update_centers(data: &[f64], previous: &[f64], m: f64, u: &[f64]) -> Vec<f64> {
    let c = previous.len();
    let mut num = vec![0.0; c];
    let mut den = vec![0.0; c];
    for (k, &x) in data.iter().enumerate() {
        for i in 0..c {
            let w = u[k * c + i].powf(m);
            num[i] += w * x;
            den[i] += w;
        }
    }
    (0..c)
        .map(|i| if den[i] > 0.0 { num[i] / den[i] } else { previous[i] })
        .collect()
}

/// Centers at evenly spaced quantiles `(i + ½)/c` of the intensity
/// distribution, or of the distinct intensities when those collide.
fn initial_centers(sorted: &[f64], distinct: &[f64], c: usize) -> Vec<f64> {
    let quantiles = |values: &[f64]| -> Vec<f64> {
        (0..c)
            .map(|i| percentile_sorted(values, 100.0 * (i as f64 + 0.5) / c as f64))
            .collect()
    };
    let centers = quantiles(sorted);
    if centers.windows(2).all(|w| w[0] < w[1]) {
        centers
    } else {
        quantiles(distinct)
    }
}

pub fn fcm_segment(img: &Image, params: &FcmParams) -> Result<MembershipMap, SegmentationError> {
    params.validate()?;
    let c = params.clusters;
    let m = params.fuzzifier;
    let data = img.data();

    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < c {
        return Err(SegmentationError::DegenerateInput {
            distinct: distinct.len(),
            clusters: c,
        });
    }

    let mut centers = initial_centers(&sorted, &distinct, c);
    let mut u = vec![0.0; data.len() * c];
    update_memberships(data, &centers, m, &mut u);
    let mut history = vec![objective(data, &centers, m, &u)];
    let mut iterations_run = 0;
    let mut converged = false;
    while iterations_run < params.max_iter {
        let next = update_centers(data, &centers, m, &u);
        update_memberships(data, &next, m, &mut u);
        history.push(objective(data, &next, m, &u));
        iterations_run += 1;
        let shift = next
            .iter()
            .zip(&centers)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        centers = next;
        if shift < params.tolerance {
            converged = true;
            break;
        }
    }

    // Keep clusters ordered by center so index 0 is always the darkest class.
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| centers[i].total_cmp(&centers[j]));
    if order.iter().enumerate().any(|(pos, &i)| pos != i) {
        centers = order.iter().map(|&i| centers[i]).collect();
        let mut permuted = vec![0.0; u.len()];
        for k in 0..data.len() {
            for (pos, &i) in order.iter().enumerate() {
                permuted[k * c + pos] = u[k * c + i];
            }
        }
        u = permuted;
    }

    let final_objective = *history.last().expect("history is never empty");
    if params.spatial_window > 0 {
        u = spatial_pass(&u, img.width(), img.height(), c, params.spatial_window);
    }

    Ok(MembershipMap {
        width: img.width(),
        height: img.height(),
        cluster_count: c,
        centers,
        memberships: u,
        fuzzifier: m,
        iterations_run,
        converged,
        final_objective,
        objective_history: history,
    })
}

/// `u'_ik ∝ u_ik · Σ_{j ∈ window(k)} u_ij`, renormalized per pixel.
fn spatial_pass(u: &[f64], width: usize, height: usize, c: usize, window: usize) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    let mut h = vec![0.0; c];
    for y in 0..height {
        let (y0, y1) = (y.saturating_sub(window), (y + window).min(height - 1));
        for x in 0..width {
            let (x0, x1) = (x.saturating_sub(window), (x + window).min(width - 1));
            h.fill(0.0);
            for ny in y0..=y1 {
                for nx in x0..=x1 {
                    let q = ny * width + nx;
                    for (i, hi) in h.iter_mut().enumerate() {
                        *hi += u[q * c + i];
                    }
                }
            }
            let k = y * width + x;
            let mut sum = 0.0;
            for i in 0..c {
                let v = u[k * c + i] * h[i];
                out[k * c + i] = v;
                sum += v;
            }
            // Every pixel keeps a positive membership in its own dominant
            // cluster, which is also counted in its own window, so sum > 0.
            for v in &mut out[k * c..(k + 1) * c] {
                *v /= sum;
            }
        }
    }
    out
}

/// Black ⇔ the darkest cluster holds a maximal membership (ties go to black).
pub fn memberships_to_binary(mm: &MembershipMap) -> BinaryMap {
    let c = mm.cluster_count;
    let black = (0..mm.width * mm.height)
        .map(|k| {
            let row = &mm.memberships[k * c..(k + 1) * c];
            row[1..].iter().all(|&v| row[0] >= v)
        })
        .collect();
    BinaryMap {
        width: mm.width,
        height: mm.height,
        black,
        threshold_used: None,
        method: SegMethod::Fcm,
    }
}
