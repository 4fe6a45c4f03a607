use serde::{Deserialize, Serialize};

use super::SegmentationError;
use crate::imgcore::Image;

pub const DEFAULT_BINS: usize = 256;

/// Intensity histogram; bin `i` covers `[i/n, (i+1)/n)`, the last bin is closed above.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self, SegmentationError> {
        if counts.len() < 2 {
            return Err(SegmentationError::TooFewBins(counts.len()));
        }
        let total = counts.iter().sum();
        Ok(Self { counts, total })
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn bin_of(bin_count: usize, v: f64) -> usize {
        ((v * bin_count as f64).floor() as usize).min(bin_count - 1)
    }
}

pub fn histogram(img: &Image, bin_count: usize) -> Result<Histogram, SegmentationError> {
    if bin_count < 2 {
        return Err(SegmentationError::TooFewBins(bin_count));
    }
    let mut counts = vec![0u64; bin_count];
    for &v in img.data() {
        counts[Histogram::bin_of(bin_count, v)] += 1;
    }
    Ok(Histogram {
        counts,
        total: img.len() as u64,
    })
}

/// Otsu threshold at a bin boundary, returned as `k / bin_count`.
///
/// Splitting before bin `k` puts bins `0..k` in the dark class. The score
/// `(N·S₀ − n₀·S)² / (n₀·n₁)` is proportional to the between-class variance
/// `ω₀ω₁(μ₀ − μ₁)²`; its numerator is formed in exact integer arithmetic so
/// splits with identical class statistics score identically and the
/// ascending scan keeps the lowest of any tied thresholds.
pub fn otsu_threshold(h: &Histogram) -> Result<f64, SegmentationError> {
    let bins = h.bin_count();
    if h.counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(SegmentationError::DegenerateHistogram);
    }
    let n = h.total as i128;
    let s: i128 = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| i as i128 * c as i128)
        .sum();

    let mut n0: i128 = 0;
    let mut s0: i128 = 0;
    let mut best: Option<(usize, f64)> = None;
    for k in 1..bins {
        let c = h.counts[k - 1] as i128;
        n0 += c;
        s0 += (k as i128 - 1) * c;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (n * s0 - n0 * s) as f64;
        let score = diff * diff / (n0 as f64 * n1 as f64);
        if best.map_or(true, |(_, b)| score > b) {
            best = Some((k, score));
        }
    }
    best.map(|(k, _)| k as f64 / bins as f64)
        .ok_or(SegmentationError::DegenerateHistogram)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_examples() {
        let zero = Image::filled(4, 4, 0.0).unwrap();
        let h = histogram(&zero, 256).unwrap();
        assert_eq!(h.counts()[0], 16);
        assert_eq!(h.counts()[1..].iter().sum::<u64>(), 0);
        let two = Image::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(histogram(&two, 2).unwrap().counts(), &[1, 1]);
        assert_eq!(histogram(&two, 1), Err(SegmentationError::TooFewBins(1)));
    }

    #[test]
    fn adjacent_spikes_split_between_them() {
        let mut counts = vec![0; 256];
        counts[100] = 40;
        counts[101] = 40;
        let t = otsu_threshold(&Histogram::from_counts(counts).unwrap()).unwrap();
        assert_eq!(t, 101.0 / 256.0);
    }

    #[test]
    fn separated_spikes_take_lowest_tied_split() {
        let mut counts = vec![0; 256];
        counts[10] = 7;
        counts[200] = 7;
        let t = otsu_threshold(&Histogram::from_counts(counts).unwrap()).unwrap();
        assert_eq!(t, 11.0 / 256.0);
    }

    #[test]
    fn single_bin_is_degenerate() {
        let h = histogram(&Image::filled(3, 3, 0.4).unwrap(), 256).unwrap();
        assert_eq!(otsu_threshold(&h), Err(SegmentationError::DegenerateHistogram));
    }
}
