use super::image::Image;

/// Linear-interpolated percentile of an ascending-sorted slice, `p` in `[0, 100]`.
pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Contrast standardization mapping the 1st percentile to 0 and the 99th to 1.
///
/// Percentiles interpolate linearly between order statistics. When the two
/// percentiles coincide the full min/max range is used instead; a constant
/// image maps to all zeros.
pub fn normalize_intensity(img: &Image) -> Image {
    let mut sorted = img.data().to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut lo = percentile_sorted(&sorted, 1.0);
    let mut hi = percentile_sorted(&sorted, 99.0);
    if hi <= lo {
        lo = sorted[0];
        hi = sorted[sorted.len() - 1];
    }
    if hi <= lo {
        return Image::from_fn_clamped(img.width(), img.height(), |_, _| 0.0)
            .with_source_bit_depth(img.source_bit_depth());
    }
    let span = hi - lo;
    Image::from_fn_clamped(img.width(), img.height(), |x, y| (img.get(x, y) - lo) / span)
        .with_source_bit_depth(img.source_bit_depth())
}
