//! Contrast enhancement: intensity histogram, cumulative distribution,
//! min-max normalization and histogram equalization.

use crate::imaging::{round_half_up, GrayImage};

pub const LEVELS: usize = 256;

/// 256-bin intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntensityHistogram {
    pub counts: [u64; LEVELS],
    pub total: u64,
}

/// Running sum of an [`IntensityHistogram`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulativeDistribution {
    pub cdf: [u64; LEVELS],
}

pub fn compute_histogram(img: &GrayImage) -> IntensityHistogram {
    let mut counts = [0u64; LEVELS];
    for &v in img.data() {
        counts[v as usize] += 1;
    }
    IntensityHistogram {
        counts,
        total: img.data().len() as u64,
    }
}

pub fn compute_cdf(hist: &IntensityHistogram) -> CumulativeDistribution {
    let mut cdf = [0u64; LEVELS];
    let mut running = 0u64;
    for (slot, &count) in cdf.iter_mut().zip(&hist.counts) {
        running += count;
        *slot = running;
    }
    CumulativeDistribution { cdf }
}

/// Stretches the intensity range to [0, 255]. Constant images pass through.
pub fn minmax_normalize(img: &GrayImage) -> GrayImage {
    let lo = *img.data().iter().min().expect("non-empty image");
    let hi = *img.data().iter().max().expect("non-empty image");
    if lo == hi {
        return img.clone();
    }
    let span = (hi - lo) as f64;
    let data = img
        .data()
        .iter()
        .map(|&v| round_half_up((v - lo) as f64 * 255.0 / span))
        .collect();
    GrayImage::new(img.width(), img.height(), data).unwrap()
}

/// Histogram equalization via the cdf transfer map
/// out(v) = round((cdf(v) - cdf_min) / (N - cdf_min) * 255).
/// Single-level images pass through.
pub fn equalize(img: &GrayImage) -> GrayImage {
    let hist = compute_histogram(img);
    let cdf = compute_cdf(&hist);
    let cdf_min = cdf.cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    let total = hist.total;
    if cdf_min == total {
        return img.clone();
    }
    let denom = (total - cdf_min) as f64;
    let mut map = [0u8; LEVELS];
    for (level, slot) in map.iter_mut().enumerate() {
        let c = cdf.cdf[level];
        *slot = round_half_up((c.saturating_sub(cdf_min)) as f64 / denom * 255.0);
    }
    let data = img.data().iter().map(|&v| map[v as usize]).collect();
    GrayImage::new(img.width(), img.height(), data).unwrap()
}
