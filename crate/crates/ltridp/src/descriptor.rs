//! Local tri-directional pattern codes: per-neighbor difference triples, a
//! ternary pattern split into two binary code maps, a magnitude code map,
//! per-map histograms and the concatenated feature vector. A plain LBP code
//! is included as a baseline descriptor.

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// The 8-neighborhood of an interior pixel, clockwise from the top-left:
/// NW, N, NE, E, SE, S, SW, W.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborRing {
    pub values: [u8; 8],
    pub center: u8,
}

/// Signed differences of one neighbor against its previous neighbor, its
/// next neighbor and the center pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceTriple {
    pub d1: i16,
    pub d2: i16,
    pub d3: i16,
}

/// Histogram bin counts for code maps. `Full` keeps one bin per 8-bit code;
/// `Compat150` coarsens to 50 bins so the three-map feature is 150-dim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Bins {
    #[serde(rename = "256")]
    Full,
    #[serde(rename = "50")]
    Compat150,
}

impl Bins {
    pub fn count(self) -> usize {
        match self {
            Bins::Full => 256,
            Bins::Compat150 => 50,
        }
    }

    #[inline]
    fn index(self, code: u8) -> usize {
        match self {
            Bins::Full => code as usize,
            Bins::Compat150 => code as usize * 50 / 256,
        }
    }
}

/// The three per-interior-pixel code planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMaps {
    pub width: usize,
    pub height: usize,
    pub pattern1: Vec<u8>,
    pub pattern2: Vec<u8>,
    pub magnitude: Vec<u8>,
}

pub fn neighbor_ring(img: &GrayImage, x: usize, y: usize) -> Result<NeighborRing> {
    if x == 0 || y == 0 || x + 1 >= img.width() || y + 1 >= img.height() {
        return Err(Error::OutOfDomain { x, y });
    }
    Ok(NeighborRing {
        values: [
            img.get(x - 1, y - 1),
            img.get(x, y - 1),
            img.get(x + 1, y - 1),
            img.get(x + 1, y),
            img.get(x + 1, y + 1),
            img.get(x, y + 1),
            img.get(x - 1, y + 1),
            img.get(x - 1, y),
        ],
        center: img.get(x, y),
    })
}

/// Differences of neighbor `i` (1-based, wrapping) against the previous
/// neighbor, the next neighbor and the center.
pub fn difference_triple(ring: &NeighborRing, i: usize) -> DifferenceTriple {
    debug_assert!((1..=8).contains(&i));
    let v = |idx: usize| ring.values[(idx + 7) % 8] as i16; // 1-based, wrapping
    DifferenceTriple {
        d1: v(i) - v(i + 7),
        d2: v(i) - v(i + 1),
        d3: v(i) - ring.center as i16,
    }
}

/// Ternary pattern value: the count of strictly negative differences mod 3.
/// Zeros count as non-negative.
pub fn ternary_value(t: DifferenceTriple) -> u8 {
    let negatives = (t.d1 < 0) as u8 + (t.d2 < 0) as u8 + (t.d3 < 0) as u8;
    negatives % 3
}

/// Splits the ternary pattern into two binary codes: pattern-1 sets bit
/// (i-1) where the ternary value is 1, pattern-2 where it is 2. The first
/// neighbor occupies the least-significant bit.
pub fn encode_patterns(ring: &NeighborRing) -> (u8, u8) {
    let mut p1 = 0u8;
    let mut p2 = 0u8;
    for i in 1..=8 {
        match ternary_value(difference_triple(ring, i)) {
            1 => p1 |= 1 << (i - 1),
            2 => p2 |= 1 << (i - 1),
            _ => {}
        }
    }
    (p1, p2)
}

/// Magnitude code: per neighbor, compares the Euclidean magnitude of the
/// adjacent-neighbor differences taken against the center (M1) with the
/// same differences taken against the neighbor itself (M2). Bit (i-1) is
/// set when M1 >= M2; ties set the bit. Squared magnitudes are compared so
/// the arithmetic stays exact.
pub fn magnitude_code(ring: &NeighborRing) -> u8 {
    let mut code = 0u8;
    let c = ring.center as i32;
    for i in 0..8usize {
        let prev = ring.values[(i + 7) % 8] as i32;
        let next = ring.values[(i + 1) % 8] as i32;
        let this = ring.values[i] as i32;
        let m1_sq = (prev - c).pow(2) + (next - c).pow(2);
        let m2_sq = (prev - this).pow(2) + (next - this).pow(2);
        if m1_sq >= m2_sq {
            code |= 1 << i;
        }
    }
    code
}

/// Classic LBP: bit (i-1) set when neighbor i >= center.
pub fn lbp_code(ring: &NeighborRing) -> u8 {
    let mut code = 0u8;
    for (i, &v) in ring.values.iter().enumerate() {
        if v >= ring.center {
            code |= 1 << i;
        }
    }
    code
}

/// Computes the three code maps over every interior pixel. Borders are
/// excluded, so the maps are (W-2)x(H-2).
pub fn code_maps(img: &GrayImage) -> Result<CodeMaps> {
    check_min_size(img)?;
    let (w, h) = (img.width() - 2, img.height() - 2);
    let mut maps = CodeMaps {
        width: w,
        height: h,
        pattern1: Vec::with_capacity(w * h),
        pattern2: Vec::with_capacity(w * h),
        magnitude: Vec::with_capacity(w * h),
    };
    for y in 1..img.height() - 1 {
        for x in 1..img.width() - 1 {
            let ring = neighbor_ring(img, x, y)?;
            let (p1, p2) = encode_patterns(&ring);
            maps.pattern1.push(p1);
            maps.pattern2.push(p2);
            maps.magnitude.push(magnitude_code(&ring));
        }
    }
    Ok(maps)
}

/// LBP code map over the interior, same geometry as [`code_maps`].
pub fn lbp_map(img: &GrayImage) -> Result<Vec<u8>> {
    check_min_size(img)?;
    let mut map = Vec::with_capacity((img.width() - 2) * (img.height() - 2));
    for y in 1..img.height() - 1 {
        for x in 1..img.width() - 1 {
            map.push(lbp_code(&neighbor_ring(img, x, y)?));
        }
    }
    Ok(map)
}

fn check_min_size(img: &GrayImage) -> Result<()> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::ImageSize {
            width: img.width(),
            height: img.height(),
            min: 3,
        });
    }
    Ok(())
}

pub fn histogram_of_codes(map: &[u8], bins: Bins) -> Vec<f64> {
    let mut hist = vec![0.0; bins.count()];
    for &code in map {
        hist[bins.index(code)] += 1.0;
    }
    hist
}

/// Concatenated feature: pattern-1 histogram, pattern-2 histogram,
/// magnitude histogram. Dimension is 3 x bins.
pub fn extract_feature(img: &GrayImage, bins: Bins) -> Result<Vec<f64>> {
    let maps = code_maps(img)?;
    let mut feature = histogram_of_codes(&maps.pattern1, bins);
    feature.extend(histogram_of_codes(&maps.pattern2, bins));
    feature.extend(histogram_of_codes(&maps.magnitude, bins));
    Ok(feature)
}

/// Baseline feature: histogram of LBP codes, dimension = bins.
pub fn extract_lbp_feature(img: &GrayImage, bins: Bins) -> Result<Vec<f64>> {
    Ok(histogram_of_codes(&lbp_map(img)?, bins))
}
