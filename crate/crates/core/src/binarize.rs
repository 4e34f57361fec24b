//! Histogram, Otsu threshold selection, and majority-rule polarity binarization.

use thiserror::Error;

use crate::raster::{BinaryImage, GrayImage};

/// Level used by the fixed-threshold polarity rule.
pub const DEFAULT_LEVEL: u8 = 127;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BinarizeError {
    #[error("histogram has fewer than two distinct occupied levels")]
    DegenerateHistogram,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; 256],
}

impl Histogram256 {
    pub fn from_counts(counts: [u64; 256]) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn occupied_levels(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Outcome of polarity normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdDecision {
    pub level: u8,
    /// True when pixels below `level` outnumber the rest (and so became background).
    pub majority_low: bool,
}

pub fn histogram(img: &GrayImage) -> Histogram256 {
    let mut counts = [0u64; 256];
    for &p in img.data() {
        counts[p as usize] += 1;
    }
    Histogram256 { counts }
}

/// 128x128 -> 256 bit product as (high, low).
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & MASK);
    let (b1, b0) = (b >> 64, b & MASK);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// Between-class variance up to the positive factor 1/N², kept as an exact
/// fraction `spread² / (n0·n1)` where `spread = S0·N − S·n0`.
#[derive(Clone, Copy)]
struct Separation {
    spread_sq: u128,
    classes: u128,
}

impl Separation {
    fn exceeds(&self, other: &Separation) -> bool {
        mul_wide(self.spread_sq, other.classes) > mul_wide(other.spread_sq, self.classes)
    }
}

// Beyond this pixel count `spread` may not fit in 64 bits.
const EXACT_LIMIT: u64 = 1 << 28;

/// Smallest `t` in 0..=254 maximizing the between-class variance, with class 0
/// holding values `<= t`.
pub fn otsu_threshold(hist: &Histogram256) -> Result<u8, BinarizeError> {
    if hist.occupied_levels() < 2 {
        return Err(BinarizeError::DegenerateHistogram);
    }
    let total = hist.total();
    if total > EXACT_LIMIT {
        return Ok(otsu_threshold_float(hist));
    }
    let n = total as i128;
    let sum: i128 = hist
        .counts
        .iter()
        .enumerate()
        .map(|(v, &c)| v as i128 * c as i128)
        .sum();

    let mut best: Option<(u8, Separation)> = None;
    let (mut n0, mut s0) = (0i128, 0i128);
    for t in 0..255usize {
        n0 += hist.counts[t] as i128;
        s0 += t as i128 * hist.counts[t] as i128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let spread = (s0 * n - sum * n0).unsigned_abs();
        let candidate = Separation {
            spread_sq: spread * spread,
            classes: (n0 * n1) as u128,
        };
        if best.is_none_or(|(_, b)| candidate.exceeds(&b)) {
            best = Some((t as u8, candidate));
        }
    }
    Ok(best
        .map(|(t, _)| t)
        .expect("two occupied levels give a valid cut"))
}

fn otsu_threshold_float(hist: &Histogram256) -> u8 {
    let n = hist.total() as f64;
    let sum: f64 = hist
        .counts
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();
    let (mut n0, mut s0) = (0f64, 0f64);
    let mut best = (0u8, -1f64);
    for t in 0..255usize {
        n0 += hist.counts[t] as f64;
        s0 += t as f64 * hist.counts[t] as f64;
        let n1 = n - n0;
        if n0 == 0.0 || n1 == 0.0 {
            continue;
        }
        let spread = s0 * n - sum * n0;
        let score = spread * spread / (n0 * n1);
        if score > best.1 {
            best = (t as u8, score);
        }
    }
    best.0
}

/// Majority-rule binarization: the side of `level` holding more pixels becomes
/// background (0), the other side foreground (255). On an exact tie the high
/// side (`>= level`) becomes background.
pub fn polarity_binarize(img: &GrayImage, level: u8) -> (BinaryImage, ThresholdDecision) {
    let low = img.data().iter().filter(|&&p| p < level).count();
    let high = img.data().len() - low;
    let majority_low = low > high;
    let data = img
        .data()
        .iter()
        .map(|&p| {
            if (p < level) == majority_low {
                BinaryImage::BACKGROUND
            } else {
                BinaryImage::FOREGROUND
            }
        })
        .collect();
    let out = GrayImage::new(img.width(), img.height(), data).expect("same dimensions as input");
    (
        BinaryImage::from_gray_unchecked(out),
        ThresholdDecision {
            level,
            majority_low,
        },
    )
}
