//! Single-sample localization by thresholding the texture difference.

use alloc::vec;
use alloc::vec::Vec;

use super::fmap::TransportedTexture;
use crate::error::{param, Error, Result};

pub const DEFAULT_QUANTILE: f64 = 0.99;

/// Mark points whose difference `mean(IC) − OC` is extreme on the dominant
/// side (the sign with the larger maximal magnitude).
pub fn threshold_localize(ic: &[TransportedTexture], oc: &TransportedTexture, quantile: f64) -> Result<Vec<bool>> {
    if ic.is_empty() {
        return Err(param("need at least one IC texture"));
    }
    if !(quantile > 0.5 && quantile < 1.0) {
        return Err(param("quantile must lie in (0.5, 1)"));
    }
    let n0 = oc.values.len();
    let mut d = vec![0.0; n0];
    for t in ic {
        if t.values.len() != n0 {
            return Err(Error::DimensionMismatch { expected: n0, found: t.values.len() });
        }
        for (a, v) in d.iter_mut().zip(&t.values) {
            *a += v;
        }
    }
    let m = ic.len() as f64;
    for (a, o) in d.iter_mut().zip(&oc.values) {
        *a = *a / m - o;
    }
    let pos = d.iter().copied().fold(0.0, f64::max);
    let neg = d.iter().copied().fold(0.0, f64::min).abs();
    if pos == 0.0 && neg == 0.0 {
        return Ok(vec![false; n0]);
    }
    let sign = if pos >= neg { 1.0 } else { -1.0 };
    let mut side: Vec<f64> = d.iter().map(|v| v * sign).filter(|v| *v > 0.0).collect();
    side.sort_by(f64::total_cmp);
    let thr = quantile_type7(&side, quantile);
    Ok(d.iter().map(|v| v * sign > 0.0 && v * sign > thr).collect())
}

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let h = (n - 1) as f64 * q;
    let lo = crate::math::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Intersection over union of two masks (1 when both are empty).
pub fn iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
