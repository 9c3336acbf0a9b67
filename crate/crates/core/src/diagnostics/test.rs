//! Point-wise two-group F test with TFCE and max-statistic permutation
//! inference.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::fmap::TransportedTexture;
use super::tfce::tfce_default;
use crate::cloud::PointCloud4D;
use crate::error::{param, Error, Result};
use crate::knn::build_knn;
use crate::par;
use crate::rng::{self, domain};

pub const ADJACENCY_NEIGHBORS: usize = 10;
pub const DEFAULT_PERMUTATIONS: usize = 999;
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ShapeOnly,
    ShapeAndColor,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Self::ShapeOnly => "shape_only",
            Self::ShapeAndColor => "shape_and_color",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    pub verdict: Verdict,
    pub f_stat: Vec<f64>,
    pub tfce: Vec<f64>,
    pub p_values: Vec<f64>,
    pub significant_mask: Vec<bool>,
    pub alpha: f64,
    pub n_permutations: usize,
}

/// Symmetrized kNN(10) adjacency of the reference cloud.
pub fn reference_adjacency(reference: &PointCloud4D) -> Result<Vec<Vec<usize>>> {
    Ok(build_knn(reference, ADJACENCY_NEIGHBORS.min(reference.len().saturating_sub(1)).max(1))?.symmetrized())
}

/// Textures stacked by observation, with per-point totals.
struct Stack<'a> {
    rows: Vec<&'a [f64]>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl<'a> Stack<'a> {
    fn new(rows: Vec<&'a [f64]>, n0: usize) -> Self {
        let mut sum = vec![0.0; n0];
        let mut sum_sq = vec![0.0; n0];
        for r in &rows {
            for q in 0..n0 {
                sum[q] += r[q];
                sum_sq[q] += r[q] * r[q];
            }
        }
        Self { rows, sum, sum_sq }
    }

    /// One-way ANOVA F with group 1 = `members`.
    fn f_stat(&self, members: &[usize]) -> Vec<f64> {
        let n0 = self.sum.len();
        let n = self.rows.len() as f64;
        let n1 = members.len() as f64;
        let n2 = n - n1;
        let mut s1 = vec![0.0; n0];
        for &m in members {
            for (a, v) in s1.iter_mut().zip(self.rows[m]) {
                *a += v;
            }
        }
        (0..n0)
            .map(|q| {
                let s = self.sum[q];
                let s2 = s - s1[q];
                let sst = self.sum_sq[q] - s * s / n;
                let ssb = (s1[q] * s1[q] / n1 + s2 * s2 / n2 - s * s / n).max(0.0);
                let ssw = (sst - ssb).max(0.0);
                let scale = self.sum_sq[q] / n;
                if ssb <= 1e-14 * scale {
                    0.0
                } else {
                    ssb / (ssw.max(1e-12 * scale) / (n - 2.0))
                }
            })
            .collect()
    }
}

/// Permutation test on textures over the reference cloud's kNN(10) graph.
pub fn pointwise_test(
    ic: &[TransportedTexture],
    oc: &[TransportedTexture],
    reference: &PointCloud4D,
    alpha: f64,
    n_permutations: usize,
    rng_seed: u64,
) -> Result<DiagnosticReport> {
    let adjacency = reference_adjacency(reference)?;
    pointwise_test_with(ic, oc, &adjacency, alpha, n_permutations, rng_seed)
}

pub fn pointwise_test_with(
    ic: &[TransportedTexture],
    oc: &[TransportedTexture],
    adjacency: &[Vec<usize>],
    alpha: f64,
    n_permutations: usize,
    rng_seed: u64,
) -> Result<DiagnosticReport> {
    test_rows(&slices(ic), &slices(oc), adjacency, alpha, n_permutations, rng_seed)
}

fn slices(t: &[TransportedTexture]) -> Vec<&[f64]> {
    t.iter().map(|x| x.values.as_slice()).collect()
}

/// As [`pointwise_test_with`] on raw texture rows.
pub fn test_rows(
    ic: &[&[f64]],
    oc: &[&[f64]],
    adjacency: &[Vec<usize>],
    alpha: f64,
    n_permutations: usize,
    rng_seed: u64,
) -> Result<DiagnosticReport> {
    if ic.is_empty() || oc.is_empty() {
        return Err(param("both IC and OC groups must be nonempty"));
    }
    if ic.len() + oc.len() < 3 {
        return Err(param(alloc::format!(
            "groups of sizes {} and {} leave no within-group degrees of freedom for the F test",
            ic.len(),
            oc.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param("alpha must lie in (0, 1)"));
    }
    if n_permutations == 0 {
        return Err(param("n_permutations must be positive"));
    }
    let n0 = adjacency.len();
    for t in ic.iter().chain(oc) {
        if t.len() != n0 {
            return Err(Error::DimensionMismatch { expected: n0, found: t.len() });
        }
    }
    let rows: Vec<&[f64]> = oc.iter().chain(ic).copied().collect();
    let stack = Stack::new(rows, n0);
    let n_oc = oc.len();
    let observed: Vec<usize> = (0..n_oc).collect();
    let f_stat = stack.f_stat(&observed);
    let tfce = tfce_default(&f_stat, adjacency)?;

    let total = stack.rows.len();
    let maxima: Vec<f64> = par::map_range(n_permutations, |p| {
        let mut g = rng::stream(rng_seed, domain::PERMUTATION, p as u64);
        let mut labels: Vec<usize> = (0..total).collect();
        labels.shuffle(&mut g);
        let f = stack.f_stat(&labels[..n_oc]);
        tfce_default(&f, adjacency).map(|t| t.into_iter().fold(0.0, f64::max))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let denom = (n_permutations + 1) as f64;
    let p_values: Vec<f64> = tfce
        .iter()
        .map(|&t| (1 + maxima.iter().filter(|&&m| m >= t).count()) as f64 / denom)
        .collect();
    let significant_mask: Vec<bool> = p_values.iter().map(|&p| p < alpha).collect();
    let verdict = if significant_mask.iter().any(|&b| b) {
        Verdict::ShapeAndColor
    } else {
        Verdict::ShapeOnly
    };
    Ok(DiagnosticReport {
        verdict,
        f_stat,
        tfce,
        p_values,
        significant_mask,
        alpha,
        n_permutations,
    })
}
