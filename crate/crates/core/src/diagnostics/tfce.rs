//! Threshold-free cluster enhancement over a point adjacency.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Result};
use crate::math;

pub const DEFAULT_E: f64 = 0.5;
pub const DEFAULT_H: f64 = 2.0;
pub const DEFAULT_STEPS: usize = 100;

/// TFCE with explicit step `dh`; levels are `dh, 2dh, …` up to the
/// largest statistic. `adjacency` must be symmetric.
pub fn tfce_enhance(stat: &[f64], adjacency: &[Vec<usize>], dh: f64, e: f64, h: f64) -> Result<Vec<f64>> {
    let n = stat.len();
    if adjacency.len() != n {
        return Err(param("adjacency size differs from statistic length"));
    }
    if let Some(i) = stat.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(param(alloc::format!("statistic at point {i} is negative or not finite")));
    }
    if !(dh > 0.0) || !dh.is_finite() {
        return Err(param("dh must be positive"));
    }
    let max = stat.iter().copied().fold(0.0, f64::max);
    let mut out = vec![0.0; n];
    if max == 0.0 {
        return Ok(out);
    }
    let levels = math::floor(max / dh * (1.0 + 1e-12)) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| stat[b].total_cmp(&stat[a]).then(a.cmp(&b)));

    let mut uf = UnionFind::new(n);
    let mut active = vec![false; n];
    let mut next = 0;
    for m in (1..=levels).rev() {
        let level = m as f64 * dh;
        let cut = level * (1.0 - 1e-12);
        while next < n && stat[order[next]] >= cut {
            let q = order[next];
            active[q] = true;
            for &r in &adjacency[q] {
                if active[r] {
                    uf.union(q, r);
                }
            }
            next += 1;
        }
        let weight = math::powf(level, h) * dh;
        for &q in &order[..next] {
            let size = uf.size(q) as f64;
            out[q] += math::powf(size, e) * weight;
        }
    }
    Ok(out)
}

/// TFCE with `dh = max/100`.
pub fn tfce_default(stat: &[f64], adjacency: &[Vec<usize>]) -> Result<Vec<f64>> {
    let max = stat.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return tfce_enhance(stat, adjacency, 1.0, DEFAULT_E, DEFAULT_H);
    }
    tfce_enhance(stat, adjacency, max / DEFAULT_STEPS as f64, DEFAULT_E, DEFAULT_H)
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            core::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }

    fn size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect()
    }

    #[test]
    fn isolated_unit_peak() {
        let mut stat = vec![0.0; 5];
        stat[2] = 1.0;
        let adj = vec![Vec::new(); 5];
        let t = tfce_enhance(&stat, &adj, 0.1, 0.5, 2.0).unwrap();
        let expected: f64 = (1..=10).map(|m| (0.1 * m as f64).powi(2) * 0.1).sum();
        assert!((t[2] - expected).abs() < 1e-12);
        assert!((t[2] - 0.385).abs() < 1e-12);
        assert_eq!(t[0], 0.0);
    }

    #[test]
    fn zeros_stay_zero() {
        let t = tfce_default(&[0.0; 4], &path(4)).unwrap();
        assert_eq!(t, vec![0.0; 4]);
    }

    #[test]
    fn larger_cluster_scores_higher() {
        let adj = path(10);
        let one = tfce_enhance(&[0., 0., 2., 2., 0., 0., 0., 0., 0., 0.], &adj, 0.1, 0.5, 2.0).unwrap();
        let two = tfce_enhance(&[0., 0., 2., 2., 2., 2., 0., 0., 0., 0.], &adj, 0.1, 0.5, 2.0).unwrap();
        assert!(two[2] > one[2]);
    }

    #[test]
    fn negative_rejected() {
        assert!(tfce_default(&[1.0, -0.5], &path(2)).is_err());
    }
}
