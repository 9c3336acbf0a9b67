//! Mean-centering and covariance whitening of feature vectors.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{param, Error, Result};
use crate::math;

/// Relative eigenvalue floor used when inverting the sample covariance.
pub const COVARIANCE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Row-major `d × d`, symmetric inverse square root of the covariance.
    pub whitening: Vec<f64>,
    /// ‖W Σ W − I‖_F on the training sample.
    pub training_discrepancy: f64,
}

impl Standardizer {
    pub fn d(&self) -> usize {
        self.mean.len()
    }

    /// `W (x − mean)`.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.d();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.len() });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        Ok((0..d)
            .map(|i| {
                let row = &self.whitening[i * d..(i + 1) * d];
                row.iter().zip(&centered).map(|(w, v)| w * v).sum()
            })
            .collect())
    }

    /// Squared norm of the standardized vector.
    pub fn statistic(&self, x: &[f64]) -> Result<f64> {
        Ok(self.transform(x)?.iter().map(|v| v * v).sum())
    }
}

/// Fit mean and whitening on `rows` (each of length d). Requires `m > d`.
pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<Standardizer> {
    let m = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(param("cannot standardize zero-dimensional features"));
    }
    if m <= d {
        return Err(param(alloc::format!(
            "{m} training vectors for dimension {d}: the covariance is singular; use m1 >= {}",
            d + 1
        )));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: row.len() });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation { index: r, reason: alloc::format!("non-finite feature in column {c}") });
        }
    }
    let mut mean = vec![0.0; d];
    for row in rows {
        for (a, v) in mean.iter_mut().zip(row) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= m as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for row in rows {
        for (c, (v, mu)) in centered.iter_mut().zip(row.iter().zip(&mean)) {
            *c = v - mu;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (m - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let trace: f64 = (0..d).map(|i| cov[(i, i)]).sum();
    if !(trace > 0.0) {
        return Err(Error::Numerical("training features have zero variance".into()));
    }
    let floor = COVARIANCE_FLOOR * trace / d as f64;
    let eig = cov.clone().symmetric_eigen();
    let scale: Vec<f64> = eig.eigenvalues.iter().map(|&l| 1.0 / math::sqrt(l.max(floor))).collect();
    let v = &eig.eigenvectors;
    let mut w = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let s: f64 = (0..d).map(|t| v[(i, t)] * scale[t] * v[(j, t)]).sum();
            w[(i, j)] = s;
            w[(j, i)] = s;
        }
    }
    let wcw = &w * &cov * &w;
    let mut disc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let e = wcw[(i, j)] - if i == j { 1.0 } else { 0.0 };
            disc += e * e;
        }
    }
    let whitening = (0..d * d).map(|t| w[(t / d, t % d)]).collect();
    Ok(Standardizer {
        mean,
        whitening,
        training_discrepancy: math::sqrt(disc),
    })
}
