//! Graph-Laplacian baseline: spectrum of `D − W` on the 4D points.

use alloc::vec::Vec;

use crate::cloud::PointCloud4D;
use crate::error::{param, Result};
use crate::knn::{build_knn_points, KnnGraph};
use crate::laplacian::LaplacianPair;
use crate::math;
use crate::sparse::CsrMatrix;
use crate::spectral::{drop_zero_eigenvalue, solve_eigs_with, SolverOptions};

/// Nominal color range used to bring color onto the length scale.
pub const COLOR_RANGE: f64 = 10.0;

/// Positions plus color rescaled to `color / COLOR_RANGE · bbox diagonal`.
pub fn embed_4d(cloud: &PointCloud4D) -> Vec<[f64; 4]> {
    let scale = cloud.bbox_diagonal() / COLOR_RANGE;
    cloud
        .positions()
        .iter()
        .zip(cloud.color())
        .map(|(p, c)| [p[0], p[1], p[2], c * scale])
        .collect()
}

/// Unnormalized graph Laplacian with Gaussian weights on the symmetrized
/// kNN graph, paired with unit mass.
pub fn graph_laplacian<const D: usize>(points: &[[f64; D]], graph: &KnnGraph) -> Result<LaplacianPair> {
    let n = points.len();
    let sigma = graph.mean_distance();
    if !(sigma > 0.0) {
        return Err(param("graph has zero mean edge length"));
    }
    let s2 = sigma * sigma;
    let mut trip = Vec::with_capacity(2 * n * graph.k() + n);
    for i in 0..n {
        for (&j, &d) in graph.neighbors(i).iter().zip(graph.distances(i)) {
            // an edge listed from both ends keeps a single weight
            if graph.neighbors(j).contains(&i) && j < i {
                continue;
            }
            let w = math::exp(-d * d / s2);
            trip.push((i, j, -w));
            trip.push((j, i, -w));
            trip.push((i, i, w));
            trip.push((j, j, w));
        }
    }
    Ok(LaplacianPair {
        stiffness: CsrMatrix::from_triplets(n, trip),
        mass: alloc::vec![1.0; n],
    })
}

/// Nonzero part (length k−1) of the lowest `k` eigenvalues of the 4D GL.
pub fn gl_baseline_features(cloud: &PointCloud4D, neighbors: usize, k: usize, solver: &SolverOptions) -> Result<Vec<f64>> {
    if k < 2 || k >= cloud.len() {
        return Err(param(alloc::format!("k={k} must satisfy 2 <= k < n={}", cloud.len())));
    }
    let pts = embed_4d(cloud);
    let graph = build_knn_points(&pts, neighbors)?;
    let pair = graph_laplacian(&pts, &graph)?;
    let spec = solve_eigs_with(&pair, k, solver)?;
    Ok(drop_zero_eigenvalue(&spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_components_give_two_zero_modes() {
        let mut pts = Vec::new();
        for i in 0..20 {
            pts.push([i as f64 * 0.1, 0.0]);
            pts.push([100.0 + i as f64 * 0.1, 0.0]);
        }
        let g = build_knn_points(&pts, 3).unwrap();
        let pair = graph_laplacian(&pts, &g).unwrap();
        pair.validate().unwrap();
        let spec = crate::spectral::solve_eigs(&pair, 4).unwrap();
        assert!(spec.eigenvalues()[1].abs() <= 1e-10);
        assert!(spec.eigenvalues()[2] > 1e-4);
    }
}
