//! Per-cloud spectral feature extraction: kNN graph, Laplacian, lower
//! spectrum and color regression.

use alloc::string::String;
use alloc::vec::Vec;

use crate::cloud::PointCloud4D;
use crate::error::{param, Result};
use crate::knn::{build_knn, KnnGraph};
use crate::laplacian::{build_laplacian_with, LaplacianOptions, LaplacianPair};
use crate::spectral::{drop_zero_eigenvalue, regress_color, solve_eigs_with, ColorRegression, SolverOptions, Spectrum};

pub const DEFAULT_LBO_NEIGHBORS: usize = 30;
pub const DEFAULT_K_EIG: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    pub neighbors: usize,
    pub k_eig: usize,
    pub laplacian: LaplacianOptions,
    pub solver: SolverOptions,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            neighbors: DEFAULT_LBO_NEIGHBORS,
            k_eig: DEFAULT_K_EIG,
            laplacian: LaplacianOptions::default(),
            solver: SolverOptions::default(),
        }
    }
}

impl FeatureOptions {
    pub fn with_k(k_eig: usize) -> Self {
        Self { k_eig, ..Self::default() }
    }
}

/// The monitored feature vectors of one cloud: nonzero eigenvalues
/// (length k-1) and absolute regression coefficients (length k).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFeatures {
    pub id: String,
    pub lambda: Vec<f64>,
    pub beta_abs: Vec<f64>,
}

/// Everything computed for one cloud, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub graph: KnnGraph,
    pub pair: LaplacianPair,
    pub spectrum: Spectrum,
    pub regression: ColorRegression,
    pub id: String,
}

impl Extraction {
    pub fn features(&self) -> SpectralFeatures {
        SpectralFeatures {
            id: self.id.clone(),
            lambda: drop_zero_eigenvalue(&self.spectrum),
            beta_abs: self.regression.abs_coefficients.clone(),
        }
    }
}

pub fn extract_full(cloud: &PointCloud4D, opts: &FeatureOptions) -> Result<Extraction> {
    if opts.k_eig < 2 {
        return Err(param("k_eig must be at least 2"));
    }
    if cloud.len() <= opts.k_eig || cloud.len() <= opts.neighbors {
        return Err(param(alloc::format!(
            "cloud '{}' has {} points; need more than k_eig={} and K={}",
            cloud.id(),
            cloud.len(),
            opts.k_eig,
            opts.neighbors
        )));
    }
    let graph = build_knn(cloud, opts.neighbors)?;
    let pair = build_laplacian_with(cloud, &graph, &opts.laplacian)?;
    let spectrum = solve_eigs_with(&pair, opts.k_eig, &opts.solver)?;
    let regression = regress_color(&spectrum, &pair, cloud.color())?;
    Ok(Extraction {
        graph,
        pair,
        spectrum,
        regression,
        id: String::from(cloud.id()),
    })
}

pub fn extract_features(cloud: &PointCloud4D, opts: &FeatureOptions) -> Result<SpectralFeatures> {
    extract_full(cloud, opts).map(|e| e.features())
}
