//! Functional maps between eigenbases and color transport onto the
//! reference shape.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{param, Error, Result};
use crate::laplacian::LaplacianPair;
use crate::spectral::{ColorRegression, DescriptorMatrix, Spectrum};

pub const DEFAULT_ETA: f64 = 1e-3;

/// `k × k` map C with `C A_ref ≈ A_sample`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMap {
    pub k: usize,
    /// row-major
    pub matrix: Vec<f64>,
    pub source_id: String,
    pub target_id: String,
}

impl FunctionalMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.k + j]
    }

    pub fn identity(k: usize) -> Self {
        let mut matrix = vec![0.0; k * k];
        for i in 0..k {
            matrix[i * k + i] = 1.0;
        }
        Self { k, matrix, source_id: String::new(), target_id: String::new() }
    }
}

/// Descriptor coefficients `A = Uᵀ M D` (row-major `k × p`).
pub fn descriptor_coefficients(spec: &Spectrum, pair: &LaplacianPair, desc: &DescriptorMatrix) -> Result<Vec<f64>> {
    let (n, k, p) = (spec.n(), spec.k(), desc.p());
    if pair.n() != n || desc.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: desc.n });
    }
    let mut a = vec![0.0; k * p];
    for j in 0..k {
        let u = spec.eigenfunction(j);
        let row = &mut a[j * p..(j + 1) * p];
        for x in 0..n {
            let w = u[x] * pair.mass[x];
            for (r, d) in row.iter_mut().zip(desc.row(x)) {
                *r += w * d;
            }
        }
    }
    Ok(a)
}

/// Objective `‖C A0 − A1‖² + η Σ c_ij² (λ1_i − λ0_j)²`.
pub fn map_objective(c: &[f64], a0: &[f64], a1: &[f64], lambda0: &[f64], lambda1: &[f64], eta: f64) -> f64 {
    let k = lambda0.len();
    let p = a0.len() / k;
    let mut total = 0.0;
    for i in 0..k {
        for q in 0..p {
            let mut v = -a1[i * p + q];
            for j in 0..k {
                v += c[i * k + j] * a0[j * p + q];
            }
            total += v * v;
        }
        for j in 0..k {
            let d = lambda1[i] - lambda0[j];
            total += eta * c[i * k + j] * c[i * k + j] * d * d;
        }
    }
    total
}

/// Minimize the map objective from coefficient matrices. Rows decouple; each
/// is one symmetric positive-definite solve.
pub fn solve_map(a0: &[f64], a1: &[f64], lambda0: &[f64], lambda1: &[f64], eta: f64) -> Result<Vec<f64>> {
    let k = lambda0.len();
    if lambda1.len() != k || a0.len() != a1.len() || k == 0 || !a0.len().is_multiple_of(k) {
        return Err(param("functional map inputs must share k and p"));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(param("eta must be finite and nonnegative"));
    }
    let p = a0.len() / k;
    let a0m = DMatrix::from_row_slice(k, p, a0);
    let gram = &a0m * a0m.transpose();
    let mut c = vec![0.0; k * k];
    for i in 0..k {
        let mut sys = gram.clone();
        for j in 0..k {
            let d = lambda1[i] - lambda0[j];
            sys[(j, j)] += eta * d * d;
        }
        let a1i = DVector::from_row_slice(&a1[i * p..(i + 1) * p]);
        let rhs = &a0m * a1i;
        let chol = sys.cholesky().ok_or_else(|| {
            Error::Numerical(alloc::format!(
                "functional map system for row {i} is singular; use eta > 0 or richer descriptors"
            ))
        })?;
        let row = chol.solve(&rhs);
        c[i * k..(i + 1) * k].copy_from_slice(row.as_slice());
    }
    Ok(c)
}

pub fn estimate_functional_map(
    ref_spec: &Spectrum,
    ref_pair: &LaplacianPair,
    ref_desc: &DescriptorMatrix,
    smp_spec: &Spectrum,
    smp_pair: &LaplacianPair,
    smp_desc: &DescriptorMatrix,
    eta: f64,
) -> Result<FunctionalMap> {
    if ref_spec.k() != smp_spec.k() {
        return Err(Error::DimensionMismatch { expected: ref_spec.k(), found: smp_spec.k() });
    }
    if ref_desc.p() != smp_desc.p() {
        return Err(Error::DimensionMismatch { expected: ref_desc.p(), found: smp_desc.p() });
    }
    let a0 = descriptor_coefficients(ref_spec, ref_pair, ref_desc)?;
    let a1 = descriptor_coefficients(smp_spec, smp_pair, smp_desc)?;
    let matrix = solve_map(&a0, &a1, ref_spec.eigenvalues(), smp_spec.eigenvalues(), eta)?;
    Ok(FunctionalMap {
        k: ref_spec.k(),
        matrix,
        source_id: String::new(),
        target_id: String::new(),
    })
}

/// Color reconstructed on the reference cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedTexture {
    pub values: Vec<f64>,
    pub source_id: String,
}

/// `γ = Cᵀ β̂`, texture `U0 γ`.
pub fn transport_texture(map: &FunctionalMap, reg: &ColorRegression, ref_spec: &Spectrum) -> Result<TransportedTexture> {
    let k = map.k;
    if reg.coefficients.len() != k || ref_spec.k() != k {
        return Err(Error::DimensionMismatch { expected: k, found: reg.coefficients.len() });
    }
    let mut gamma = vec![0.0; k];
    for (i, b) in reg.coefficients.iter().enumerate() {
        for (j, g) in gamma.iter_mut().enumerate() {
            *g += map.matrix[i * k + j] * b;
        }
    }
    let mut values = vec![0.0; ref_spec.n()];
    for (j, g) in gamma.iter().enumerate() {
        for (v, u) in values.iter_mut().zip(ref_spec.eigenfunction(j)) {
            *v += g * u;
        }
    }
    Ok(TransportedTexture { values, source_id: map.target_id.clone() })
}
