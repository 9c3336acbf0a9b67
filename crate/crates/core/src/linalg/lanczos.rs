//! Lanczos iteration with full reorthogonalization for the largest
//! eigenvalues of a symmetric operator, typically a shift-inverted one.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use super::tridiag::{tridiag_eigen, Vectors};
use super::{axpy, dot, norm};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

pub struct LanczosResult {
    /// Largest Ritz values, descending.
    pub values: Vec<f64>,
    /// Matching Ritz vectors (unit norm).
    pub vectors: Vec<Vec<f64>>,
    pub applications: usize,
}

pub struct LanczosParams {
    pub nev: usize,
    pub max_applications: usize,
    /// Relative Ritz error bound for convergence.
    pub tol: f64,
}

/// Run Lanczos on `op` restricted to the orthogonal complement of the
/// orthonormal vectors `deflate`.
pub fn largest_eigenpairs<F>(
    n: usize,
    mut op: F,
    deflate: &[Vec<f64>],
    params: &LanczosParams,
    rng: &mut StreamRng,
) -> Result<LanczosResult>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let max_dim = n.saturating_sub(deflate.len());
    let nev = params.nev;
    if nev == 0 {
        return Ok(LanczosResult {
            values: Vec::new(),
            vectors: Vec::new(),
            applications: 0,
        });
    }
    if nev > max_dim {
        return Err(Error::Parameter(alloc::format!(
            "requested {nev} eigenpairs but only {max_dim} dimensions remain"
        )));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2 * nev + 20);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let q0 = random_orthogonal(n, deflate, &basis, rng)?;
    basis.push(q0);
    let mut w = vec![0.0; n];
    let mut applications = 0;
    let check_every = (nev / 4).clamp(4, 25);
    let mut last_bounds_ok = false;

    loop {
        let j = basis.len() - 1;
        op(&basis[j], &mut w);
        applications += 1;
        let a = dot(&basis[j], &w);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        // classical Gram-Schmidt, repeated once if cancellation was severe
        let mut b = norm(&w);
        for _ in 0..2 {
            for v in deflate.iter().chain(basis.iter()) {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
            let after = norm(&w);
            let severe = after < core::f64::consts::FRAC_1_SQRT_2 * b;
            b = after;
            if !severe {
                break;
            }
        }
        alpha.push(a);
        let m = alpha.len();
        let scale = alpha.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let breakdown = b <= 1e-13 * scale.max(f64::MIN_POSITIVE);

        let at_end = m == max_dim || applications >= params.max_applications;
        if m >= nev && (breakdown || at_end || (m - nev).is_multiple_of(check_every)) {
            let eig = tridiag_eigen(&alpha, &beta, Vectors::LastRow)?;
            let bound_b = if breakdown { 0.0 } else { b };
            last_bounds_ok = (0..nev).all(|t| {
                let idx = m - 1 - t;
                (bound_b * eig.vectors[idx]).abs() <= params.tol * eig.values[idx].abs()
            });
            if last_bounds_ok || at_end {
                break;
            }
        } else if at_end {
            break;
        }

        beta.push(if breakdown { 0.0 } else { b });
        let next = if breakdown {
            random_orthogonal(n, deflate, &basis, rng)?
        } else {
            w.iter().map(|v| v / b).collect()
        };
        basis.push(next);
    }

    let m = alpha.len();
    if m < nev || !last_bounds_ok {
        return Err(Error::Solver {
            requested: nev,
            converged: 0,
            residual: f64::NAN,
        });
    }
    let eig = tridiag_eigen(&alpha, &beta[..m - 1], Vectors::Full)?;
    let mut values = Vec::with_capacity(nev);
    let mut vectors = Vec::with_capacity(nev);
    for t in 0..nev {
        let idx = m - 1 - t;
        values.push(eig.values[idx]);
        let mut x = vec![0.0; n];
        for (r, q) in basis.iter().enumerate().take(m) {
            axpy(eig.vectors[r * m + idx], q, &mut x);
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        vectors.push(x);
    }
    Ok(LanczosResult {
        values,
        vectors,
        applications,
    })
}

fn random_orthogonal(n: usize, deflate: &[Vec<f64>], basis: &[Vec<f64>], rng: &mut StreamRng) -> Result<Vec<f64>> {
    for _ in 0..5 {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for q in deflate.iter().chain(basis) {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Ok(v);
        }
    }
    Err(Error::Numerical("could not draw a vector outside the Krylov basis".into()))
}
