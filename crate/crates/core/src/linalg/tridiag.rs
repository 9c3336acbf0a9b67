//! Symmetric tridiagonal eigensolver (implicit QL with Wilkinson shifts).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Which eigenvector information to accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vectors {
    None,
    /// Only the last component of every eigenvector (Lanczos error bounds).
    LastRow,
    Full,
}

/// Eigen-decomposition of a symmetric tridiagonal matrix.
///
/// `values` are ascending. With [`Vectors::Full`], `vectors` is row-major
/// `m × m` with eigenvector `j` in column `j`; with [`Vectors::LastRow`] it
/// holds the `m` last components.
pub struct TridiagEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

pub fn tridiag_eigen(diag: &[f64], offdiag: &[f64], mode: Vectors) -> Result<TridiagEigen> {
    let m = diag.len();
    if m == 0 {
        return Ok(TridiagEigen {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; m];
    e[..m - 1].copy_from_slice(&offdiag[..m - 1]);
    // rows of Z being tracked
    let rows = match mode {
        Vectors::None => 0,
        Vectors::LastRow => 1,
        Vectors::Full => m,
    };
    let mut z = vec![0.0; rows * m];
    match mode {
        Vectors::None => {}
        Vectors::LastRow => z[m - 1] = 1.0,
        Vectors::Full => (0..m).for_each(|i| z[i * m + i] = 1.0),
    }

    for l in 0..m {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < m {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = math::sqrt(g * g + 1.0);
            g = d[mm] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = mm;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = math::sqrt(f * f + g * g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..rows {
                    let row = &mut z[k * m..(k + 1) * m];
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![0.0; rows * m];
    for k in 0..rows {
        for (jn, &jo) in order.iter().enumerate() {
            vectors[k * m + jn] = z[k * m + jo];
        }
    }
    Ok(TridiagEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_difference_matrix() {
        // eigenvalues of tridiag(-1, 2, -1) of size m: 2 - 2 cos(j pi/(m+1))
        let m = 40;
        let d = vec![2.0; m];
        let e = vec![-1.0; m - 1];
        let eig = tridiag_eigen(&d, &e, Vectors::Full).unwrap();
        for j in 0..m {
            let exact = 2.0 - 2.0 * math::cos((j + 1) as f64 * core::f64::consts::PI / (m + 1) as f64);
            assert!((eig.values[j] - exact).abs() < 1e-12);
        }
        // T v = lambda v for column 3
        let v: Vec<f64> = (0..m).map(|i| eig.vectors[i * m + 3]).collect();
        for i in 0..m {
            let mut tv = 2.0 * v[i];
            if i > 0 {
                tv -= v[i - 1];
            }
            if i + 1 < m {
                tv -= v[i + 1];
            }
            assert!((tv - eig.values[3] * v[i]).abs() < 1e-12);
        }
        let last = tridiag_eigen(&d, &e, Vectors::LastRow).unwrap();
        for j in 0..m {
            assert!((last.vectors[j].abs() - eig.vectors[(m - 1) * m + j].abs()).abs() < 1e-12);
        }
    }
}
