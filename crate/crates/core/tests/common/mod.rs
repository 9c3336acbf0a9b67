#![allow(dead_code)]

use smac_core::laplacian::LaplacianPair;
use smac_core::simulation::{make_nominal, sample_ic, NoiseSpec, NominalShape};
use smac_core::PointCloud4D;

/// Small noisy clouds (n <= 300) cycling through the built-in shapes.
pub fn small_fixture(i: usize) -> PointCloud4D {
    let shape = [NominalShape::TwoLobe, NominalShape::Torus, NominalShape::Sphere][i % 3].clone();
    let n = 220 + 4 * i;
    let d = make_nominal(&shape, n, 100 + i as u64).unwrap();
    let noise = NoiseSpec { tau_s: 1e-3, tau_c: 0.05, n_min: n - 20, n_max: n };
    sample_ic(&d, &noise, 7 + i as u64).unwrap()
}

/// Dense `M^{-1/2} L M^{-1/2}`, row-major.
pub fn dense_standard(pair: &LaplacianPair) -> Vec<f64> {
    let n = pair.n();
    let mut a = pair.stiffness.to_dense();
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] /= (pair.mass[i] * pair.mass[j]).sqrt();
        }
    }
    a
}

/// Cyclic Jacobi eigen-decomposition of a dense symmetric matrix.
/// Returns ascending eigenvalues and column eigenvectors (row-major n×n).
pub fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[i * n + i] * a[i * n + i];
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (c, &i) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + c] = v[r * n + i];
        }
    }
    (values, vecs)
}

pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Rotation by angle `t` about a fixed oblique axis.
pub fn rotation(t: f64) -> [[f64; 3]; 3] {
    let n = 3f64.sqrt();
    let (x, y, z) = (1.0 / n, 1.0 / n, 1.0 / n);
    let (c, s) = (t.cos(), t.sin());
    let k = 1.0 - c;
    [
        [c + x * x * k, x * y * k - z * s, x * z * k + y * s],
        [y * x * k + z * s, c + y * y * k, y * z * k - x * s],
        [z * x * k - y * s, z * y * k + x * s, c + z * z * k],
    ]
}
