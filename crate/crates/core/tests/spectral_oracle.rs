#![allow(clippy::needless_range_loop)]
mod common;

use common::{dense_standard, jacobi_eigen, rel_err, small_fixture};
use smac_core::features::{extract_full, FeatureOptions};
use smac_core::laplacian::build_laplacian;
use smac_core::simulation::{make_nominal, NominalShape};
use smac_core::spectral::{
    compute_hks, compute_wks, default_hks_range, nodal_domains, regress_color, solve_eigs, solve_eigs_with,
    SolverOptions, SolverPath,
};
use smac_core::build_knn;

#[test]
fn dense_and_iterative_match_jacobi() {
    for i in 0..4 {
        let c = small_fixture(i);
        let pair = build_laplacian(&c, &build_knn(&c, 20).unwrap()).unwrap();
        let n = pair.n();
        let (oracle, _) = jacobi_eigen(dense_standard(&pair), n);
        let k = 25;
        for path in [SolverPath::Dense, SolverPath::Iterative] {
            let opts = SolverOptions { path, ..SolverOptions::default() };
            let spec = solve_eigs_with(&pair, k, &opts).unwrap();
            for j in 1..k {
                assert!(rel_err(spec.eigenvalues()[j], oracle[j], 1e-12) < 1e-8, "{path:?} j={j}");
            }
            assert!(spec.eigenvalues()[0].abs() <= 1e-8 * spec.eigenvalues()[1]);
            assert!(spec.orthonormality_error(&pair.mass) <= 1e-6);
            assert!(spec.residuals().iter().all(|r| *r <= 1e-6));
        }
    }
}

#[test]
fn sphere_low_spectrum() {
    let d = make_nominal(&NominalShape::Sphere, 2000, 11).unwrap();
    let pair = build_laplacian(&d.base_cloud, &build_knn(&d.base_cloud, 30).unwrap()).unwrap();
    let spec = solve_eigs(&pair, 10).unwrap();
    let expected = [2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0, 12.0];
    for (j, e) in expected.iter().enumerate() {
        assert!(rel_err(spec.eigenvalues()[j + 1], *e, 1.0) < 0.10, "j={j} {}", spec.eigenvalues()[j + 1]);
    }
}

#[test]
fn sphere_nodal_domains_bounded() {
    let d = make_nominal(&NominalShape::Sphere, 1500, 2).unwrap();
    let g = build_knn(&d.base_cloud, 30).unwrap();
    let pair = build_laplacian(&d.base_cloud, &g).unwrap();
    let spec = solve_eigs(&pair, 21).unwrap();
    let adj = build_knn(&d.base_cloud, 10).unwrap().symmetrized();
    for j in 1..=20 {
        // eigenfunction index j (1-based in the ordering) has at most j domains
        let count = nodal_domains(spec.eigenfunction(j - 1), &adj);
        assert!(count <= j, "eigenfunction {j}: {count} domains");
    }
}

/// Dense weighted least squares `(UᵀMU)⁻¹ UᵀMy` by Gaussian elimination.
fn wls(u: &[Vec<f64>], m: &[f64], y: &[f64]) -> Vec<f64> {
    let k = u.len();
    let mut a = vec![0.0; k * (k + 1)];
    for i in 0..k {
        for j in 0..k {
            a[i * (k + 1) + j] = (0..y.len()).map(|x| u[i][x] * m[x] * u[j][x]).sum();
        }
        a[i * (k + 1) + k] = (0..y.len()).map(|x| u[i][x] * m[x] * y[x]).sum();
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&p, &q| a[p * (k + 1) + c].abs().total_cmp(&a[q * (k + 1) + c].abs())).unwrap();
        for t in 0..=k {
            a.swap(c * (k + 1) + t, piv * (k + 1) + t);
        }
        for r in 0..k {
            if r != c {
                let f = a[r * (k + 1) + c] / a[c * (k + 1) + c];
                for t in c..=k {
                    a[r * (k + 1) + t] -= f * a[c * (k + 1) + t];
                }
            }
        }
    }
    (0..k).map(|i| a[i * (k + 1) + k] / a[i * (k + 1) + i]).collect()
}

#[test]
fn regression_matches_weighted_least_squares() {
    for i in 0..5 {
        let c = small_fixture(i);
        let e = extract_full(&c, &FeatureOptions { neighbors: 20, ..FeatureOptions::with_k(30) }).unwrap();
        let u: Vec<Vec<f64>> = (0..30).map(|j| e.spectrum.eigenfunction(j).to_vec()).collect();
        let oracle = wls(&u, &e.pair.mass, c.color());
        for (a, b) in e.regression.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
        let y2: f64 = c.color().iter().zip(&e.pair.mass).map(|(y, m)| y * y * m).sum();
        let b2: f64 = e.regression.coefficients.iter().map(|b| b * b).sum();
        assert!(rel_err(e.regression.residual_norm.powi(2) + b2, y2, 1e-300) <= 1e-8);
    }
}

#[test]
fn eigenfunction_color_projects_exactly() {
    let c = small_fixture(0);
    let pair = build_laplacian(&c, &build_knn(&c, 20).unwrap()).unwrap();
    let spec = solve_eigs(&pair, 12).unwrap();
    let y: Vec<f64> = spec.eigenfunction(1).iter().map(|v| 3.5 * v).collect();
    let reg = regress_color(&spec, &pair, &y).unwrap();
    assert!((reg.coefficients[1] - 3.5).abs() < 1e-10);
    assert!(reg.coefficients.iter().enumerate().all(|(j, b)| j == 1 || b.abs() < 1e-10));
    assert!(reg.residual_norm < 1e-10);
    let flipped = spec.with_flipped(&[1, 4, 7]);
    let reg2 = regress_color(&flipped, &pair, c.color()).unwrap();
    let reg1 = regress_color(&spec, &pair, c.color()).unwrap();
    for (a, b) in reg1.abs_coefficients.iter().zip(&reg2.abs_coefficients) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn descriptors_match_direct_sums() {
    let c = small_fixture(1);
    let pair = build_laplacian(&c, &build_knn(&c, 20).unwrap()).unwrap();
    let spec = solve_eigs(&pair, 20).unwrap();
    let lam = spec.eigenvalues();
    let (t0, t1) = default_hks_range(&spec).unwrap();
    let hks = compute_hks(&spec, 5, t0, t1).unwrap();
    for (c_idx, &t) in hks.scales.iter().enumerate() {
        for x in (0..spec.n()).step_by(17) {
            let direct: f64 = (1..spec.k()).map(|j| (-lam[j] * t).exp() * spec.eigenfunction(j)[x].powi(2)).sum();
            assert!((hks.get(x, c_idx) - direct).abs() <= 1e-10 * direct.max(1e-300));
            assert!(hks.get(x, c_idx) > 0.0);
        }
    }
    let sigma = 0.2;
    let wks = compute_wks(&spec, 8, Some(sigma)).unwrap();
    let (lo, hi) = (lam[1].ln(), lam[spec.k() - 1].ln());
    assert!((wks.scales[0] - (lo + 2.0 * sigma)).abs() < 1e-12);
    assert!((wks.scales[7] - (hi - 2.0 * sigma)).abs() < 1e-12);
    for (c_idx, &e) in wks.scales.iter().enumerate() {
        let w: Vec<f64> = (1..spec.k()).map(|j| (-(e - lam[j].ln()).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
        let norm: f64 = w.iter().sum();
        for x in (0..spec.n()).step_by(13) {
            let direct: f64 = (1..spec.k()).map(|j| w[j - 1] * spec.eigenfunction(j)[x].powi(2)).sum::<f64>() / norm;
            assert!((wks.get(x, c_idx) - direct).abs() <= 1e-10 * direct.abs().max(1e-300));
        }
    }
    // sign invariance
    let f = spec.with_flipped(&[2, 3, 9]);
    assert_eq!(compute_hks(&f, 5, t0, t1).unwrap(), hks);
    assert_eq!(compute_wks(&f, 8, Some(sigma)).unwrap(), wks);
    // long-time decay once the zero mode is excluded
    let late = compute_hks(&spec, 2, 1e6 / lam[1], 2e6 / lam[1]).unwrap();
    assert!((0..spec.n()).all(|x| late.get(x, 0) <= 1e-6));
}

#[test]
fn rigid_motion_preserves_spectrum() {
    for i in 0..3 {
        let c = small_fixture(i);
        let moved = c.transformed(&common::rotation(1.1), [1.0, 2.0, 3.0]).unwrap();
        let a = solve_eigs(&build_laplacian(&c, &build_knn(&c, 20).unwrap()).unwrap(), 20).unwrap();
        let b = solve_eigs(&build_laplacian(&moved, &build_knn(&moved, 20).unwrap()).unwrap(), 20).unwrap();
        for j in 1..20 {
            assert!(rel_err(a.eigenvalues()[j], b.eigenvalues()[j], 1e-12) < 1e-6);
        }
    }
}
