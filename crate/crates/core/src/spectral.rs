//! Lower spectrum of the Laplace–Beltrami pair, color regression onto the
//! eigenbasis, and HKS/WKS point descriptors.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;

use crate::error::{param, Error, Result};
use crate::laplacian::LaplacianPair;
use crate::linalg::lanczos::{largest_eigenpairs, LanczosParams};
use crate::linalg::ldl::EnvelopeLdl;
use crate::linalg::{dot, norm};
use crate::math;
use crate::rng::StreamRng;

/// Which eigensolver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    /// Dense below `dense_threshold` points, shift-invert Lanczos above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub path: SolverPath,
    pub dense_threshold: usize,
    /// Operator applications allowed per requested eigenpair.
    pub budget_per_pair: usize,
    /// Relative Ritz error bound used to stop the Lanczos iteration.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            path: SolverPath::Auto,
            dense_threshold: 400,
            budget_per_pair: 50,
            tolerance: 1e-10,
            seed: 0x5eed,
        }
    }
}

/// The `k` smallest generalized eigenpairs of `L u = λ M u`.
///
/// Eigenfunctions are M-orthonormal and sign-normalized so that the entry
/// of largest magnitude is positive (first such entry on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    eigenvalues: Vec<f64>,
    /// column-major `n × k`
    eigenfunctions: Vec<f64>,
    residuals: Vec<f64>,
}

impl Spectrum {
    /// Assemble from explicit eigenpairs (column-major `n × k`). No
    /// normalization is applied.
    pub fn from_parts(n: usize, eigenvalues: Vec<f64>, eigenfunctions: Vec<f64>) -> Result<Self> {
        if eigenfunctions.len() != n * eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                expected: n * eigenvalues.len(),
                found: eigenfunctions.len(),
            });
        }
        let k = eigenvalues.len();
        Ok(Self {
            n,
            eigenvalues,
            eigenfunctions,
            residuals: vec![f64::NAN; k],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunction(&self, j: usize) -> &[f64] {
        &self.eigenfunctions[j * self.n..(j + 1) * self.n]
    }

    /// Relative residual `‖L u − λ M u‖ / ‖M u‖` of every pair, as measured
    /// at solve time.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Copy with the sign of eigenfunction `j` flipped for every `j` in
    /// `columns`.
    pub fn with_flipped(&self, columns: &[usize]) -> Self {
        let mut s = self.clone();
        for &j in columns {
            for v in &mut s.eigenfunctions[j * self.n..(j + 1) * self.n] {
                *v = -*v;
            }
        }
        s
    }

    /// `max |Uᵀ M U − I|`.
    pub fn orthonormality_error(&self, mass: &[f64]) -> f64 {
        let k = self.k();
        let mut worst = 0.0f64;
        for a in 0..k {
            let ua = self.eigenfunction(a);
            for b in a..k {
                let ub = self.eigenfunction(b);
                let g: f64 = ua.iter().zip(ub).zip(mass).map(|((x, y), m)| x * m * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// Solve for the `k` smallest eigenpairs with default options.
pub fn solve_eigs(pair: &LaplacianPair, k: usize) -> Result<Spectrum> {
    solve_eigs_with(pair, k, &SolverOptions::default())
}

pub fn solve_eigs_with(pair: &LaplacianPair, k: usize, opts: &SolverOptions) -> Result<Spectrum> {
    let n = pair.n();
    if k == 0 || k >= n {
        return Err(param(alloc::format!("eigenpair count k={k} must satisfy 0 < k < n={n}")));
    }
    let dense = match opts.path {
        SolverPath::Dense => true,
        SolverPath::Iterative => false,
        SolverPath::Auto => n <= opts.dense_threshold,
    };
    let (values, std_vectors) = if dense {
        dense_standard(pair, k)?
    } else {
        iterative_standard(pair, k, opts)?
    };

    let inv_sqrt: Vec<f64> = pair.mass.iter().map(|m| 1.0 / math::sqrt(*m)).collect();
    let mut eigenfunctions = Vec::with_capacity(n * k);
    for x in &std_vectors {
        let mut u: Vec<f64> = x.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
        normalize_sign(&mut u);
        eigenfunctions.extend(u);
    }
    let mut spec = Spectrum {
        n,
        eigenvalues: values,
        eigenfunctions,
        residuals: vec![0.0; k],
    };
    let scale = spec.eigenvalues.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    for j in 0..k {
        spec.residuals[j] = generalized_residual(pair, spec.eigenfunction(j), spec.eigenvalues[j]);
        let r = spec.residuals[j] / spec.eigenvalues[j].abs().max(1e-3 * scale);
        if !(r <= 1e-6) {
            return Err(Error::Solver {
                requested: k,
                converged: j,
                residual: r,
            });
        }
    }
    warn_repeated(&spec.eigenvalues);
    Ok(spec)
}

/// `‖L u − λ M u‖₂ / ‖M u‖₂`
pub fn generalized_residual(pair: &LaplacianPair, u: &[f64], lambda: f64) -> f64 {
    let mut lu = vec![0.0; u.len()];
    pair.stiffness.mul_vec(u, &mut lu);
    let mut r2 = 0.0;
    let mut m2 = 0.0;
    for i in 0..u.len() {
        let mu = pair.mass[i] * u[i];
        r2 += math::sq(lu[i] - lambda * mu);
        m2 += mu * mu;
    }
    math::sqrt(r2 / m2)
}

fn warn_repeated(values: &[f64]) {
    for j in 1..values.len().saturating_sub(1) {
        let (a, b) = (values[j], values[j + 1]);
        if (b - a).abs() < 1e-6 * b.abs() {
            log::warn!("eigenvalues {j} and {} nearly coincide ({a:.6e}); eigenbasis is ambiguous", j + 1);
        }
    }
}

fn normalize_sign(u: &mut [f64]) {
    let mut best = 0usize;
    for (i, v) in u.iter().enumerate() {
        if v.abs() > u[best].abs() {
            best = i;
        }
    }
    if u[best] < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Dense symmetric eigendecomposition of `M^{-1/2} L M^{-1/2}`.
fn dense_standard(pair: &LaplacianPair, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = pair.n();
    let inv_sqrt: Vec<f64> = pair.mass.iter().map(|m| 1.0 / math::sqrt(*m)).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in pair.stiffness.triplets() {
        a[(i, j)] = v * inv_sqrt[i] * inv_sqrt[j];
    }
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order[..k].iter().map(|&c| eig.eigenvalues[c]).collect();
    let vectors = order[..k].iter().map(|&c| eig.eigenvectors.column(c).iter().copied().collect()).collect();
    Ok((values, vectors))
}

/// Apply `M^{-1/2} L M^{-1/2}` to `x`.
fn apply_standard(pair: &LaplacianPair, inv_sqrt: &[f64], x: &[f64], tmp: &mut [f64], out: &mut [f64]) {
    for i in 0..x.len() {
        tmp[i] = x[i] * inv_sqrt[i];
    }
    pair.stiffness.mul_vec(tmp, out);
    for i in 0..x.len() {
        out[i] *= inv_sqrt[i];
    }
}

/// Shift-invert Lanczos on the standard form with the constant mode
/// deflated analytically. Missing eigenvalues (e.g. from exact
/// multiplicities) are detected by a Sylvester inertia count and recovered
/// by restarting with all found vectors deflated.
fn iterative_standard(pair: &LaplacianPair, k: usize, opts: &SolverOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = pair.n();
    let total_mass = pair.total_mass();
    let sqrt_m: Vec<f64> = pair.mass.iter().map(|m| math::sqrt(*m)).collect();
    let inv_sqrt: Vec<f64> = sqrt_m.iter().map(|s| 1.0 / s).collect();
    // small positive shift: L + δM is positive definite
    let delta = 0.1 / total_mass;
    let shift: Vec<f64> = pair.mass.iter().map(|m| delta * m).collect();
    let ldl = EnvelopeLdl::factor(&pair.stiffness, &shift)?;

    let z0: Vec<f64> = sqrt_m.iter().map(|s| s / math::sqrt(total_mass)).collect();
    let mut tmp = vec![0.0; n];
    let mut ax = vec![0.0; n];
    apply_standard(pair, &inv_sqrt, &z0, &mut tmp, &mut ax);
    let mut found: Vec<(f64, Vec<f64>)> = vec![(dot(&z0, &ax), z0)];

    let budget = opts.budget_per_pair * k;
    let mut used = 0;
    let mut rng = StreamRng::seed_from_u64(crate::rng::derive(opts.seed, crate::rng::domain::SOLVER));
    let mut work = Vec::with_capacity(n);
    let mut need = k - 1;

    for _round in 0..6 {
        if need > 0 {
            let deflate: Vec<Vec<f64>> = found.iter().map(|(_, v)| v.clone()).collect();
            let nev = need.min(n - deflate.len());
            let params = LanczosParams {
                nev,
                max_applications: budget.saturating_sub(used).max(nev + 1),
                tol: opts.tolerance,
            };
            let op = |x: &[f64], y: &mut [f64]| {
                for i in 0..n {
                    y[i] = x[i] * sqrt_m[i];
                }
                ldl.solve(y, &mut work);
                for i in 0..n {
                    y[i] *= sqrt_m[i];
                }
            };
            let res = largest_eigenpairs(n, op, &deflate, &params, &mut rng).map_err(|e| match e {
                Error::Solver { .. } => Error::Solver {
                    requested: k,
                    converged: found.len(),
                    residual: f64::NAN,
                },
                other => other,
            })?;
            used += res.applications;
            for x in res.vectors {
                apply_standard(pair, &inv_sqrt, &x, &mut tmp, &mut ax);
                found.push((dot(&x, &ax), x));
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        // Sylvester check: everything below the k-th value must be in hand
        let top = found[k - 1].0;
        let sigma = top + 1e-6 * top.abs() + 1e-12 / total_mass;
        let below = found.iter().filter(|(v, _)| *v < sigma).count();
        let count = inertia_below(pair, sigma).unwrap_or(below);
        if count <= below {
            found.truncate(k);
            let values = found.iter().map(|(v, _)| *v).collect();
            let vectors = found.into_iter().map(|(_, x)| x).collect();
            return Ok((values, vectors));
        }
        log::debug!("inertia count {count} exceeds {below} found eigenvalues; restarting with deflation");
        need = count - below;
    }
    Err(Error::Solver {
        requested: k,
        converged: found.len().min(k),
        residual: f64::NAN,
    })
}

/// Number of generalized eigenvalues below `sigma`, from the pivot signs
/// of `L − σM`. A zero pivot nudges σ slightly upward.
pub fn inertia_below(pair: &LaplacianPair, sigma: f64) -> Result<usize> {
    let mut s = sigma;
    let mut last = Error::Numerical("inertia count failed".into());
    for _ in 0..4 {
        let shifted: Vec<f64> = pair.mass.iter().map(|m| -s * m).collect();
        match EnvelopeLdl::factor(&pair.stiffness, &shifted) {
            Ok(f) => return Ok(f.negative_pivots()),
            Err(e) => last = e,
        }
        s += 1e-9 * s.abs().max(1e-300);
    }
    Err(last)
}

/// Eigenvalues with the zero mode removed.
pub fn drop_zero_eigenvalue(spec: &Spectrum) -> Vec<f64> {
    spec.eigenvalues[1..].to_vec()
}

/// Mass-weighted least-squares fit of a color field onto the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorRegression {
    pub coefficients: Vec<f64>,
    pub abs_coefficients: Vec<f64>,
    /// `‖y − U β̂‖_M`
    pub residual_norm: f64,
    /// `‖y‖_M`
    pub color_norm: f64,
}

/// `β̂ = Uᵀ M y`, which equals the weighted least-squares solution because
/// `Uᵀ M U = I`.
pub fn regress_color(spec: &Spectrum, pair: &LaplacianPair, color: &[f64]) -> Result<ColorRegression> {
    let n = spec.n();
    if color.len() != n || pair.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if color.len() != n { color.len() } else { pair.n() },
        });
    }
    let my: Vec<f64> = color.iter().zip(&pair.mass).map(|(y, m)| y * m).collect();
    let coefficients: Vec<f64> = (0..spec.k()).map(|j| dot(spec.eigenfunction(j), &my)).collect();
    let mut fit = vec![0.0; n];
    for (j, b) in coefficients.iter().enumerate() {
        crate::linalg::axpy(*b, spec.eigenfunction(j), &mut fit);
    }
    let residual_norm = math::sqrt(
        color
            .iter()
            .zip(&fit)
            .zip(&pair.mass)
            .map(|((y, f), m)| m * (y - f) * (y - f))
            .sum(),
    );
    let color_norm = math::sqrt(dot(color, &my));
    Ok(ColorRegression {
        abs_coefficients: coefficients.iter().map(|b| b.abs()).collect(),
        coefficients,
        residual_norm,
        color_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorKind {
    Hks,
    Wks,
    Stacked,
}

/// Per-point spectral descriptors, row-major `n × p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorMatrix {
    pub kind: DescriptorKind,
    pub n: usize,
    /// HKS times or WKS log-energies, one per column.
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
}

impl DescriptorMatrix {
    pub fn p(&self) -> usize {
        self.scales.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.p() + c]
    }
}

fn nonzero_eigenvalues(spec: &Spectrum, what: &str) -> Result<(f64, f64)> {
    let ev = spec.eigenvalues();
    if ev.len() < 2 || !(ev[1] > 0.0) {
        return Err(param(alloc::format!("{what} needs a positive second eigenvalue")));
    }
    Ok((ev[1], ev[ev.len() - 1]))
}

/// Default HKS time range `[4 ln 10 / λ_max, 4 ln 10 / λ_2]`.
pub fn default_hks_range(spec: &Spectrum) -> Result<(f64, f64)> {
    let (l2, lmax) = nonzero_eigenvalues(spec, "HKS")?;
    let c = 4.0 * core::f64::consts::LN_10;
    Ok((c / lmax, c / l2))
}

/// Heat kernel signature `Σ_{j≥1} exp(−λ_j t) u_j(x)²` at `count`
/// log-spaced times in `[t_min, t_max]`.
pub fn compute_hks(spec: &Spectrum, count: usize, t_min: f64, t_max: f64) -> Result<DescriptorMatrix> {
    nonzero_eigenvalues(spec, "HKS")?;
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(param("HKS times need 0 < t_min < t_max"));
    }
    let times: Vec<f64> = log_space(t_min, t_max, count);
    let weights: Vec<Vec<f64>> = times
        .iter()
        .map(|t| spec.eigenvalues()[1..].iter().map(|l| math::exp(-l * t)).collect())
        .collect();
    Ok(DescriptorMatrix {
        kind: DescriptorKind::Hks,
        n: spec.n(),
        values: squared_weighted(spec, &weights),
        scales: times,
    })
}

pub fn compute_hks_default(spec: &Spectrum, count: usize) -> Result<DescriptorMatrix> {
    let (a, b) = default_hks_range(spec)?;
    compute_hks(spec, count, a, b)
}

/// Wave kernel signature with per-energy normalization
/// `C_e = 1 / Σ_j exp(−(e − log λ_j)² / 2σ²)`. Energies are uniform in
/// `[log λ_2 + 2σ, log λ_max − 2σ]`; `sigma` defaults to seven times the
/// energy spacing of the unshrunk range. If the shrunk interval would be
/// empty the full range is used.
pub fn compute_wks(spec: &Spectrum, count: usize, sigma: Option<f64>) -> Result<DescriptorMatrix> {
    let ev = &spec.eigenvalues()[1..];
    if ev.len() < 2 || ev.iter().any(|l| !(*l > 0.0)) {
        return Err(param("WKS needs at least two positive eigenvalues beyond the zero mode"));
    }
    let logs: Vec<f64> = ev.iter().map(|l| math::ln(*l)).collect();
    let (lo, hi) = (logs[0], logs[logs.len() - 1]);
    let sigma = match sigma {
        Some(s) if s > 0.0 => s,
        Some(_) => return Err(param("WKS sigma must be positive")),
        None => 7.0 * (hi - lo) / count.max(1) as f64,
    };
    if !(sigma > 0.0) {
        return Err(param("WKS needs a spread of nonzero eigenvalues"));
    }
    let (mut e0, mut e1) = (lo + 2.0 * sigma, hi - 2.0 * sigma);
    if e0 >= e1 {
        e0 = lo;
        e1 = hi;
    }
    let energies = lin_space(e0, e1, count);
    let weights: Vec<Vec<f64>> = energies
        .iter()
        .map(|e| {
            let w: Vec<f64> = logs.iter().map(|l| math::exp(-(e - l) * (e - l) / (2.0 * sigma * sigma))).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect();
    Ok(DescriptorMatrix {
        kind: DescriptorKind::Wks,
        n: spec.n(),
        values: squared_weighted(spec, &weights),
        scales: energies,
    })
}

/// `values[x, c] = Σ_{j≥1} weights[c][j−1] u_j(x)²`
fn squared_weighted(spec: &Spectrum, weights: &[Vec<f64>]) -> Vec<f64> {
    let n = spec.n();
    let p = weights.len();
    let mut out = vec![0.0; n * p];
    for j in 1..spec.k() {
        let u = spec.eigenfunction(j);
        for (x, ux) in u.iter().enumerate() {
            let u2 = ux * ux;
            let row = &mut out[x * p..(x + 1) * p];
            for (c, w) in weights.iter().enumerate() {
                row[c] += w[j - 1] * u2;
            }
        }
    }
    out
}

fn log_space(a: f64, b: f64, count: usize) -> Vec<f64> {
    lin_space(math::ln(a), math::ln(b), count).into_iter().map(math::exp).collect()
}

fn lin_space(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// Column-concatenate HKS then WKS.
pub fn stack_descriptors(hks: &DescriptorMatrix, wks: &DescriptorMatrix) -> Result<DescriptorMatrix> {
    if hks.n != wks.n {
        return Err(Error::DimensionMismatch {
            expected: hks.n,
            found: wks.n,
        });
    }
    let (p1, p2) = (hks.p(), wks.p());
    let mut values = Vec::with_capacity(hks.n * (p1 + p2));
    for i in 0..hks.n {
        values.extend_from_slice(hks.row(i));
        values.extend_from_slice(wks.row(i));
    }
    let mut scales = hks.scales.clone();
    scales.extend_from_slice(&wks.scales);
    Ok(DescriptorMatrix {
        kind: DescriptorKind::Stacked,
        n: hks.n,
        scales,
        values,
    })
}

/// Default stacked descriptor: `count_each` HKS plus `count_each` WKS
/// columns with default scales.
pub fn default_descriptors(spec: &Spectrum, count_each: usize) -> Result<DescriptorMatrix> {
    stack_descriptors(&compute_hks_default(spec, count_each)?, &compute_wks(spec, count_each, None)?)
}

/// Eigenvalue elbow curve over a set of reference spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct ElbowCurve {
    /// Mean log eigenvalue at index `j` (zero mode excluded, so entry 0 is
    /// the first nonzero eigenvalue).
    pub mean_log_eigenvalue: Vec<f64>,
    /// Discrete curvature of the normalized curve; entry `j` refers to the
    /// same index as `mean_log_eigenvalue`.
    pub curvature: Vec<f64>,
    /// Suggested eigenpair count `k` (zero mode included).
    pub suggested_k: usize,
}

/// Maximum-curvature elbow of the mean sorted log-eigenvalue sequence.
///
/// A heuristic stand-in for an external elbow procedure: it looks for the
/// point after which additional eigenvalues grow at a steady rate.
pub fn elbow_suggestion(spectra: &[Vec<f64>]) -> Result<ElbowCurve> {
    let len = spectra.iter().map(|s| s.len()).min().unwrap_or(0);
    if len < 4 {
        return Err(param("elbow rule needs at least 4 nonzero eigenvalues per sample"));
    }
    let mut mean = vec![0.0; len];
    for s in spectra {
        for (m, v) in mean.iter_mut().zip(s) {
            if !(*v > 0.0) {
                return Err(param("elbow rule needs positive eigenvalues"));
            }
            *m += math::ln(*v) / spectra.len() as f64;
        }
    }
    let (lo, hi) = (mean[0], mean[len - 1]);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let y: Vec<f64> = mean.iter().map(|v| (v - lo) / span).collect();
    let h = 1.0 / (len - 1) as f64;
    let mut curvature = vec![0.0; len];
    for j in 1..len - 1 {
        let d1 = (y[j + 1] - y[j - 1]) / (2.0 * h);
        let d2 = (y[j + 1] - 2.0 * y[j] + y[j - 1]) / (h * h);
        curvature[j] = d2.abs() / math::powf(1.0 + d1 * d1, 1.5);
    }
    let best = (1..len - 1)
        .max_by(|&a, &b| curvature[a].total_cmp(&curvature[b]).then(b.cmp(&a)))
        .unwrap_or(1);
    Ok(ElbowCurve {
        mean_log_eigenvalue: mean,
        curvature,
        // index `best` among nonzero eigenvalues -> best + 1 nonzero plus the zero mode
        suggested_k: best + 2,
    })
}

/// Number of connected sign domains of a function over a graph. Exact
/// zeros are ignored.
pub fn nodal_domains(f: &[f64], adjacency: &[Vec<usize>]) -> usize {
    let n = f.len();
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    let mut count = 0;
    for s in 0..n {
        if seen[s] || f[s] == 0.0 {
            continue;
        }
        count += 1;
        let sign = f[s] > 0.0;
        seen[s] = true;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !seen[w] && f[w] != 0.0 && (f[w] > 0.0) == sign {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

/// `‖Uᵀ M y‖₂` against `‖y‖_M` (projection never increases the norm).
pub fn projection_norms(reg: &ColorRegression) -> (f64, f64) {
    (norm(&reg.coefficients), reg.color_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_fixture() -> Spectrum {
        // 3 points, 3 M-orthonormal vectors with unit mass
        let s = 1.0 / math::sqrt(3.0);
        let a = 1.0 / math::sqrt(2.0);
        let b = 1.0 / math::sqrt(6.0);
        Spectrum::from_parts(3, vec![0.0, 2.0, 5.0], vec![s, s, s, a, 0.0, -a, b, -2.0 * b, b]).unwrap()
    }

    #[test]
    fn drop_zero() {
        assert_eq!(drop_zero_eigenvalue(&spec_fixture()), vec![2.0, 5.0]);
        let two = Spectrum::from_parts(1, vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(drop_zero_eigenvalue(&two).len(), 1);
    }

    #[test]
    fn stack_orders_hks_then_wks() {
        let s = spec_fixture();
        let h = compute_hks(&s, 3, 0.1, 1.0).unwrap();
        let w = compute_wks(&s, 2, Some(0.5)).unwrap();
        let st = stack_descriptors(&h, &w).unwrap();
        assert_eq!(st.p(), 5);
        assert_eq!(st.kind, DescriptorKind::Stacked);
        for i in 0..3 {
            assert_eq!(&st.row(i)[..3], h.row(i));
            assert_eq!(&st.row(i)[3..], w.row(i));
        }
        let empty = DescriptorMatrix {
            kind: DescriptorKind::Wks,
            n: 3,
            scales: vec![],
            values: vec![],
        };
        assert_eq!(stack_descriptors(&h, &empty).unwrap().values, h.values);
    }

    #[test]
    fn hks_rejects_bad_times() {
        let s = spec_fixture();
        assert!(compute_hks(&s, 3, 1.0, 0.5).is_err());
        assert!(compute_hks(&s, 3, 0.0, 0.5).is_err());
    }

    #[test]
    fn nodal_domain_count() {
        let adj = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        assert_eq!(nodal_domains(&[1.0, 2.0, -1.0, 3.0], &adj), 3);
        assert_eq!(nodal_domains(&[1.0, 1.0, 1.0, 1.0], &adj), 1);
    }

    #[test]
    fn elbow_finds_knee() {
        // flat then steep: knee at the transition
        let s: Vec<f64> = (0..30).map(|j| if j < 10 { 1.0 + 0.01 * j as f64 } else { math::exp(0.3 * (j - 9) as f64) }).collect();
        let e = elbow_suggestion(&[s]).unwrap();
        assert!((9..=12).contains(&(e.suggested_k - 2)), "{}", e.suggested_k);
    }
}
