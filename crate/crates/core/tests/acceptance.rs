//! Acceptance suite. Runs every criterion (or those named on the command
//! line, e.g. `cargo test --test acceptance -- 2 9 11`), prints one
//! PASS/FAIL line per criterion and exits nonzero if any failed.
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

mod common;

use std::time::{Duration, Instant};

use common::{dense_standard, jacobi_eigen, rel_err, rotation, small_fixture};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use smac_core::diagnostics::fmap::{descriptor_coefficients, estimate_functional_map, map_objective};
use smac_core::diagnostics::localize::iou;
use smac_core::diagnostics::test::{pointwise_test_with, test_rows, Verdict};
use smac_core::diagnostics::{DiagnosticReference, TransportedTexture};
use smac_core::features::{extract_full, FeatureOptions};
use smac_core::monitoring::{cusum_update, CalibrationConfig, CombinedChartState, CusumChart};
use smac_core::simulation::{
    defect_region, make_nominal, sample_ic, sample_oc_in, ArlStudy, DefectKind, DefectSpec, Method, NoiseSpec,
    NominalDesign, NominalShape,
};
use smac_core::simulation::arl::ReplicateModel;
use smac_core::spectral::{default_descriptors, solve_eigs_with, SolverOptions, SolverPath};
use smac_core::{build_knn, build_laplacian, rng};

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Option<Duration>,
}

fn minutes(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

// Desk-scale settings shared by the Monte Carlo criteria.
const DESK_N: usize = 1500;
const DESK_K: usize = 51;
const DESIGN_SEED: u64 = 1;

fn desk_noise() -> NoiseSpec {
    NoiseSpec { tau_s: 1e-3, tau_c: 0.01, n_min: 1480, n_max: 1500 }
}

// 2. eigensolver versus a dense Jacobi oracle
fn eigensolver_oracle() -> (bool, String) {
    let (mut worst_val, mut worst_orth, mut worst_zero): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..20 {
        let c = small_fixture(i);
        assert!(c.len() <= 300);
        let pair = build_laplacian(&c, &build_knn(&c, 30).unwrap()).unwrap();
        let (oracle, _) = jacobi_eigen(dense_standard(&pair), pair.n());
        let k = 101;
        for path in [SolverPath::Dense, SolverPath::Iterative] {
            let spec = solve_eigs_with(&pair, k, &SolverOptions { path, ..SolverOptions::default() }).unwrap();
            let ev = spec.eigenvalues();
            for j in 1..k {
                worst_val = worst_val.max(rel_err(ev[j], oracle[j], 1e-300));
            }
            worst_orth = worst_orth.max(spec.orthonormality_error(&pair.mass));
            worst_zero = worst_zero.max(ev[0].abs() / ev[1]);
        }
    }
    let pass = worst_val <= 1e-8 && worst_orth <= 1e-6 && worst_zero <= 1e-8;
    (
        pass,
        format!(
            "20 fixtures x {{dense, shift-invert}}, k=101: max rel eigenvalue error {worst_val:.2e} (<= 1e-8), \
             M-orthonormality {worst_orth:.2e} (<= 1e-6), lambda_0/lambda_1 {worst_zero:.2e} (<= 1e-8)"
        ),
    )
}

// 3. rigid motions
fn isometry_invariance() -> (bool, String) {
    let opts = FeatureOptions::with_k(51);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let c = small_fixture(i);
        let moved = c.transformed(&rotation(0.3 + i as f64), [3.0 - i as f64, 0.5 * i as f64, -7.0]).unwrap();
        let a = extract_full(&c, &opts).unwrap();
        let b = extract_full(&moved, &opts).unwrap();
        for (x, y) in a.spectrum.eigenvalues()[1..].iter().zip(&b.spectrum.eigenvalues()[1..]) {
            worst = worst.max(rel_err(*y, *x, 1e-300));
        }
    }
    (worst <= 1e-6, format!("10 fixtures, k=51: max rel eigenvalue change {worst:.2e} (<= 1e-6)"))
}

fn wls(u: &[&[f64]], m: &[f64], y: &[f64]) -> Vec<f64> {
    let k = u.len();
    let w = k + 1;
    let mut a = vec![0.0; k * w];
    for i in 0..k {
        for j in 0..k {
            a[i * w + j] = (0..y.len()).map(|x| u[i][x] * m[x] * u[j][x]).sum();
        }
        a[i * w + k] = (0..y.len()).map(|x| u[i][x] * m[x] * y[x]).sum();
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&p, &q| a[p * w + c].abs().total_cmp(&a[q * w + c].abs())).unwrap();
        for t in 0..w {
            a.swap(c * w + t, piv * w + t);
        }
        for r in 0..k {
            if r != c {
                let f = a[r * w + c] / a[c * w + c];
                for t in c..w {
                    a[r * w + t] -= f * a[c * w + t];
                }
            }
        }
    }
    (0..k).map(|i| a[i * w + k] / a[i * w + i]).collect()
}

// 4. color regression versus dense weighted least squares
fn regression_oracle() -> (bool, String) {
    let k = 51;
    let (mut worst_beta, mut worst_pyth): (f64, f64) = (0.0, 0.0);
    for i in 0..20 {
        let c = small_fixture(i);
        let e = extract_full(&c, &FeatureOptions::with_k(k)).unwrap();
        let u: Vec<&[f64]> = (0..k).map(|j| e.spectrum.eigenfunction(j)).collect();
        let oracle = wls(&u, &e.pair.mass, c.color());
        for (a, b) in e.regression.coefficients.iter().zip(&oracle) {
            worst_beta = worst_beta.max((a - b).abs());
        }
        let y2: f64 = c.color().iter().zip(&e.pair.mass).map(|(y, m)| y * y * m).sum();
        let b2: f64 = e.regression.coefficients.iter().map(|b| b * b).sum();
        worst_pyth = worst_pyth.max(rel_err(e.regression.residual_norm.powi(2) + b2, y2, 1e-300));
    }
    (
        worst_beta <= 1e-8 && worst_pyth <= 1e-8,
        format!("20 fixtures, k=51: max |beta - beta_wls| {worst_beta:.2e} (<= 1e-8), Pythagoras rel error {worst_pyth:.2e} (<= 1e-8)"),
    )
}

// 5. functional-map self-correspondence
fn self_correspondence() -> (bool, String) {
    let mut g = rng::stream(55, 0, 0);
    let (mut dominated, mut rows, mut worst_gain) = (0usize, 0usize, f64::INFINITY);
    for i in 0..5 {
        let c = small_fixture(i);
        let e = extract_full(&c, &FeatureOptions::with_k(30)).unwrap();
        let desc = default_descriptors(&e.spectrum, 50).unwrap();
        let a = descriptor_coefficients(&e.spectrum, &e.pair, &desc).unwrap();
        let lam = e.spectrum.eigenvalues();
        let eta = 1e-3;
        let map = estimate_functional_map(&e.spectrum, &e.pair, &desc, &e.spectrum, &e.pair, &desc, eta).unwrap();
        let k = map.k;
        for r in 0..k {
            let off: f64 = (0..k).filter(|&j| j != r).map(|j| map.get(r, j).abs()).sum();
            rows += 1;
            dominated += usize::from(off < map.get(r, r).abs());
        }
        let base = map_objective(&map.matrix, &a, &a, lam, lam, eta);
        for _ in 0..50 {
            let mut d: Vec<f64> = (0..k * k).map(|_| StandardNormal.sample(&mut g)).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            d.iter_mut().for_each(|v| *v *= 0.01 / norm);
            let perturbed: Vec<f64> = map.matrix.iter().zip(&d).map(|(c, e)| c + e).collect();
            worst_gain = worst_gain.min(map_objective(&perturbed, &a, &a, lam, lam, eta) - base);
        }
    }
    (
        dominated == rows && worst_gain >= 0.0,
        format!(
            "5 fixtures, k=30: {dominated}/{rows} rows with off-diagonal mass below the diagonal; \
             min objective increase over 250 perturbations of radius 0.01 = {worst_gain:.3e} (>= 0)"
        ),
    )
}

// 9. combined first passage = min of the single-chart first passages
fn combined_decomposition() -> (bool, String) {
    let first = |mut chart: CusumChart, xs: &[f64]| {
        xs.iter().position(|x| {
            chart = cusum_update(&chart, *x);
            chart.state > chart.h
        })
    };
    let mut agree = 0;
    let mut alarms = 0;
    for seed in 0..100u64 {
        let mut g = rng::stream(seed, 9, 0);
        let drift_s = g.random_range(0.0..0.4);
        let drift_c = g.random_range(0.0..0.4);
        let s: Vec<f64> = (0..500).map(|_| drift_s + Distribution::<f64>::sample(&StandardNormal, &mut g)).collect();
        let c: Vec<f64> = (0..500).map(|_| drift_c + Distribution::<f64>::sample(&StandardNormal, &mut g)).collect();
        let cs = CusumChart::new(0.0, 1.0, 0.05, g.random_range(3.0..8.0));
        let cc = CusumChart::new(0.0, 1.0, 0.05, g.random_range(3.0..8.0));
        let mut state = CombinedChartState::new(cs, cc);
        let combined = (0..500).find(|&t| state.step(s[t], c[t]).is_some());
        let expected = match (first(cs, &s), first(cc, &c)) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        alarms += usize::from(combined.is_some());
        agree += usize::from(combined == expected);
    }
    (agree == 100, format!("{agree}/100 streams agree exactly ({alarms} with an alarm)"))
}

// 11. hand-computed CUSUM trajectories
fn cusum_micro_oracle() -> (bool, String) {
    // (mu, sigma, k, stream, expected states); dyadic values keep the
    // arithmetic exact
    let cases: [(f64, f64, f64, &[f64], &[f64]); 5] = [
        (0.0, 1.0, 0.25, &[1.25, 1.25, -3.0, 0.75], &[1.0, 2.0, 0.0, 0.5]),
        (10.0, 2.0, 0.5, &[14.0, 12.0, 8.0, 9.0, 20.0], &[1.5, 2.0, 0.5, 0.0, 4.5]),
        (0.0, 0.5, 0.25, &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]),
        (-1.0, 4.0, 0.0, &[3.0, -5.0, -5.0, 7.0], &[1.0, 0.0, 0.0, 2.0]),
        (5.0, 1.0, 1.0, &[8.0, 3.0, 4.0, 7.0, 6.0], &[2.0, 0.0, 0.0, 1.0, 1.0]),
    ];
    let mut exact = 0;
    for (mu, sigma, k, xs, expected) in cases {
        let mut chart = CusumChart::new(mu, sigma, k, 1e9);
        let states: Vec<f64> = xs.iter().map(|x| {
            chart = cusum_update(&chart, *x);
            chart.state
        }).collect();
        exact += usize::from(states == expected);
    }
    (exact == 5, format!("{exact}/5 scripted streams reproduced exactly, including resets at zero"))
}

fn peak_rss_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

fn timed_extract(cloud: &smac_core::PointCloud4D, threads: usize) -> Duration {
    let run = || {
        let t = Instant::now();
        let e = extract_full(cloud, &FeatureOptions::with_k(101)).unwrap();
        assert_eq!(e.features().beta_abs.len(), 101);
        t.elapsed()
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(run)
}

// 10. performance at full cloud size
fn performance() -> (bool, String) {
    let design = make_nominal(&NominalShape::TwoLobe, 8146, 3).unwrap();
    let single = timed_extract(&design.base_cloud, 1);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let (multi_ok, multi_text) = if cfg!(feature = "parallel") && cores >= 8 {
        let t = timed_extract(&design.base_cloud, 8);
        (t.as_secs_f64() <= 20.0, format!("8 threads {:.2}s (<= 20s)", t.as_secs_f64()))
    } else {
        // a sequential run is one admissible schedule of an 8-thread run
        (
            single.as_secs_f64() <= 20.0,
            format!("8 threads not measurable ({cores} core(s)); single-threaded time checked against 20s"),
        )
    };
    let rss = peak_rss_mb();
    let mem_ok = rss.is_some_and(|m| m <= 2048.0);
    (
        single.as_secs_f64() <= 60.0 && multi_ok && mem_ok,
        format!(
            "n=8146, k=101: single-threaded {:.2}s (<= 60s); {multi_text}; peak RSS {} (<= 2048 MB)",
            single.as_secs_f64(),
            rss.map_or("unavailable".into(), |m| format!("{m:.0} MB"))
        ),
    )
}

fn two_lobe_design() -> NominalDesign {
    make_nominal(&NominalShape::TwoLobe, DESK_N, DESIGN_SEED).unwrap()
}

fn transport_many(reference: &DiagnosticReference, clouds: impl Iterator<Item = smac_core::PointCloud4D>) -> Vec<TransportedTexture> {
    clouds.map(|c| reference.transport(&c, smac_core::diagnostics::fmap::DEFAULT_ETA).unwrap()).collect()
}

// 6. family-wise error under exchangeable labels
fn fwer_control() -> (bool, String) {
    let design = two_lobe_design();
    let noise = desk_noise();
    let reference = DiagnosticReference::new(&design.base_cloud, &FeatureOptions::with_k(DESK_K), 100).unwrap();
    let pool_size = 300;
    let pool = transport_many(&reference, (0..pool_size).map(|i| sample_ic(&design, &noise, rng::derive(600, i as u64)).unwrap()));
    let (reps, group) = (200, 20);
    let mut rejections = 0;
    for r in 0..reps {
        let mut g = rng::stream(601, 0, r as u64);
        let mut idx: Vec<usize> = (0..pool_size).collect();
        idx.shuffle(&mut g);
        let a: Vec<&[f64]> = idx[..group].iter().map(|&i| pool[i].values.as_slice()).collect();
        let b: Vec<&[f64]> = idx[group..2 * group].iter().map(|&i| pool[i].values.as_slice()).collect();
        let report = test_rows(&a, &b, &reference.adjacency, 0.01, 999, rng::derive(602, r as u64)).unwrap();
        rejections += usize::from(report.verdict == Verdict::ShapeAndColor);
    }
    let rate = rejections as f64 / reps as f64;
    (
        rate <= 0.03,
        format!("two_lobe n={DESK_N}, k={DESK_K}, {group} vs {group} IC pseudo-groups, alpha=0.01, 999 permutations: {rejections}/{reps} rejections, rate {rate:.3} (<= 0.03)"),
    )
}

// 7. localization of a combined defect
fn localization_quality() -> (bool, String) {
    let design = two_lobe_design();
    let noise = desk_noise();
    let defect = DefectSpec {
        kind: DefectKind::Combined,
        region_fraction: 0.10,
        spot_fraction: 0.05,
        snr: 5.0,
        color_shift: 0.15,
        spot_count: 1,
        anchor: 0,
    };
    let region = defect_region(&design, &defect).unwrap();
    let truth = region.truth(defect.kind).to_vec();
    let reference = DiagnosticReference::new(&design.base_cloud, &FeatureOptions::with_k(DESK_K), 100).unwrap();
    let (reps, group) = (20, 100);
    let (mut detected, mut ious) = (0, Vec::with_capacity(reps));
    for r in 0..reps {
        let base = rng::derive(700, r as u64);
        let ic = transport_many(&reference, (0..group).map(|i| sample_ic(&design, &noise, rng::derive(base, 2 * i as u64)).unwrap()));
        let oc = transport_many(
            &reference,
            (0..group).map(|i| sample_oc_in(&design, &noise, &defect, &region, rng::derive(base, 2 * i as u64 + 1)).unwrap()),
        );
        let report = pointwise_test_with(&ic, &oc, &reference.adjacency, 0.01, 999, rng::derive(base, u64::MAX)).unwrap();
        detected += usize::from(report.verdict == Verdict::ShapeAndColor);
        ious.push(iou(&report.significant_mask, &truth));
    }
    let rate = detected as f64 / reps as f64;
    let mean_iou = ious.iter().sum::<f64>() / reps as f64;
    (
        rate >= 0.9 && mean_iou >= 0.5,
        format!(
            "two_lobe n={DESK_N}, k={DESK_K}, one spot of 5% of points, shift 0.15 (15 tau_c), {group} vs {group}, {reps} replications: \
             detection rate {rate:.2} (>= 0.9), mean IoU {mean_iou:.3} (>= 0.5), min {:.3}",
            ious.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    )
}

fn ic_study() -> ArlStudy {
    ArlStudy {
        design: make_nominal(&NominalShape::Sphere, DESK_N, DESIGN_SEED).unwrap(),
        noise: desk_noise(),
        cfg: CalibrationConfig { m1: 200, m2: 100, m3: 500, k_s: 0.05, k_c: 0.05, arl0: 100.0, ..Default::default() },
        method: Method::Smac,
        k_eig: DESK_K,
        n_replications: 10,
        pool_size: 2000,
        runs_per_replication: 2000,
        rng_seed: 42,
    }
}

// 1. in-control AARL
fn ic_calibration(study: &ArlStudy, models: &[ReplicateModel]) -> (bool, String) {
    let pool = study.pool(None).unwrap();
    let s = study.evaluate(models, &pool, None).unwrap();
    (
        (85.0..=115.0).contains(&s.aarl),
        format!(
            "sphere n={DESK_N}, k={DESK_K}, m=200/100/500, 10 replications: AARL {:.2} (sd {:.2}) in [85, 115]; per replication {:?}",
            s.aarl,
            s.sd,
            s.replication_arls.iter().map(|a| (a * 10.0).round() / 10.0).collect::<Vec<_>>()
        ),
    )
}

// 8. detection power grows with the color shift
fn power_ordering(study: &ArlStudy, models: &[ReplicateModel]) -> (bool, String) {
    let oc_study = ArlStudy { pool_size: 1000, ..study.clone() };
    let mut aarls = Vec::new();
    let mut sources = Vec::new();
    for shift in [0.05, 0.5, 5.0] {
        let defect = DefectSpec {
            kind: DefectKind::ColorSpots,
            region_fraction: 0.05,
            spot_fraction: 0.01,
            snr: 1.0,
            color_shift: shift,
            spot_count: 1,
            anchor: 0,
        };
        let pool = oc_study.pool(Some(&defect)).unwrap();
        let s = oc_study.evaluate(models, &pool, Some(&defect)).unwrap();
        aarls.push(s.aarl);
        sources.push(format!("color {} / shape {} / both {}", s.signal_counts.color, s.signal_counts.shape, s.signal_counts.both));
    }
    let decreasing = aarls.windows(2).all(|w| w[1] < w[0]);
    (
        decreasing && aarls[2] <= 10.0,
        format!(
            "color spots on 1% of points, shifts 0.05 / 0.5 / 5.0: AARL {:.4} > {:.4} > {:.4} (strict), last <= 10; signal sources at 0.5: {}; at 5.0: {}",
            aarls[0], aarls[1], aarls[2], sources[1], sources[2]
        ),
    )
}

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |id: usize| args.is_empty() || args.contains(&id);
    let mut outcomes: Vec<Outcome> = Vec::new();
    let mut run = |id: usize, budget: Option<Duration>, f: &mut dyn FnMut() -> (bool, String)| {
        if !wanted(id) {
            return;
        }
        let t = Instant::now();
        let (pass, detail) = f();
        let elapsed = t.elapsed();
        let o = Outcome { id, pass, detail, elapsed, budget };
        println!("{}", line(&o));
        outcomes.push(o);
    };

    run(11, Some(Duration::from_secs(1)), &mut cusum_micro_oracle);
    run(9, Some(Duration::from_secs(10)), &mut combined_decomposition);
    run(2, minutes(1), &mut eigensolver_oracle);
    run(3, minutes(1), &mut isometry_invariance);
    run(4, minutes(1), &mut regression_oracle);
    run(5, minutes(2), &mut self_correspondence);
    run(10, None, &mut performance);
    run(6, minutes(20), &mut fwer_control);
    run(7, minutes(20), &mut localization_quality);

    if wanted(1) || wanted(8) {
        // both criteria monitor with the same ten designed schemes
        let study = ic_study();
        let t = Instant::now();
        let models = study.design_all().unwrap();
        let design_time = t.elapsed();
        let mut first = true;
        let mut shared = |f: &dyn Fn(&ArlStudy, &[ReplicateModel]) -> (bool, String)| {
            let extra = if std::mem::take(&mut first) { design_time } else { Duration::ZERO };
            let t = Instant::now();
            let r = f(&study, &models);
            (r, t.elapsed() + extra)
        };
        for (id, budget) in [(1usize, minutes(30)), (8, None)] {
            if wanted(id) {
                let ((pass, detail), elapsed) = shared(if id == 1 { &ic_calibration } else { &power_ordering });
                let o = Outcome { id, pass, detail, elapsed, budget };
                println!("{}", line(&o));
                outcomes.push(o);
            }
        }
    }

    outcomes.sort_by_key(|o| o.id);
    println!("\nacceptance summary");
    for o in &outcomes {
        println!("{}", line(o));
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !passed(o)).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", outcomes.len());
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn passed(o: &Outcome) -> bool {
    o.pass && o.budget.is_none_or(|b| o.elapsed <= b)
}

fn line(o: &Outcome) -> String {
    let time = match o.budget {
        Some(b) => format!("{:.1}s of {:.0}s budget", o.elapsed.as_secs_f64(), b.as_secs_f64()),
        None => format!("{:.1}s", o.elapsed.as_secs_f64()),
    };
    format!("criterion {:>2}: {}  {} [{}]", o.id, if passed(o) { "PASS" } else { "FAIL" }, o.detail, time)
}
