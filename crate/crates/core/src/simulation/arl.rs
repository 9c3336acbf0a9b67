//! Monte Carlo run-length studies.
//!
//! Each replication draws a fresh reference sample and designs its own
//! chart. Its ARL is then estimated from many runs whose observations are
//! resampled from a pool of independently generated clouds, so the
//! replication-to-replication spread reflects calibration uncertainty
//! rather than single-run noise. Pools are shared by all replications of a
//! study; designs can be shared across scenarios.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::gl::gl_baseline_features;
use super::nominal::NominalDesign;
use super::sampling::{defect_region, sample_ic, sample_oc_in, DefectKind, DefectSpec, NoiseSpec};
use crate::error::{param, Result};
use crate::features::{extract_features, FeatureOptions, DEFAULT_LBO_NEIGHBORS};
use crate::monitoring::calibrate::calibrate_single_limit;
use crate::monitoring::scheme::mean_sd;
use crate::monitoring::standardize::fit_standardizer;
use crate::monitoring::{design_scheme, CalibrationConfig, CusumChart, MonitoringModel, Signal, Standardizer};
use crate::features::SpectralFeatures;
use crate::par;
use crate::rng::{self, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Smac,
    Gl,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "smac" => Ok(Self::Smac),
            "gl" => Ok(Self::Gl),
            other => Err(param(alloc::format!("unknown method '{other}' (expected smac or gl)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Smac => "smac",
            Self::Gl => "gl",
        }
    }
}

/// Study-level settings beyond the calibration configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ArlStudy {
    pub design: NominalDesign,
    pub noise: NoiseSpec,
    pub cfg: CalibrationConfig,
    pub method: Method,
    pub k_eig: usize,
    pub n_replications: usize,
    /// Independent clouds in each evaluation pool.
    pub pool_size: usize,
    /// Evaluation runs per replication.
    pub runs_per_replication: usize,
    pub rng_seed: u64,
}

/// Single-chart baseline design.
#[derive(Debug, Clone, PartialEq)]
pub struct GlModel {
    pub standardizer: Standardizer,
    pub chart: CusumChart,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateModel {
    Smac(MonitoringModel),
    Gl(GlModel),
}

/// Per-observation statistics of a pool under one replication's design.
struct PoolStats {
    s: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SignalCounts {
    pub shape: usize,
    pub color: usize,
    pub both: usize,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArlSummary {
    pub method: Method,
    pub defect_kind: Option<DefectKind>,
    pub snr: f64,
    pub color_shift: f64,
    pub aarl: f64,
    pub sd: f64,
    pub n_reps: usize,
    /// ARL estimate of each replication.
    pub replication_arls: Vec<f64>,
    pub signal_counts: SignalCounts,
}

impl ArlSummary {
    pub fn defect_name(&self) -> &'static str {
        self.defect_kind.map_or("none", DefectKind::name)
    }
}

impl ArlStudy {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.noise.validate(self.design.len())?;
        if self.k_eig < 2 || self.k_eig >= self.noise.n_min {
            return Err(param("k_eig must satisfy 2 <= k_eig < n_min"));
        }
        if self.pool_size == 0 || self.runs_per_replication == 0 {
            return Err(param("pool_size and runs_per_replication must be positive"));
        }
        Ok(())
    }

    fn features(&self, cloud: &crate::cloud::PointCloud4D) -> Result<SpectralFeatures> {
        let opts = FeatureOptions::with_k(self.k_eig);
        match self.method {
            Method::Smac => extract_features(cloud, &opts),
            Method::Gl => Ok(SpectralFeatures {
                id: String::from(cloud.id()),
                lambda: gl_baseline_features(cloud, DEFAULT_LBO_NEIGHBORS, self.k_eig, &opts.solver)?,
                beta_abs: Vec::new(),
            }),
        }
    }

    /// Design the chart of replication `r` on a fresh reference sample.
    pub fn design_replicate(&self, r: usize) -> Result<ReplicateModel> {
        self.validate()?;
        let m = self.cfg.reference_size();
        let base = rng::derive(self.rng_seed, domain::REPLICATION) ^ (r as u64);
        let reference: Vec<SpectralFeatures> = par::map_range(m, |i| {
            let seed = rng::derive(base, domain::REFERENCE.wrapping_add((i as u64) << 8));
            self.features(&sample_ic(&self.design, &self.noise, seed)?)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let cfg = CalibrationConfig {
            rng_seed: rng::derive(base, domain::BOOTSTRAP_JOINT),
            ..self.cfg
        };
        match self.method {
            Method::Smac => Ok(ReplicateModel::Smac(design_scheme(&reference, &cfg)?)),
            Method::Gl => {
                let (b1, rest) = reference.split_at(cfg.m1);
                let (b2, rest) = rest.split_at(cfg.m2);
                let b3 = &rest[..cfg.m3];
                let standardizer = fit_standardizer(&b1.iter().map(|f| f.lambda.clone()).collect::<Vec<_>>())?;
                let stat = |b: &[SpectralFeatures]| -> Result<Vec<f64>> {
                    b.iter().map(|f| standardizer.statistic(&f.lambda)).collect()
                };
                let moments = mean_sd(&stat(b2)?);
                let (h, _) = calibrate_single_limit(&stat(b3)?, moments, cfg.k_s, &cfg)?;
                Ok(ReplicateModel::Gl(GlModel {
                    chart: CusumChart::new(moments.0, moments.1, cfg.k_s, h),
                    standardizer,
                }))
            }
        }
    }

    pub fn design_all(&self) -> Result<Vec<ReplicateModel>> {
        (0..self.n_replications).map(|r| self.design_replicate(r)).collect()
    }

    /// Features of an evaluation pool: IC when `defect` is `None`. The same
    /// seeds are used for every scenario, so scenarios differ only by the
    /// defect.
    pub fn pool(&self, defect: Option<&DefectSpec>) -> Result<Vec<SpectralFeatures>> {
        let region = defect.map(|d| defect_region(&self.design, d)).transpose()?;
        par::map_range(self.pool_size, |i| {
            let seed = rng::derive(self.rng_seed, domain::POOL.wrapping_add((i as u64) << 8));
            let cloud = match (defect, &region) {
                (Some(d), Some(reg)) => sample_oc_in(&self.design, &self.noise, d, reg, seed)?,
                _ => sample_ic(&self.design, &self.noise, seed)?,
            };
            self.features(&cloud)
        })
        .into_iter()
        .collect()
    }

    /// Estimate each replication's ARL on `pool` and summarize.
    pub fn evaluate(&self, models: &[ReplicateModel], pool: &[SpectralFeatures], defect: Option<&DefectSpec>) -> Result<ArlSummary> {
        let mut arls = Vec::with_capacity(models.len());
        let mut counts = SignalCounts::default();
        for (r, model) in models.iter().enumerate() {
            let stats = pool_stats(model, pool)?;
            let outcomes = par::map_range(self.runs_per_replication, |run| {
                let mut g = rng::stream(self.rng_seed, domain::RUNS, ((r as u64) << 32) | run as u64);
                run_once(model, &stats, self.cfg.max_run_length, &mut g)
            });
            let mut total = 0usize;
            for (len, sig) in outcomes {
                total += len;
                match sig {
                    Some(Signal::Shape) => counts.shape += 1,
                    Some(Signal::Color) => counts.color += 1,
                    Some(Signal::Both) => counts.both += 1,
                    None => counts.censored += 1,
                }
            }
            arls.push(total as f64 / self.runs_per_replication as f64);
        }
        let (aarl, sd) = match arls.len() {
            0 => (f64::NAN, f64::NAN),
            1 => (arls[0], 0.0),
            _ => mean_sd(&arls),
        };
        Ok(ArlSummary {
            method: self.method,
            defect_kind: defect.map(|d| d.kind),
            snr: defect.map_or(1.0, |d| d.snr),
            color_shift: defect.map_or(0.0, |d| d.color_shift),
            aarl,
            sd,
            n_reps: arls.len(),
            replication_arls: arls,
            signal_counts: counts,
        })
    }
}

/// Full study: design every replication, build the pool, evaluate.
pub fn run_arl_study(study: &ArlStudy, defect: Option<&DefectSpec>) -> Result<ArlSummary> {
    study.validate()?;
    if let Some(d) = defect {
        d.validate()?;
    }
    if study.n_replications == 0 {
        return study.evaluate(&[], &[], defect);
    }
    let models = study.design_all()?;
    let pool = study.pool(defect)?;
    study.evaluate(&models, &pool, defect)
}

fn pool_stats(model: &ReplicateModel, pool: &[SpectralFeatures]) -> Result<PoolStats> {
    let mut s = Vec::with_capacity(pool.len());
    let mut c = Vec::with_capacity(pool.len());
    for f in pool {
        match model {
            ReplicateModel::Smac(m) => {
                let (a, b) = m.statistics(f)?;
                s.push(a);
                c.push(b);
            }
            ReplicateModel::Gl(g) => s.push(g.standardizer.statistic(&f.lambda)?),
        }
    }
    Ok(PoolStats { s, c })
}

fn run_once(model: &ReplicateModel, stats: &PoolStats, max_len: usize, g: &mut rng::StreamRng) -> (usize, Option<Signal>) {
    let n = stats.s.len();
    match model {
        ReplicateModel::Smac(m) => {
            let mut st = m.initial_state();
            for t in 1..=max_len {
                let i = g.random_range(0..n);
                if let Some(sig) = st.step(stats.s[i], stats.c[i]) {
                    return (t, Some(sig));
                }
            }
        }
        ReplicateModel::Gl(gl) => {
            let mut chart = gl.chart;
            for t in 1..=max_len {
                chart.step(stats.s[g.random_range(0..n)]);
                if chart.signaling() {
                    return (t, Some(Signal::Shape));
                }
            }
        }
    }
    (max_len, None)
}
