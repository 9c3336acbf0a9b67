//! Flat `key = value` study configuration shared by all subcommands.
//!
//! Every run writes the fully resolved configuration next to its outputs;
//! feeding that file back through `--config` reproduces the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use smac_core::features::{FeatureOptions, DEFAULT_K_EIG};
use smac_core::laplacian::LaplacianOptions;
use smac_core::monitoring::CalibrationConfig;
use smac_core::simulation::{DefectKind, DefectSpec, Method, NoiseSpec};
use smac_core::spectral::{SolverOptions, SolverPath};

use crate::error::{Result, SmacError};

/// Desk-scale study size: eigenpairs monitored by `simulate` when
/// `k_eig` is not given.
pub const DESK_K_EIG: usize = 51;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub seed: u64,
    pub threads: usize,

    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub stream: Option<PathBuf>,
    pub ic: Option<PathBuf>,
    pub oc: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub diagnostic_reference: Option<PathBuf>,
    pub color_property: String,

    pub k_eig: Option<usize>,
    pub neighbors: usize,
    pub solver_path: SolverPath,
    pub dense_threshold: usize,
    pub budget_per_pair: usize,
    pub tolerance: f64,
    pub mollify_fraction: f64,

    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    pub arl0: f64,
    pub k_s: f64,
    pub k_c: f64,
    pub n_bootstrap: usize,
    pub max_run_length: usize,

    pub shape: String,
    /// Seeds the nominal geometry, kept apart from `seed` so reference and
    /// stream samples generated separately share one design.
    pub design_seed: u64,
    pub n: usize,
    pub tau_s: f64,
    pub tau_c: f64,
    pub n_min: usize,
    pub n_max: usize,

    pub defect: Option<DefectKind>,
    pub region_fraction: f64,
    pub spot_fraction: f64,
    pub snr: f64,
    pub color_shift: f64,
    pub spot_count: usize,
    pub anchor: u64,

    pub method: Method,
    pub n_replications: usize,
    pub pool_size: usize,
    pub runs_per_replication: usize,

    pub alpha: f64,
    pub n_permutations: usize,
    pub eta: f64,
    pub descriptors_each: usize,
    pub quantile: f64,

    pub count: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let cal = CalibrationConfig::default();
        let solver = SolverOptions::default();
        Self {
            seed: 0,
            threads: 0,
            input: None,
            reference: None,
            stream: None,
            ic: None,
            oc: None,
            calibration: None,
            diagnostic_reference: None,
            color_property: crate::io::DEFAULT_COLOR_PROPERTY.into(),
            k_eig: None,
            neighbors: smac_core::features::DEFAULT_LBO_NEIGHBORS,
            solver_path: solver.path,
            dense_threshold: solver.dense_threshold,
            budget_per_pair: solver.budget_per_pair,
            tolerance: solver.tolerance,
            mollify_fraction: LaplacianOptions::default().mollify_fraction,
            m1: 200,
            m2: 100,
            m3: 500,
            arl0: cal.arl0,
            k_s: cal.k_s,
            k_c: cal.k_c,
            n_bootstrap: cal.n_bootstrap,
            max_run_length: cal.max_run_length,
            shape: "sphere".into(),
            design_seed: 0,
            n: 1500,
            tau_s: 1e-3,
            tau_c: 0.01,
            n_min: 1480,
            n_max: 1500,
            defect: None,
            region_fraction: 0.05,
            spot_fraction: 0.01,
            snr: 1.0,
            color_shift: 0.0,
            spot_count: 3,
            anchor: 0,
            method: Method::Smac,
            n_replications: 10,
            pool_size: 2000,
            runs_per_replication: 2000,
            alpha: smac_core::diagnostics::test::DEFAULT_ALPHA,
            n_permutations: smac_core::diagnostics::test::DEFAULT_PERMUTATIONS,
            eta: smac_core::diagnostics::fmap::DEFAULT_ETA,
            descriptors_each: smac_core::diagnostics::pipeline::DEFAULT_DESCRIPTORS_EACH,
            quantile: smac_core::diagnostics::localize::DEFAULT_QUANTILE,
            count: 10,
        }
    }
}

fn solver_path_name(p: SolverPath) -> &'static str {
    match p {
        SolverPath::Auto => "auto",
        SolverPath::Dense => "dense",
        SolverPath::Iterative => "iterative",
    }
}

fn bad(key: &str, value: &str, what: &str) -> SmacError {
    SmacError::Config(format!("{key} = {value}: expected {what}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, what))
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::formats::read_text(path)?;
        Self::parse(&text).map_err(|e| match e {
            SmacError::Config(m) => SmacError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SmacError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Set one key from its textual value; unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "seed" => self.seed = num(key, v, "an unsigned integer")?,
            "threads" => self.threads = num(key, v, "a count")?,
            "input" => self.input = opt_path(v),
            "reference" => self.reference = opt_path(v),
            "stream" => self.stream = opt_path(v),
            "ic" => self.ic = opt_path(v),
            "oc" => self.oc = opt_path(v),
            "calibration" => self.calibration = opt_path(v),
            "diagnostic_reference" => self.diagnostic_reference = opt_path(v),
            "color_property" => self.color_property = v.to_string(),
            "k_eig" => self.k_eig = Some(num(key, v, "a count")?),
            "neighbors" => self.neighbors = num(key, v, "a count")?,
            "solver_path" => {
                self.solver_path = match v {
                    "auto" => SolverPath::Auto,
                    "dense" => SolverPath::Dense,
                    "iterative" => SolverPath::Iterative,
                    _ => return Err(bad(key, v, "auto, dense or iterative")),
                }
            }
            "dense_threshold" => self.dense_threshold = num(key, v, "a count")?,
            "budget_per_pair" => self.budget_per_pair = num(key, v, "a count")?,
            "tolerance" => self.tolerance = num(key, v, "a real")?,
            "mollify_fraction" => self.mollify_fraction = num(key, v, "a real")?,
            "m1" => self.m1 = num(key, v, "a count")?,
            "m2" => self.m2 = num(key, v, "a count")?,
            "m3" => self.m3 = num(key, v, "a count")?,
            "arl0" => self.arl0 = num(key, v, "a real")?,
            "k_s" => self.k_s = num(key, v, "a real")?,
            "k_c" => self.k_c = num(key, v, "a real")?,
            "n_bootstrap" => self.n_bootstrap = num(key, v, "a count")?,
            "max_run_length" => self.max_run_length = num(key, v, "a count")?,
            "shape" => self.shape = v.to_string(),
            "design_seed" => self.design_seed = num(key, v, "an unsigned integer")?,
            "n" => self.n = num(key, v, "a count")?,
            "tau_s" => self.tau_s = num(key, v, "a real")?,
            "tau_c" => self.tau_c = num(key, v, "a real")?,
            "n_min" => self.n_min = num(key, v, "a count")?,
            "n_max" => self.n_max = num(key, v, "a count")?,
            "defect" => {
                self.defect = match v {
                    "none" => None,
                    other => Some(DefectKind::parse(other).map_err(|_| bad(key, v, "none, roughness, color_spots or combined"))?),
                }
            }
            "region_fraction" => self.region_fraction = num(key, v, "a real")?,
            "spot_fraction" => self.spot_fraction = num(key, v, "a real")?,
            "snr" => self.snr = num(key, v, "a real")?,
            "color_shift" => self.color_shift = num(key, v, "a real")?,
            "spot_count" => self.spot_count = num(key, v, "a count")?,
            "anchor" => self.anchor = num(key, v, "an unsigned integer")?,
            "method" => self.method = Method::parse(v).map_err(|_| bad(key, v, "smac or gl"))?,
            "n_replications" => self.n_replications = num(key, v, "a count")?,
            "pool_size" => self.pool_size = num(key, v, "a count")?,
            "runs_per_replication" => self.runs_per_replication = num(key, v, "a count")?,
            "alpha" => self.alpha = num(key, v, "a real")?,
            "n_permutations" => self.n_permutations = num(key, v, "a count")?,
            "eta" => self.eta = num(key, v, "a real")?,
            "descriptors_each" => self.descriptors_each = num(key, v, "a count")?,
            "quantile" => self.quantile = num(key, v, "a real")?,
            "count" => self.count = num(key, v, "a count")?,
            _ => return Err(SmacError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a form [`StudyConfig::parse`]
    /// reads back to an equal configuration.
    pub fn echo(&self) -> String {
        let mut s = String::from("# resolved configuration\n");
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        kv("seed", &self.seed);
        kv("threads", &self.threads);
        kv("input", &path(&self.input));
        kv("reference", &path(&self.reference));
        kv("stream", &path(&self.stream));
        kv("ic", &path(&self.ic));
        kv("oc", &path(&self.oc));
        kv("calibration", &path(&self.calibration));
        kv("diagnostic_reference", &path(&self.diagnostic_reference));
        kv("color_property", &self.color_property);
        if let Some(k) = self.k_eig {
            kv("k_eig", &k);
        }
        kv("neighbors", &self.neighbors);
        kv("solver_path", &solver_path_name(self.solver_path));
        kv("dense_threshold", &self.dense_threshold);
        kv("budget_per_pair", &self.budget_per_pair);
        kv("tolerance", &self.tolerance);
        kv("mollify_fraction", &self.mollify_fraction);
        kv("m1", &self.m1);
        kv("m2", &self.m2);
        kv("m3", &self.m3);
        kv("arl0", &self.arl0);
        kv("k_s", &self.k_s);
        kv("k_c", &self.k_c);
        kv("n_bootstrap", &self.n_bootstrap);
        kv("max_run_length", &self.max_run_length);
        kv("shape", &self.shape);
        kv("design_seed", &self.design_seed);
        kv("n", &self.n);
        kv("tau_s", &self.tau_s);
        kv("tau_c", &self.tau_c);
        kv("n_min", &self.n_min);
        kv("n_max", &self.n_max);
        kv("defect", &self.defect.map_or("none", DefectKind::name));
        kv("region_fraction", &self.region_fraction);
        kv("spot_fraction", &self.spot_fraction);
        kv("snr", &self.snr);
        kv("color_shift", &self.color_shift);
        kv("spot_count", &self.spot_count);
        kv("anchor", &self.anchor);
        kv("method", &self.method.name());
        kv("n_replications", &self.n_replications);
        kv("pool_size", &self.pool_size);
        kv("runs_per_replication", &self.runs_per_replication);
        kv("alpha", &self.alpha);
        kv("n_permutations", &self.n_permutations);
        kv("eta", &self.eta);
        kv("descriptors_each", &self.descriptors_each);
        kv("quantile", &self.quantile);
        kv("count", &self.count);
        s
    }

    pub fn k_eig_or(&self, default: usize) -> usize {
        self.k_eig.unwrap_or(default)
    }

    pub fn feature_options(&self) -> FeatureOptions {
        let mut o = FeatureOptions::with_k(self.k_eig_or(DEFAULT_K_EIG));
        o.neighbors = self.neighbors;
        o.laplacian.mollify_fraction = self.mollify_fraction;
        o.solver = self.solver_options();
        o
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            path: self.solver_path,
            dense_threshold: self.dense_threshold,
            budget_per_pair: self.budget_per_pair,
            tolerance: self.tolerance,
            ..SolverOptions::default()
        }
    }

    pub fn calibration_config(&self) -> CalibrationConfig {
        CalibrationConfig {
            m1: self.m1,
            m2: self.m2,
            m3: self.m3,
            arl0: self.arl0,
            k_s: self.k_s,
            k_c: self.k_c,
            n_bootstrap: self.n_bootstrap,
            max_run_length: self.max_run_length,
            rng_seed: self.seed,
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec { tau_s: self.tau_s, tau_c: self.tau_c, n_min: self.n_min, n_max: self.n_max }
    }

    pub fn defect_spec(&self) -> Option<DefectSpec> {
        self.defect.map(|kind| DefectSpec {
            kind,
            region_fraction: self.region_fraction,
            spot_fraction: self.spot_fraction,
            snr: self.snr,
            color_shift: self.color_shift,
            spot_count: self.spot_count,
            anchor: self.anchor,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_rejected() {
        let err = StudyConfig::parse("m1 = 10\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, SmacError::Config(m) if m.contains("bogus")));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let cfg = StudyConfig::parse("# hi\n\n  k_eig = 12 \ndefect = combined\n").unwrap();
        assert_eq!(cfg.k_eig, Some(12));
        assert_eq!(cfg.defect, Some(DefectKind::Combined));
    }

    #[test]
    fn default_echo_round_trips() {
        let cfg = StudyConfig::default();
        assert_eq!(StudyConfig::parse(&cfg.echo()).unwrap(), cfg);
    }
}
