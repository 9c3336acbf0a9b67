//! `smac` command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use smac_core::diagnostics::test::{pointwise_test_with, Verdict};
use smac_core::diagnostics::DiagnosticReference;
use smac_core::features::{extract_full, DEFAULT_K_EIG};
use smac_core::monitoring::scheme::extract_all;
use smac_core::monitoring::{design_scheme, monitor_features};
use smac_core::simulation::{
    defect_region, make_nominal, run_arl_study, sample_ic, sample_oc_in, ArlStudy, NominalShape,
};
use smac_core::PointCloud4D;

use crate::config::{StudyConfig, DESK_K_EIG};
use crate::error::{Result, SmacError, EXIT_OK, EXIT_SIGNAL, EXIT_USAGE};
use crate::formats::{self, CalibrationMeta};
use crate::io::{self, CloudFormat};
use crate::svg;

#[derive(Debug, Parser)]
#[command(name = "smac", version, about = "Registration-free shape and color monitoring of 4D point clouds")]
pub struct Cli {
    /// Study configuration file (key = value).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral features (eigenvalues and absolute color coefficients) of clouds.
    Extract(ExtractArgs),
    /// Design the monitoring scheme from a reference sample.
    Calibrate(CalibrateArgs),
    /// Run a calibrated scheme over a stream of clouds.
    Monitor(MonitorArgs),
    /// Post-signal diagnosis: shape-only vs shape-and-color, with localization.
    Diagnose(DiagnoseArgs),
    /// Monte Carlo ARL study.
    Simulate(SimulateArgs),
    /// Generate synthetic fixture clouds.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    /// Eigenpairs per cloud.
    #[arg(long = "k", value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    pub k_eig: Option<u64>,
    /// Neighbors per point for the Laplacian.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub neighbors: Option<u64>,
    /// PLY vertex property holding color.
    #[arg(long)]
    pub color_property: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Cloud files (CSV or PLY).
    pub inputs: Vec<PathBuf>,
    /// Manifest listing cloud files.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Also write L and M of each cloud as `row col value` triplets.
    #[arg(long)]
    pub dump_laplacian: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Manifest of reference clouds, used in order as subsets 1, 2, 3.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long)]
    pub m1: Option<usize>,
    #[arg(long)]
    pub m2: Option<usize>,
    #[arg(long)]
    pub m3: Option<usize>,
    #[arg(long)]
    pub arl0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Calibration file written by `calibrate`.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Manifest of clouds to monitor, in time order.
    #[arg(long)]
    pub stream: Option<PathBuf>,
    #[arg(long)]
    pub color_property: Option<String>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Manifest of in-control clouds.
    #[arg(long)]
    pub ic: Option<PathBuf>,
    /// Manifest of out-of-control clouds.
    #[arg(long)]
    pub oc: Option<PathBuf>,
    /// Calibration file supplying k and the neighborhood size.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Cloud on which textures are compared (default: first IC cloud).
    #[arg(long)]
    pub reference_cloud: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub permutations: Option<usize>,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub replications: Option<usize>,
    /// smac or gl.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// sphere, torus, two_lobe, or a cloud file.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Inject the configured defect into every sample.
    #[arg(long)]
    pub defect: Option<String>,
    #[arg(long)]
    pub color_shift: Option<f64>,
    #[arg(long)]
    pub snr: Option<f64>,
    /// File prefix for generated clouds.
    #[arg(long, default_value = "sample")]
    pub prefix: String,
    #[arg(long)]
    pub ply: bool,
}

fn override_features(cfg: &mut StudyConfig, f: &FeatureArgs) {
    if let Some(k) = f.k_eig {
        cfg.k_eig = Some(k as usize);
    }
    if let Some(n) = f.neighbors {
        cfg.neighbors = n as usize;
    }
    if let Some(p) = &f.color_property {
        cfg.color_property = p.clone();
    }
}

fn require(value: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    value.clone().ok_or_else(|| SmacError::Usage(format!("--{flag} is required (or set it in --config)")))
}

fn load_all(paths: &[PathBuf], cfg: &StudyConfig) -> Result<Vec<PointCloud4D>> {
    paths
        .iter()
        .map(|p| io::load_cloud_with(p, CloudFormat::from_path(p), &cfg.color_property))
        .collect()
}

/// Sample ids from file stems, disambiguated when two files share a stem.
fn with_unique_ids(mut clouds: Vec<PointCloud4D>) -> Vec<PointCloud4D> {
    let mut seen = std::collections::HashMap::<String, usize>::new();
    for c in clouds.iter_mut() {
        let count = seen.entry(c.id().to_string()).or_insert(0);
        *count += 1;
        if *count > 1 {
            let id = format!("{}#{}", c.id(), count);
            *c = c.clone().with_id(id);
        }
    }
    clouds
}

fn init_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::debug!("thread pool already initialized: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    if threads > 1 {
        log::warn!("built without the `parallel` feature; running on one thread");
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("smac: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    init_threads(cfg.threads);
    std::fs::create_dir_all(&cli.out).map_err(|e| SmacError::io(&cli.out, e))?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Extract(a) => extract(cfg, a, out),
        Command::Calibrate(a) => calibrate(cfg, a, out),
        Command::Monitor(a) => monitor(cfg, a, out),
        Command::Diagnose(a) => diagnose(cfg, a, out),
        Command::Simulate(a) => simulate(cfg, a, out),
        Command::Gen(a) => generate(cfg, a, out),
    }
}

fn echo(cfg: &StudyConfig, out: &Path) -> Result<()> {
    formats::write_text(&out.join("resolved.cfg"), &cfg.echo())
}

fn extract(mut cfg: StudyConfig, a: &ExtractArgs, out: &Path) -> Result<i32> {
    override_features(&mut cfg, &a.features);
    let mut paths = a.inputs.clone();
    if let Some(m) = a.manifest.as_ref() {
        paths.extend(formats::read_manifest(m)?);
    }
    if paths.is_empty() {
        if let Some(p) = &cfg.input {
            paths.push(p.clone());
        }
    }
    if paths.is_empty() {
        return Err(SmacError::Usage("no input clouds given".into()));
    }
    cfg.k_eig = Some(cfg.k_eig_or(DEFAULT_K_EIG));
    echo(&cfg, out)?;
    let opts = cfg.feature_options();
    let clouds = with_unique_ids(load_all(&paths, &cfg)?);
    let mut features = Vec::with_capacity(clouds.len());
    for c in &clouds {
        let e = extract_full(c, &opts)?;
        if a.dump_laplacian {
            formats::write_coo(
                &e.pair,
                &out.join(format!("{}.stiffness.coo", c.id())),
                &out.join(format!("{}.mass.coo", c.id())),
            )?;
        }
        log::info!("{}: n = {}, lambda_1 = {:.6e}", c.id(), c.len(), e.spectrum.eigenvalues()[1]);
        features.push(e.features());
    }
    formats::write_features(&out.join("features.csv"), &features)?;
    println!("wrote features of {} clouds to {}", features.len(), out.join("features.csv").display());
    Ok(EXIT_OK)
}

fn calibrate(mut cfg: StudyConfig, a: &CalibrateArgs, out: &Path) -> Result<i32> {
    override_features(&mut cfg, &a.features);
    if let Some(r) = &a.reference {
        cfg.reference = Some(r.clone());
    }
    cfg.m1 = a.m1.unwrap_or(cfg.m1);
    cfg.m2 = a.m2.unwrap_or(cfg.m2);
    cfg.m3 = a.m3.unwrap_or(cfg.m3);
    cfg.arl0 = a.arl0.unwrap_or(cfg.arl0);
    cfg.k_eig = Some(cfg.k_eig_or(DEFAULT_K_EIG));
    let manifest = require(&cfg.reference, "reference")?;
    let cal_cfg = cfg.calibration_config();
    cal_cfg.validate()?;
    echo(&cfg, out)?;
    let paths = formats::read_manifest(&manifest)?;
    if paths.len() < cal_cfg.reference_size() {
        return Err(SmacError::Usage(format!(
            "reference manifest lists {} clouds but m1 + m2 + m3 = {}",
            paths.len(),
            cal_cfg.reference_size()
        )));
    }
    let clouds = with_unique_ids(load_all(&paths, &cfg)?);
    let features = extract_all(&clouds, &cfg.feature_options())?;
    formats::write_features(&out.join("reference_features.csv"), &features)?;
    let model = design_scheme(&features, &cal_cfg)?;
    let path = out.join("calibration.txt");
    formats::write_calibration(&path, &model, &CalibrationMeta { neighbors: cfg.neighbors })?;
    println!(
        "h_s = {:.4}, h_c = {:.4} (bootstrap ARL {:.2}); written to {}",
        model.shape_chart.h,
        model.color_chart.h,
        model.calibration.arl_combined,
        path.display()
    );
    Ok(EXIT_OK)
}

fn monitor(mut cfg: StudyConfig, a: &MonitorArgs, out: &Path) -> Result<i32> {
    if let Some(p) = &a.calibration {
        cfg.calibration = Some(p.clone());
    }
    if let Some(p) = &a.stream {
        cfg.stream = Some(p.clone());
    }
    if let Some(p) = &a.color_property {
        cfg.color_property = p.clone();
    }
    let (model, meta) = formats::read_calibration(&require(&cfg.calibration, "calibration")?)?;
    let stream = require(&cfg.stream, "stream")?;
    cfg.k_eig = Some(model.k_eig);
    cfg.neighbors = meta.neighbors;
    echo(&cfg, out)?;
    let clouds = with_unique_ids(load_all(&formats::read_manifest(&stream)?, &cfg)?);
    let features = extract_all(&clouds, &cfg.feature_options())?;
    let report = monitor_features(&model, &features)?;
    formats::write_steps(&out.join("steps.csv"), &report)?;
    formats::write_text(&out.join("chart.svg"), &svg::control_chart(&model, &report))?;
    match (report.run_length, report.first_signal) {
        (Some(t), Some(sig)) => {
            println!("signal at t = {t} ({}), sample {}", sig.name(), clouds[t - 1].id());
            Ok(EXIT_SIGNAL)
        }
        _ => {
            println!("no signal over {} samples", report.steps.len());
            Ok(EXIT_OK)
        }
    }
}

fn diagnose(mut cfg: StudyConfig, a: &DiagnoseArgs, out: &Path) -> Result<i32> {
    override_features(&mut cfg, &a.features);
    for (slot, v) in [(&mut cfg.ic, &a.ic), (&mut cfg.oc, &a.oc), (&mut cfg.calibration, &a.calibration)] {
        if let Some(p) = v {
            *slot = Some(p.clone());
        }
    }
    if let Some(p) = &a.reference_cloud {
        cfg.diagnostic_reference = Some(p.clone());
    }
    cfg.alpha = a.alpha.unwrap_or(cfg.alpha);
    cfg.n_permutations = a.permutations.unwrap_or(cfg.n_permutations);
    if let Some(cal) = &cfg.calibration {
        let (model, meta) = formats::read_calibration(cal)?;
        cfg.k_eig = Some(model.k_eig);
        cfg.neighbors = meta.neighbors;
    }
    cfg.k_eig = Some(cfg.k_eig_or(DEFAULT_K_EIG));
    let ic_paths = formats::read_manifest(&require(&cfg.ic, "ic")?)?;
    let oc_paths = formats::read_manifest(&require(&cfg.oc, "oc")?)?;
    if ic_paths.len() + oc_paths.len() < 3 {
        return Err(SmacError::Usage(format!(
            "groups of sizes {} and {} leave no within-group degrees of freedom for the F test",
            ic_paths.len(),
            oc_paths.len()
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) || cfg.n_permutations == 0 {
        return Err(SmacError::Usage("alpha must lie in (0, 1) and permutations must be positive".into()));
    }
    echo(&cfg, out)?;
    let opts = cfg.feature_options();
    let reference_cloud = match &cfg.diagnostic_reference {
        Some(p) => io::load_cloud_with(p, CloudFormat::from_path(p), &cfg.color_property)?,
        None => io::load_cloud_with(&ic_paths[0], CloudFormat::from_path(&ic_paths[0]), &cfg.color_property)?,
    };
    let reference = DiagnosticReference::new(&reference_cloud, &opts, cfg.descriptors_each)?;
    let transport = |paths: &[PathBuf]| -> Result<Vec<_>> {
        load_all(paths, &cfg)?.iter().map(|c| Ok(reference.transport(c, cfg.eta)?)).collect()
    };
    let ic = transport(&ic_paths)?;
    let oc = transport(&oc_paths)?;
    let report = pointwise_test_with(&ic, &oc, &reference.adjacency, cfg.alpha, cfg.n_permutations, cfg.seed)?;
    formats::write_pointwise(&out.join("pointwise.csv"), &report)?;
    let mask: Vec<f64> = report.significant_mask.iter().map(|&m| f64::from(u8::from(m))).collect();
    io::write_ply(&reference.cloud, &out.join("mask.ply"), &[("mask", &mask)])?;
    let hits = report.significant_mask.iter().filter(|m| **m).count();
    let detail = match report.verdict {
        Verdict::ShapeOnly => "no point with a significant color difference".to_string(),
        Verdict::ShapeAndColor => format!("{hits} of {} reference points differ in color", reference.n()),
    };
    println!("verdict: {} ({detail})", report.verdict.name());
    Ok(EXIT_OK)
}

fn nominal_shape(cfg: &StudyConfig) -> Result<NominalShape> {
    match NominalShape::parse(&cfg.shape) {
        Ok(s) => Ok(s),
        Err(_) => {
            let p = PathBuf::from(&cfg.shape);
            if p.exists() {
                Ok(NominalShape::FromCloud(io::load_cloud_with(&p, CloudFormat::from_path(&p), &cfg.color_property)?))
            } else {
                Err(SmacError::Config(format!(
                    "shape = {}: expected sphere, torus, two_lobe or an existing cloud file",
                    cfg.shape
                )))
            }
        }
    }
}

fn simulate(mut cfg: StudyConfig, a: &SimulateArgs, out: &Path) -> Result<i32> {
    cfg.n_replications = a.replications.unwrap_or(cfg.n_replications);
    if let Some(m) = &a.method {
        cfg.set("method", m)?;
    }
    cfg.k_eig = Some(cfg.k_eig_or(DESK_K_EIG));
    let defect = cfg.defect_spec();
    if let Some(d) = &defect {
        d.validate()?;
    }
    let shape = nominal_shape(&cfg)?;
    let design = make_nominal(&shape, cfg.n, cfg.design_seed)?;
    let study = ArlStudy {
        design,
        noise: cfg.noise(),
        cfg: cfg.calibration_config(),
        method: cfg.method,
        k_eig: cfg.k_eig_or(DESK_K_EIG),
        n_replications: cfg.n_replications,
        pool_size: cfg.pool_size,
        runs_per_replication: cfg.runs_per_replication,
        rng_seed: cfg.seed,
    };
    study.validate()?;
    echo(&cfg, out)?;
    let summary = run_arl_study(&study, defect.as_ref())?;
    let summaries = [summary];
    formats::write_arl_summary(&out.join("arl_summary.csv"), &summaries)?;
    formats::write_replications(&out.join("arl_replications.csv"), &summaries)?;
    let s = &summaries[0];
    println!("{} {}: AARL {:.2} (sd {:.2}) over {} replications", s.method.name(), s.defect_name(), s.aarl, s.sd, s.n_reps);
    Ok(EXIT_OK)
}

fn generate(mut cfg: StudyConfig, a: &GenArgs, out: &Path) -> Result<i32> {
    if let Some(s) = &a.shape {
        cfg.shape = s.clone();
    }
    if let Some(n) = a.n {
        cfg.n = n;
        cfg.n_max = cfg.n_max.min(n);
        cfg.n_min = cfg.n_min.min(cfg.n_max);
    }
    cfg.count = a.count.unwrap_or(cfg.count);
    if let Some(d) = &a.defect {
        cfg.set("defect", d)?;
    }
    cfg.color_shift = a.color_shift.unwrap_or(cfg.color_shift);
    cfg.snr = a.snr.unwrap_or(cfg.snr);
    let shape = nominal_shape(&cfg)?;
    let design = make_nominal(&shape, cfg.n, cfg.design_seed)?;
    let noise = cfg.noise();
    noise.validate(design.base_cloud.len())?;
    let defect = cfg.defect_spec();
    echo(&cfg, out)?;
    let region = defect.as_ref().map(|d| defect_region(&design, d)).transpose()?;
    let ext = if a.ply { "ply" } else { "csv" };
    let format = if a.ply { CloudFormat::Ply } else { CloudFormat::Csv };
    let mut names = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let seed = smac_core::rng::derive(cfg.seed, 1 + i as u64);
        let cloud = match (&defect, &region) {
            (Some(d), Some(r)) => sample_oc_in(&design, &noise, d, r, seed)?,
            _ => sample_ic(&design, &noise, seed)?,
        };
        let name = format!("{}_{i:04}.{ext}", a.prefix);
        io::save_cloud(&cloud, &out.join(&name), format)?;
        names.push(name);
    }
    formats::write_manifest(&out.join(format!("{}_manifest.txt", a.prefix)), &names)?;
    let truth: Vec<f64> = match (&defect, &region) {
        (Some(d), Some(r)) => r.truth(d.kind).iter().map(|&m| f64::from(u8::from(m))).collect(),
        _ => vec![0.0; design.base_cloud.len()],
    };
    io::write_ply(&design.base_cloud, &out.join("nominal.ply"), &[("truth", &truth)])?;
    println!("wrote {} clouds and {}_manifest.txt to {}", cfg.count, a.prefix, out.display());
    Ok(EXIT_OK)
}
