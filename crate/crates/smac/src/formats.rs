//! Text formats exchanged between subcommands: feature tables, the
//! calibration file, manifests, per-step and per-point result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use smac_core::diagnostics::DiagnosticReport;
use smac_core::monitoring::{Calibration, CusumChart, MonitoringModel, MonitoringReport, Standardizer};
use smac_core::simulation::ArlSummary;
use smac_core::features::SpectralFeatures;
use smac_core::LaplacianPair;

use crate::error::{Result, SmacError};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| SmacError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| SmacError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| SmacError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SmacError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> SmacError {
    SmacError::Parse { path: path.into(), line, message: message.into() }
}

/// Lines of a manifest, resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let base = path.parent().unwrap_or(Path::new(""));
    let text = read_file(path)?;
    let entries: Vec<PathBuf> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect();
    if entries.is_empty() {
        return Err(SmacError::Format { path: path.into(), message: "manifest lists no files".into() });
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[String]) -> Result<()> {
    let mut s = String::new();
    for e in entries {
        s.push_str(e);
        s.push('\n');
    }
    write_file(path, &s)
}

pub const FEATURE_HEADER: [&str; 4] = ["sample_id", "feature_kind", "index", "value"];

/// Long-format feature table. `lambda` rows are indexed from 1 (the zero
/// eigenvalue is dropped), `beta_abs` rows from 0.
pub fn write_features(path: &Path, features: &[SpectralFeatures]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| SmacError::Format { path: path.into(), message: e.to_string() };
    w.write_record(FEATURE_HEADER).map_err(csv_err)?;
    for f in features {
        for (i, v) in f.lambda.iter().enumerate() {
            w.write_record([f.id.as_str(), "lambda", &(i + 1).to_string(), &v.to_string()]).map_err(csv_err)?;
        }
        for (i, v) in f.beta_abs.iter().enumerate() {
            w.write_record([f.id.as_str(), "beta_abs", &i.to_string(), &v.to_string()]).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| SmacError::Format { path: path.into(), message: e.to_string() })?;
    write_file(path, &String::from_utf8(bytes).expect("csv output is utf-8"))
}

type Indexed = BTreeMap<usize, f64>;

pub fn read_features(path: &Path) -> Result<Vec<SpectralFeatures>> {
    let text = read_file(path)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut order: Vec<String> = Vec::new();
    // id -> (lambda by index, beta_abs by index)
    let mut table: BTreeMap<String, (Indexed, Indexed)> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        if rec.len() != 4 {
            return Err(parse_err(path, line, "expected sample_id,feature_kind,index,value"));
        }
        let index: usize = rec[2].parse().map_err(|_| parse_err(path, line, "bad index"))?;
        let value: f64 = rec[3].parse().map_err(|_| parse_err(path, line, "bad value"))?;
        let id = rec[0].to_string();
        if !table.contains_key(&id) {
            order.push(id.clone());
        }
        let entry = table.entry(id).or_default();
        match &rec[1] {
            "lambda" => entry.0.insert(index, value),
            "beta_abs" => entry.1.insert(index, value),
            other => return Err(parse_err(path, line, format!("unknown feature kind '{other}'"))),
        };
    }
    order
        .into_iter()
        .map(|id| {
            let (lambda, beta) = table.remove(&id).unwrap();
            let contiguous = |m: &BTreeMap<usize, f64>, start: usize| m.keys().enumerate().all(|(i, k)| *k == i + start);
            if !contiguous(&lambda, 1) || !contiguous(&beta, 0) || beta.len() != lambda.len() + 1 {
                return Err(SmacError::Format { path: path.into(), message: format!("sample '{id}' has gaps in its features") });
            }
            Ok(SpectralFeatures { id, lambda: lambda.into_values().collect(), beta_abs: beta.into_values().collect() })
        })
        .collect()
}

/// `row col value` triplets, 0-based, for L and the diagonal of M.
pub fn write_coo(pair: &LaplacianPair, stiffness: &Path, mass: &Path) -> Result<()> {
    let mut s = String::new();
    for (i, j, v) in pair.stiffness.triplets() {
        let _ = writeln!(s, "{i} {j} {v}");
    }
    write_file(stiffness, &s)?;
    let mut s = String::new();
    for (i, v) in pair.mass.iter().enumerate() {
        let _ = writeln!(s, "{i} {i} {v}");
    }
    write_file(mass, &s)
}

/// Settings recorded alongside a model so later stages extract features
/// the same way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationMeta {
    pub neighbors: usize,
}

fn push_block(s: &mut String, name: &str, rows: &[f64], width: usize) {
    let _ = writeln!(s, "begin {name}");
    for row in rows.chunks(width) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    let _ = writeln!(s, "end");
}

pub fn write_calibration(path: &Path, model: &MonitoringModel, meta: &CalibrationMeta) -> Result<()> {
    let mut s = String::from("# smac calibration\n");
    let cal = &model.calibration;
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("k_eig", model.k_eig.to_string());
    kv("neighbors", meta.neighbors.to_string());
    kv("seed", model.rng_seed.to_string());
    for (name, c) in [("shape", &model.shape_chart), ("color", &model.color_chart)] {
        kv(&format!("{name}.mu"), c.mu.to_string());
        kv(&format!("{name}.sigma"), c.sigma.to_string());
        kv(&format!("{name}.k"), c.k_ref.to_string());
        kv(&format!("{name}.h"), c.h.to_string());
    }
    kv("stage1.h_s", cal.stage1_h_s.to_string());
    kv("stage1.h_c", cal.stage1_h_c.to_string());
    kv("rho", cal.rho.to_string());
    kv("arl.shape", cal.arl_shape.to_string());
    kv("arl.color", cal.arl_color.to_string());
    kv("arl.combined", cal.arl_combined.to_string());
    kv("shape.discrepancy", model.shape_standardizer.training_discrepancy.to_string());
    kv("color.discrepancy", model.color_standardizer.training_discrepancy.to_string());
    for (name, st) in [("shape", &model.shape_standardizer), ("color", &model.color_standardizer)] {
        push_block(&mut s, &format!("{name}.mean"), &st.mean, st.d());
        push_block(&mut s, &format!("{name}.whitening"), &st.whitening, st.d());
    }
    write_file(path, &s)
}

pub fn read_calibration(path: &Path) -> Result<(MonitoringModel, CalibrationMeta)> {
    let text = read_file(path)?;
    let mut keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut blocks: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut lines = text.lines().enumerate();
    while let Some((i, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix("begin ") {
            let mut values = Vec::new();
            loop {
                let (j, row) = lines.next().ok_or_else(|| parse_err(path, i + 1, format!("block '{name}' is not closed")))?;
                let row = row.trim();
                if row == "end" {
                    break;
                }
                for v in row.split(',') {
                    values.push(v.trim().parse().map_err(|_| parse_err(path, j + 1, format!("'{v}' is not a number")))?);
                }
            }
            blocks.insert(name.trim().to_string(), values);
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| parse_err(path, i + 1, "expected key = value"))?;
        keys.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    let get = |k: &str| -> Result<f64> {
        let (line, v) = keys.get(k).ok_or_else(|| SmacError::Format { path: path.into(), message: format!("missing key '{k}'") })?;
        v.parse().map_err(|_| parse_err(path, *line, format!("'{v}' is not a number")))
    };
    let get_usize = |k: &str| -> Result<usize> {
        let (line, v) = keys.get(k).ok_or_else(|| SmacError::Format { path: path.into(), message: format!("missing key '{k}'") })?;
        v.parse().map_err(|_| parse_err(path, *line, format!("'{v}' is not a count")))
    };
    let seed = {
        let (line, v) = keys.get("seed").ok_or_else(|| SmacError::Format { path: path.into(), message: "missing key 'seed'".into() })?;
        v.parse::<u64>().map_err(|_| parse_err(path, *line, "bad seed"))?
    };
    let k_eig = get_usize("k_eig")?;
    let standardizer = |name: &str, d: usize| -> Result<Standardizer> {
        let block = |b: &str, len: usize| -> Result<Vec<f64>> {
            let v = blocks
                .get(b)
                .ok_or_else(|| SmacError::Format { path: path.into(), message: format!("missing block '{b}'") })?;
            if v.len() != len {
                return Err(SmacError::Format { path: path.into(), message: format!("block '{b}' has {} values, expected {len}", v.len()) });
            }
            Ok(v.clone())
        };
        Ok(Standardizer {
            mean: block(&format!("{name}.mean"), d)?,
            whitening: block(&format!("{name}.whitening"), d * d)?,
            training_discrepancy: get(&format!("{name}.discrepancy")).unwrap_or(f64::NAN),
        })
    };
    let chart = |name: &str| -> Result<CusumChart> {
        Ok(CusumChart::new(get(&format!("{name}.mu"))?, get(&format!("{name}.sigma"))?, get(&format!("{name}.k"))?, get(&format!("{name}.h"))?))
    };
    let shape_chart = chart("shape")?;
    let color_chart = chart("color")?;
    let model = MonitoringModel {
        k_eig,
        shape_standardizer: standardizer("shape", k_eig - 1)?,
        color_standardizer: standardizer("color", k_eig)?,
        calibration: Calibration {
            h_s: shape_chart.h,
            h_c: color_chart.h,
            stage1_h_s: get("stage1.h_s")?,
            stage1_h_c: get("stage1.h_c")?,
            rho: get("rho")?,
            arl_shape: get("arl.shape")?,
            arl_color: get("arl.color")?,
            arl_combined: get("arl.combined")?,
        },
        shape_chart,
        color_chart,
        rng_seed: seed,
    };
    Ok((model, CalibrationMeta { neighbors: get_usize("neighbors")? }))
}

pub fn write_steps(path: &Path, report: &MonitoringReport) -> Result<()> {
    let mut s = String::from("t,s,c,Cs,Cc,signal\n");
    for r in &report.steps {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.t, r.s, r.c, r.cs, r.cc, r.signal.map_or("", |g| g.name()));
    }
    write_file(path, &s)
}

pub fn write_pointwise(path: &Path, report: &DiagnosticReport) -> Result<()> {
    let mut s = String::from("point_index,f_stat,tfce,p_value,significant\n");
    for i in 0..report.f_stat.len() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{}",
            report.f_stat[i],
            report.tfce[i],
            report.p_values[i],
            u8::from(report.significant_mask[i])
        );
    }
    write_file(path, &s)
}

pub fn write_arl_summary(path: &Path, summaries: &[ArlSummary]) -> Result<()> {
    let mut s = String::from("method,defect_kind,snr,color_shift,aarl,sd,n_reps\n");
    for a in summaries {
        let _ = writeln!(s, "{},{},{},{},{},{},{}", a.method.name(), a.defect_name(), a.snr, a.color_shift, a.aarl, a.sd, a.n_reps);
    }
    write_file(path, &s)
}

pub fn write_replications(path: &Path, summaries: &[ArlSummary]) -> Result<()> {
    let mut s = String::from("method,defect_kind,replication,arl\n");
    for a in summaries {
        for (r, v) in a.replication_arls.iter().enumerate() {
            let _ = writeln!(s, "{},{},{r},{v}", a.method.name(), a.defect_name());
        }
    }
    write_file(path, &s)
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    read_file(path)
}
