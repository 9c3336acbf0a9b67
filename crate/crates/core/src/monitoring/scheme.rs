//! End-to-end design and operation of the combined scheme.

use alloc::vec::Vec;

use super::calibrate::{calibrate_limits, Calibration, CalibrationConfig};
use super::cusum::{CombinedChartState, CusumChart, Signal};
use super::standardize::{fit_standardizer, Standardizer};
use crate::cloud::PointCloud4D;
use crate::error::{param, Error, Result};
use crate::features::{extract_features, FeatureOptions, SpectralFeatures};
use crate::math;
use crate::par;

/// A fully designed monitoring scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringModel {
    pub k_eig: usize,
    pub shape_standardizer: Standardizer,
    pub color_standardizer: Standardizer,
    pub shape_chart: CusumChart,
    pub color_chart: CusumChart,
    pub calibration: Calibration,
    pub rng_seed: u64,
}

impl MonitoringModel {
    /// `(s, c)` for one feature vector pair.
    pub fn statistics(&self, f: &SpectralFeatures) -> Result<(f64, f64)> {
        Ok((
            self.shape_standardizer.statistic(&f.lambda)?,
            self.color_standardizer.statistic(&f.beta_abs)?,
        ))
    }

    pub fn initial_state(&self) -> CombinedChartState {
        CombinedChartState::new(self.shape_chart, self.color_chart)
    }
}

/// Sample mean and unbiased standard deviation.
pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, math::sqrt(v))
}

/// Design the scheme from reference features split into sequential blocks
/// of sizes m1 (standardizers), m2 (statistic moments) and m3 (limits).
pub fn design_scheme(reference: &[SpectralFeatures], cfg: &CalibrationConfig) -> Result<MonitoringModel> {
    cfg.validate()?;
    let need = cfg.reference_size();
    if reference.len() < need {
        return Err(param(alloc::format!(
            "reference sample has {} clouds; m1 + m2 + m3 = {need}",
            reference.len()
        )));
    }
    let k_eig = reference[0].beta_abs.len();
    let (b1, rest) = reference.split_at(cfg.m1);
    let (b2, rest) = rest.split_at(cfg.m2);
    let b3 = &rest[..cfg.m3];

    let shape_standardizer = fit_standardizer(&b1.iter().map(|f| f.lambda.clone()).collect::<Vec<_>>())?;
    let color_standardizer = fit_standardizer(&b1.iter().map(|f| f.beta_abs.clone()).collect::<Vec<_>>())?;
    log::info!(
        "whitening discrepancy on subset 1: shape {:.3e}, color {:.3e}",
        shape_standardizer.training_discrepancy,
        color_standardizer.training_discrepancy
    );
    let stats = |block: &[SpectralFeatures]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut s = Vec::with_capacity(block.len());
        let mut c = Vec::with_capacity(block.len());
        for f in block {
            s.push(shape_standardizer.statistic(&f.lambda)?);
            c.push(color_standardizer.statistic(&f.beta_abs)?);
        }
        Ok((s, c))
    };
    let (s2, c2) = stats(b2)?;
    let shape_moments = mean_sd(&s2);
    let color_moments = mean_sd(&c2);
    let (s3, c3) = stats(b3)?;
    let calibration = calibrate_limits(&s3, &c3, shape_moments, color_moments, cfg)?;
    Ok(MonitoringModel {
        k_eig,
        shape_chart: CusumChart::new(shape_moments.0, shape_moments.1, cfg.k_s, calibration.h_s),
        color_chart: CusumChart::new(color_moments.0, color_moments.1, cfg.k_c, calibration.h_c),
        shape_standardizer,
        color_standardizer,
        calibration,
        rng_seed: cfg.rng_seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub s: f64,
    pub c: f64,
    pub cs: f64,
    pub cc: f64,
    pub signal: Option<Signal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringReport {
    pub steps: Vec<StepRecord>,
    /// Index (1-based) of the first alarm.
    pub run_length: Option<usize>,
    pub first_signal: Option<Signal>,
}

/// Feed a stream of feature vectors through the scheme. Charts keep
/// running after the first alarm.
pub fn monitor_features(model: &MonitoringModel, stream: &[SpectralFeatures]) -> Result<MonitoringReport> {
    let mut state = model.initial_state();
    let mut steps = Vec::with_capacity(stream.len());
    let mut first = None;
    for f in stream {
        let (s, c) = model.statistics(f)?;
        let signal = state.step(s, c);
        if let (None, Some(sig)) = (first, signal) {
            first = Some((state.time_index, sig));
        }
        steps.push(StepRecord {
            t: state.time_index,
            s,
            c,
            cs: state.shape_chart.state,
            cc: state.color_chart.state,
            signal,
        });
    }
    Ok(MonitoringReport {
        steps,
        run_length: first.map(|f| f.0),
        first_signal: first.map(|f| f.1),
    })
}

pub fn extract_all(clouds: &[PointCloud4D], opts: &FeatureOptions) -> Result<Vec<SpectralFeatures>> {
    par::map_range(clouds.len(), |i| extract_features(&clouds[i], opts))
        .into_iter()
        .collect()
}

/// Extract, design on `reference`, then monitor `stream`.
pub fn run_monitoring(
    reference: &[PointCloud4D],
    stream: &[PointCloud4D],
    cfg: &CalibrationConfig,
    k_eig: usize,
) -> Result<(MonitoringModel, MonitoringReport)> {
    if reference.len() < cfg.reference_size() {
        return Err(param(alloc::format!(
            "reference sample has {} clouds; m1 + m2 + m3 = {}",
            reference.len(),
            cfg.reference_size()
        )));
    }
    let opts = FeatureOptions::with_k(k_eig);
    let ref_features = extract_all(&reference[..cfg.reference_size()], &opts)?;
    let model = design_scheme(&ref_features, cfg)?;
    let stream_features = extract_all(stream, &opts)?;
    let report = monitor_features(&model, &stream_features)?;
    Ok((model, report))
}

/// Check a stream's feature dimensions against the model.
pub fn check_dimensions(model: &MonitoringModel, f: &SpectralFeatures) -> Result<()> {
    if f.beta_abs.len() != model.k_eig || f.lambda.len() + 1 != model.k_eig {
        return Err(Error::DimensionMismatch { expected: model.k_eig, found: f.beta_abs.len() });
    }
    Ok(())
}
