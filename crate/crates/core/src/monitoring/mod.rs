//! Standardization, the combined two-CUSUM scheme and its calibration.

pub mod calibrate;
pub mod cusum;
pub mod scheme;
pub mod standardize;

pub use calibrate::{calibrate_limits, calibrate_single_limit, BootstrapArl, Calibration, CalibrationConfig};
pub use cusum::{combined_step, cusum_update, CombinedChartState, CusumChart, Signal};
pub use scheme::{design_scheme, monitor_features, run_monitoring, MonitoringModel, MonitoringReport, StepRecord};
pub use standardize::{fit_standardizer, Standardizer};
