//! Synthetic experiment protocol: nominal designs, IC/OC generators, the
//! graph-Laplacian baseline and Monte Carlo ARL studies.

pub mod arl;
pub mod gl;
pub mod nominal;
pub mod sampling;

pub use nominal::{make_nominal, NominalDesign, NominalShape};
pub use sampling::{defect_region, sample_ic, sample_oc, sample_oc_in, DefectKind, DefectRegion, DefectSpec, NoiseSpec};
pub use arl::{run_arl_study, ArlStudy, ArlSummary, Method};
pub use gl::gl_baseline_features;
