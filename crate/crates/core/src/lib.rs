//! Registration-free monitoring of shape and surface color for 4D point
//! clouds.
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! `std` feature. IO, file formats and the command-line front end live in
//! the companion `smac` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the math
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod cloud;
pub mod diagnostics;
pub mod error;
pub mod features;
pub mod knn;
pub mod laplacian;
pub mod linalg;
pub mod math;
pub mod monitoring;
pub mod par;
pub mod rng;
pub mod simulation;
pub mod sparse;
pub mod spectral;

pub use cloud::PointCloud4D;
pub use error::{Error, Result};
pub use knn::{build_knn, KnnGraph};
pub use laplacian::{build_laplacian, LaplacianPair};
pub use spectral::{regress_color, solve_eigs, ColorRegression, DescriptorMatrix, Spectrum};
