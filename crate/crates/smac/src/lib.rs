//! File formats, configuration and command-line front end for the
//! `smac-core` monitoring pipeline.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod io;
pub mod svg;

pub use smac_core;
