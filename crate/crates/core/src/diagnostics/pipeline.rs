//! Reference-side state reused when transporting many samples.

use alloc::vec::Vec;

use super::fmap::{descriptor_coefficients, solve_map, FunctionalMap, TransportedTexture, transport_texture};
use super::test::reference_adjacency;
use crate::cloud::PointCloud4D;
use crate::error::{Error, Result};
use crate::features::{extract_full, Extraction, FeatureOptions};
use crate::spectral::default_descriptors;

pub const DEFAULT_DESCRIPTORS_EACH: usize = 100;

#[derive(Debug, Clone)]
pub struct DiagnosticReference {
    pub cloud: PointCloud4D,
    pub extraction: Extraction,
    /// `A0 = U0ᵀ M0 D0`, row-major `k × p`.
    pub coefficients: Vec<f64>,
    pub adjacency: Vec<Vec<usize>>,
    pub options: FeatureOptions,
    pub descriptors_each: usize,
}

impl DiagnosticReference {
    pub fn new(cloud: &PointCloud4D, options: &FeatureOptions, descriptors_each: usize) -> Result<Self> {
        let extraction = extract_full(cloud, options)?;
        let desc = default_descriptors(&extraction.spectrum, descriptors_each)?;
        let coefficients = descriptor_coefficients(&extraction.spectrum, &extraction.pair, &desc)?;
        Ok(Self {
            cloud: cloud.clone(),
            adjacency: reference_adjacency(cloud)?,
            extraction,
            coefficients,
            options: *options,
            descriptors_each,
        })
    }

    pub fn n(&self) -> usize {
        self.cloud.len()
    }

    /// Functional map from the reference to an extracted sample.
    pub fn map_to(&self, sample: &Extraction, eta: f64) -> Result<FunctionalMap> {
        if sample.spectrum.k() != self.extraction.spectrum.k() {
            return Err(Error::DimensionMismatch {
                expected: self.extraction.spectrum.k(),
                found: sample.spectrum.k(),
            });
        }
        let desc = default_descriptors(&sample.spectrum, self.descriptors_each)?;
        let a1 = descriptor_coefficients(&sample.spectrum, &sample.pair, &desc)?;
        let matrix = solve_map(
            &self.coefficients,
            &a1,
            self.extraction.spectrum.eigenvalues(),
            sample.spectrum.eigenvalues(),
            eta,
        )?;
        Ok(FunctionalMap {
            k: sample.spectrum.k(),
            matrix,
            source_id: self.cloud.id().into(),
            target_id: sample.id.clone(),
        })
    }

    pub fn transport_extraction(&self, sample: &Extraction, eta: f64) -> Result<TransportedTexture> {
        let map = self.map_to(sample, eta)?;
        transport_texture(&map, &sample.regression, &self.extraction.spectrum)
    }

    /// Extract a sample cloud and reconstruct its color on the reference.
    pub fn transport(&self, sample: &PointCloud4D, eta: f64) -> Result<TransportedTexture> {
        let e = extract_full(sample, &self.options)?;
        self.transport_extraction(&e, eta)
    }
}
