//! In-control and out-of-control cloud generators.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::nominal::NominalDesign;
use crate::cloud::PointCloud4D;
use crate::error::{param, Result};
use crate::knn::build_knn;
use crate::math;
use crate::rng;

/// Measurement noise and subsample size range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub tau_s: f64,
    pub tau_c: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl NoiseSpec {
    pub fn validate(&self, base_len: usize) -> Result<()> {
        if !(self.tau_s >= 0.0 && self.tau_c >= 0.0 && self.tau_s.is_finite() && self.tau_c.is_finite()) {
            return Err(param("noise standard deviations must be finite and nonnegative"));
        }
        if self.n_min == 0 || self.n_min > self.n_max || self.n_max > base_len {
            return Err(param(alloc::format!(
                "size range [{}, {}] must satisfy 0 < n_min <= n_max <= {base_len}",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectKind {
    Roughness,
    ColorSpots,
    Combined,
}

impl DefectKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "roughness" => Ok(Self::Roughness),
            "color_spots" => Ok(Self::ColorSpots),
            "combined" => Ok(Self::Combined),
            other => Err(param(alloc::format!("unknown defect kind '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Roughness => "roughness",
            Self::ColorSpots => "color_spots",
            Self::Combined => "combined",
        }
    }

    fn rough(self) -> bool {
        matches!(self, Self::Roughness | Self::Combined)
    }

    fn colored(self) -> bool {
        matches!(self, Self::ColorSpots | Self::Combined)
    }
}

/// A localized defect. The region is a geodesic patch grown from an anchor
/// point chosen deterministically from `anchor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectSpec {
    pub kind: DefectKind,
    pub region_fraction: f64,
    pub spot_fraction: f64,
    pub snr: f64,
    pub color_shift: f64,
    pub spot_count: usize,
    pub anchor: u64,
}

impl DefectSpec {
    pub fn validate(&self) -> Result<()> {
        let frac = |f: f64| f > 0.0 && f <= 1.0;
        if !frac(self.region_fraction) || !frac(self.spot_fraction) {
            return Err(param("defect fractions must lie in (0, 1]"));
        }
        if self.spot_fraction > self.region_fraction {
            return Err(param("spot_fraction cannot exceed region_fraction"));
        }
        if !(self.snr >= 1.0) || !self.snr.is_finite() {
            return Err(param("snr must be >= 1"));
        }
        if !self.color_shift.is_finite() {
            return Err(param("color_shift must be finite"));
        }
        if self.spot_count == 0 {
            return Err(param("spot_count must be positive"));
        }
        Ok(())
    }
}

/// Defect footprint on the nominal design's point indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectRegion {
    pub region: Vec<bool>,
    pub spots: Vec<bool>,
}

impl DefectRegion {
    /// The ground-truth mask for a defect kind: spots when color is
    /// involved, otherwise the roughened region.
    pub fn truth(&self, kind: DefectKind) -> &[bool] {
        if kind.colored() {
            &self.spots
        } else {
            &self.region
        }
    }
}

const REGION_NEIGHBORS: usize = 10;

/// Locate the defect region and spots on the nominal design.
pub fn defect_region(design: &NominalDesign, defect: &DefectSpec) -> Result<DefectRegion> {
    defect.validate()?;
    let cloud = &design.base_cloud;
    let n = cloud.len();
    let graph = build_knn(cloud, REGION_NEIGHBORS.min(n - 1))?;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (&j, &d) in graph.neighbors(i).iter().zip(graph.distances(i)) {
            adj[i].push((j, d));
            adj[j].push((i, d));
        }
    }
    let region_size = ceil_count(defect.region_fraction, n);
    let spot_size = ceil_count(defect.spot_fraction, n);
    let anchor = (rng::derive(defect.anchor, rng::domain::DEFECT) % n as u64) as usize;
    let all = vec![true; n];
    let region_idx = geodesic_ball(&adj, &[anchor], region_size, &all);
    let mut region = vec![false; n];
    for &i in &region_idx {
        region[i] = true;
    }

    // spot centers: farthest-point picks inside the region, starting at the anchor
    let centers = spread_centers(&adj, &region_idx, &region, defect.spot_count.min(spot_size));
    let per = spot_size / centers.len();
    let extra = spot_size % centers.len();
    let mut spots = vec![false; n];
    let mut free = region.clone();
    for (c, &center) in centers.iter().enumerate() {
        let want = per + usize::from(c < extra);
        for i in geodesic_ball(&adj, &[center], want, &free) {
            spots[i] = true;
            free[i] = false;
        }
    }
    Ok(DefectRegion { region, spots })
}

fn ceil_count(fraction: f64, n: usize) -> usize {
    (math::ceil(fraction * n as f64 - 1e-9) as usize).clamp(1, n)
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    // min-heap on (distance, index)
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// The `count` points nearest (graph-geodesically) to `sources`, restricted
/// to `allowed`, in order of settlement.
fn geodesic_ball(adj: &[Vec<(usize, f64)>], sources: &[usize], count: usize, allowed: &[bool]) -> Vec<usize> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Item(0.0, s));
    }
    let mut out = Vec::with_capacity(count);
    while let Some(Item(d, i)) = heap.pop() {
        if done[i] || d > dist[i] {
            continue;
        }
        done[i] = true;
        out.push(i);
        if out.len() == count {
            break;
        }
        for &(j, w) in &adj[i] {
            if allowed[j] && !done[j] && d + w < dist[j] {
                dist[j] = d + w;
                heap.push(Item(d + w, j));
            }
        }
    }
    out
}

fn spread_centers(adj: &[Vec<(usize, f64)>], region_idx: &[usize], region: &[bool], count: usize) -> Vec<usize> {
    let mut centers = vec![region_idx[0]];
    while centers.len() < count.max(1) {
        let order = geodesic_ball(adj, &centers, region_idx.len(), region);
        match order.last() {
            Some(&far) if !centers.contains(&far) => centers.push(far),
            _ => break,
        }
    }
    centers
}

/// One in-control observation.
pub fn sample_ic(design: &NominalDesign, noise: &NoiseSpec, seed: u64) -> Result<PointCloud4D> {
    draw(design, noise, None, seed)
}

/// One out-of-control observation and its ground-truth mask (on nominal
/// indices).
pub fn sample_oc(
    design: &NominalDesign,
    noise: &NoiseSpec,
    defect: &DefectSpec,
    seed: u64,
) -> Result<(PointCloud4D, Vec<bool>)> {
    let region = defect_region(design, defect)?;
    let cloud = draw(design, noise, Some((defect, &region)), seed)?;
    Ok((cloud, region.truth(defect.kind).to_vec()))
}

/// As [`sample_oc`] with a precomputed region (avoids rebuilding the graph
/// for every draw).
pub fn sample_oc_in(
    design: &NominalDesign,
    noise: &NoiseSpec,
    defect: &DefectSpec,
    region: &DefectRegion,
    seed: u64,
) -> Result<PointCloud4D> {
    defect.validate()?;
    draw(design, noise, Some((defect, region)), seed)
}

fn draw(
    design: &NominalDesign,
    noise: &NoiseSpec,
    defect: Option<(&DefectSpec, &DefectRegion)>,
    seed: u64,
) -> Result<PointCloud4D> {
    let base = &design.base_cloud;
    noise.validate(base.len())?;
    let mut rng = rng::stream(seed, rng::domain::STREAM, 0);
    let n = rng.random_range(noise.n_min..=noise.n_max);
    let mut idx = rand::seq::index::sample(&mut rng, base.len(), n).into_vec();
    idx.sort_unstable();
    let mut positions = Vec::with_capacity(n);
    let mut color = Vec::with_capacity(n);
    for &i in &idx {
        let mut p = base.positions()[i];
        let mut scale = noise.tau_s;
        let mut shift = 0.0;
        if let Some((d, r)) = defect {
            if d.kind.rough() && r.region[i] {
                scale *= d.snr;
            }
            if d.kind.colored() && r.spots[i] {
                shift = d.color_shift;
            }
        }
        for v in p.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *v += scale * g;
        }
        let g: f64 = StandardNormal.sample(&mut rng);
        positions.push(p);
        color.push(base.color()[i] + shift + noise.tau_c * g);
    }
    PointCloud4D::new(alloc::format!("sample-{seed}"), positions, color)
}
