//! The 4D point cloud: 3D positions with one scalar color attribute.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A 4D point cloud (x, y, z, color).
///
/// Immutable after construction. Every value is finite and no two points
/// share exactly the same position.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud4D {
    id: String,
    positions: Vec<[f64; 3]>,
    color: Vec<f64>,
}

impl PointCloud4D {
    /// Build a cloud, rejecting non-finite values and coincident points.
    pub fn new(id: impl Into<String>, positions: Vec<[f64; 3]>, color: Vec<f64>) -> Result<Self> {
        let cloud = Self::unchecked_dupes(id, positions, color)?;
        if let Some((a, b)) = cloud.first_duplicate() {
            return Err(Error::Validation {
                index: b,
                reason: alloc::format!("point coincides with point {a}"),
            });
        }
        Ok(cloud)
    }

    /// Build a cloud, merging points with identical coordinates by
    /// averaging their colors. Returns the cloud and the number of points
    /// removed by merging. The first occurrence of each position keeps its
    /// relative order.
    pub fn with_merged_duplicates(
        id: impl Into<String>,
        positions: Vec<[f64; 3]>,
        color: Vec<f64>,
    ) -> Result<(Self, usize)> {
        let cloud = Self::unchecked_dupes(id, positions, color)?;
        let n = cloud.len();
        let order = cloud.sorted_order();
        // representative (first original index) for every point
        let mut rep: Vec<usize> = (0..n).collect();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && bits(&cloud.positions[order[end]]) == bits(&cloud.positions[order[start]]) {
                end += 1;
            }
            let first = order[start..end].iter().copied().min().unwrap_or(order[start]);
            for &i in &order[start..end] {
                rep[i] = first;
            }
            start = end;
        }
        let mut sum = alloc::vec![0.0; n];
        let mut count = alloc::vec![0usize; n];
        for i in 0..n {
            sum[rep[i]] += cloud.color[i];
            count[rep[i]] += 1;
        }
        let mut positions = Vec::with_capacity(n);
        let mut colors = Vec::with_capacity(n);
        for i in 0..n {
            if rep[i] == i {
                positions.push(cloud.positions[i]);
                colors.push(sum[i] / count[i] as f64);
            }
        }
        let merged = n - positions.len();
        if merged > 0 {
            log::warn!("cloud '{}': merged {} duplicate point(s)", cloud.id, merged);
        }
        Ok((
            Self {
                id: cloud.id,
                positions,
                color: colors,
            },
            merged,
        ))
    }

    fn unchecked_dupes(id: impl Into<String>, positions: Vec<[f64; 3]>, color: Vec<f64>) -> Result<Self> {
        if positions.len() != color.len() {
            return Err(Error::DimensionMismatch {
                expected: positions.len(),
                found: color.len(),
            });
        }
        if positions.is_empty() {
            return Err(Error::Parameter("point cloud is empty".into()));
        }
        for (i, (p, c)) in positions.iter().zip(&color).enumerate() {
            if !(p.iter().all(|v| v.is_finite()) && c.is_finite()) {
                return Err(Error::Validation {
                    index: i,
                    reason: "non-finite coordinate or color".into(),
                });
            }
        }
        Ok(Self {
            id: id.into(),
            positions,
            color,
        })
    }

    fn sorted_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| bits(&self.positions[a]).cmp(&bits(&self.positions[b])).then(a.cmp(&b)));
        order
    }

    fn first_duplicate(&self) -> Option<(usize, usize)> {
        let order = self.sorted_order();
        order
            .windows(2)
            .find(|w| bits(&self.positions[w[0]]) == bits(&self.positions[w[1]]))
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn color(&self) -> &[f64] {
        &self.color
    }

    /// Same cloud under a new identifier.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Replace the color channel, keeping positions.
    pub fn with_color(&self, color: Vec<f64>) -> Result<Self> {
        Self::unchecked_dupes(self.id.clone(), self.positions.clone(), color)
    }

    /// Apply `x -> R x + t` to every position.
    pub fn transformed(&self, rotation: &[[f64; 3]; 3], translation: [f64; 3]) -> Result<Self> {
        let positions = self
            .positions
            .iter()
            .map(|p| {
                let mut q = translation;
                for (r, row) in rotation.iter().enumerate() {
                    q[r] += row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
                }
                q
            })
            .collect();
        Self::new(self.id.clone(), positions, self.color.clone())
    }

    /// Uniformly scale positions about the origin.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Parameter("scale factor must be positive".into()));
        }
        let positions = self.positions.iter().map(|p| [p[0] * factor, p[1] * factor, p[2] * factor]).collect();
        Self::new(self.id.clone(), positions, self.color.clone())
    }

    /// Axis-aligned bounding box diagonal length.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.positions {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        crate::math::sqrt((0..3).map(|a| (hi[a] - lo[a]) * (hi[a] - lo[a])).sum())
    }
}

fn bits(p: &[f64; 3]) -> [u64; 3] {
    // +0.0 and -0.0 are the same position
    let canon = |v: f64| if v == 0.0 { 0u64 } else { v.to_bits() };
    [canon(p[0]), canon(p[1]), canon(p[2])]
}
