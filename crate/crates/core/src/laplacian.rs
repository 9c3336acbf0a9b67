//! Point-cloud Laplace–Beltrami discretization.
//!
//! Each point's K-neighborhood is projected onto a tangent plane fitted by
//! principal-axis analysis; the Delaunay triangles of the projected
//! neighborhood that touch the center point form its local umbrella. The
//! union of all umbrellas is a triangle soup in which a triangle found by
//! `m` of its three vertices carries weight `m / 3`. Cotangent stiffness and
//! one-third barycentric mass are then assembled from intrinsic (3D) edge
//! lengths.
//!
//! This is the local-Delaunay pipeline of the tufted point-cloud Laplacian
//! without the tufted double cover.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix3;

use crate::cloud::PointCloud4D;
use crate::error::{param, Error, Result};
use crate::knn::KnnGraph;
use crate::math;
use crate::sparse::CsrMatrix;

pub const DEFAULT_MOLLIFY_FRACTION: f64 = 1e-4;
pub const MIN_NEIGHBORS: usize = 6;

/// Stiffness (sparse, symmetric PSD) and lumped diagonal mass of one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPair {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
}

impl LaplacianPair {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Check the structural invariants: symmetry, zero row sums, positive
    /// finite mass.
    pub fn validate(&self) -> Result<()> {
        if self.stiffness.n() != self.mass.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mass.len(),
                found: self.stiffness.n(),
            });
        }
        for (i, &m) in self.mass.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Validation {
                    index: i,
                    reason: alloc::format!("mass entry {m} is not positive and finite"),
                });
            }
        }
        if self.stiffness.asymmetry() > 1e-10 {
            return Err(Error::Numerical("stiffness matrix is not symmetric".into()));
        }
        for i in 0..self.n() {
            let (_, vals) = self.stiffness.row(i);
            let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sum: f64 = vals.iter().sum();
            if !vals.iter().all(|v| v.is_finite()) || sum.abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Validation {
                    index: i,
                    reason: "stiffness row does not sum to zero".into(),
                });
            }
        }
        Ok(())
    }
}

/// Tuning for [`build_laplacian_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianOptions {
    /// Mollification strength as a fraction of the mean edge length.
    pub mollify_fraction: f64,
    /// A neighborhood is collinear when its second principal variance is
    /// below this fraction of the first.
    pub collinear_tolerance: f64,
}

impl Default for LaplacianOptions {
    fn default() -> Self {
        Self {
            mollify_fraction: DEFAULT_MOLLIFY_FRACTION,
            collinear_tolerance: 1e-12,
        }
    }
}

/// Weighted triangles with intrinsic edge lengths, prior to assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleSoup {
    pub n: usize,
    /// Vertex triples, sorted ascending within each triangle.
    pub triangles: Vec<[usize; 3]>,
    /// Weight of each triangle: (number of umbrellas containing it) / 3.
    pub weights: Vec<f64>,
    /// `lengths[t][a]` is the length of the edge opposite corner `a`.
    pub lengths: Vec<[f64; 3]>,
}

impl TriangleSoup {
    /// Build a soup from explicit triangles with unit weight.
    pub fn from_triangles(positions: &[[f64; 3]], triangles: Vec<[usize; 3]>) -> Self {
        let lengths = triangles.iter().map(|t| corner_lengths(positions, t)).collect();
        let weights = vec![1.0; triangles.len()];
        Self {
            n: positions.len(),
            triangles,
            weights,
            lengths,
        }
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.lengths.is_empty() {
            return 0.0;
        }
        self.lengths.iter().flat_map(|l| l.iter()).sum::<f64>() / (3 * self.lengths.len()) as f64
    }

    /// Intrinsic mollification: with `δ = epsilon_fraction · mean edge
    /// length`, every edge length is increased by the smallest common
    /// amount `ε ≥ 0` such that each triangle satisfies
    /// `l_a + l_b ≥ l_c + δ` for all corners. Returns `ε`.
    pub fn mollify(&mut self, epsilon_fraction: f64) -> Result<f64> {
        if !(epsilon_fraction > 0.0 && epsilon_fraction <= 0.1) {
            return Err(param(alloc::format!(
                "mollification fraction {epsilon_fraction} outside (0, 0.1]"
            )));
        }
        let delta = epsilon_fraction * self.mean_edge_length();
        let mut eps = 0.0f64;
        for l in &self.lengths {
            for c in 0..3 {
                let (a, b) = (l[(c + 1) % 3], l[(c + 2) % 3]);
                eps = eps.max(delta - a - b + l[c]);
            }
        }
        if eps > 0.0 {
            for l in &mut self.lengths {
                for v in l.iter_mut() {
                    *v += eps;
                }
            }
        }
        Ok(eps)
    }

    /// Cotangent stiffness and lumped one-third-area mass.
    pub fn assemble(&self) -> Result<LaplacianPair> {
        let mut triplets = Vec::with_capacity(self.triangles.len() * 9);
        let mut mass = vec![0.0; self.n];
        for ((t, l), &w) in self.triangles.iter().zip(&self.lengths).zip(&self.weights) {
            let area = heron(l);
            if !(area > 0.0 && area.is_finite()) {
                return Err(Error::Numerical(alloc::format!(
                    "degenerate triangle {:?} (area {area}); increase mollification",
                    t
                )));
            }
            let sq = [l[0] * l[0], l[1] * l[1], l[2] * l[2]];
            for c in 0..3 {
                let (p, q) = (t[(c + 1) % 3], t[(c + 2) % 3]);
                let cot = (sq[(c + 1) % 3] + sq[(c + 2) % 3] - sq[c]) / (4.0 * area);
                let wgt = 0.5 * w * cot;
                triplets.push((p, q, -wgt));
                triplets.push((q, p, -wgt));
                triplets.push((p, p, wgt));
                triplets.push((q, q, wgt));
                mass[t[c]] += w * area / 3.0;
            }
        }
        for (i, &m) in mass.iter().enumerate() {
            if m <= 0.0 {
                return Err(Error::Validation {
                    index: i,
                    reason: "point has no incident triangles".into(),
                });
            }
        }
        let stiffness = CsrMatrix::from_triplets(self.n, triplets);
        Ok(LaplacianPair {
            stiffness: fix_diagonal(stiffness),
            mass,
        })
    }
}

/// Recompute each diagonal entry as minus the off-diagonal row sum so
/// constants lie in the kernel to rounding.
fn fix_diagonal(m: CsrMatrix) -> CsrMatrix {
    let n = m.n();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(m.nnz());
    for i in 0..n {
        let (cols, vals) = m.row(i);
        let mut off = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            if c != i {
                off += v;
                triplets.push((i, c, v));
            }
        }
        triplets.push((i, i, -off));
    }
    CsrMatrix::from_triplets(n, triplets)
}

/// Numerically stable Heron formula.
fn heron(l: &[f64; 3]) -> f64 {
    let mut s = *l;
    s.sort_by(|a, b| b.total_cmp(a));
    let (a, b, c) = (s[0], s[1], s[2]);
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if p <= 0.0 {
        0.0
    } else {
        0.25 * math::sqrt(p)
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    math::sqrt(math::sq(a[0] - b[0]) + math::sq(a[1] - b[1]) + math::sq(a[2] - b[2]))
}

fn corner_lengths(positions: &[[f64; 3]], t: &[usize; 3]) -> [f64; 3] {
    let p = |k: usize| &positions[t[k]];
    [dist(p(1), p(2)), dist(p(2), p(0)), dist(p(0), p(1))]
}

/// Discrete Laplace–Beltrami pair with default options.
pub fn build_laplacian(cloud: &PointCloud4D, graph: &KnnGraph) -> Result<LaplacianPair> {
    build_laplacian_with(cloud, graph, &LaplacianOptions::default())
}

pub fn build_laplacian_with(cloud: &PointCloud4D, graph: &KnnGraph, opts: &LaplacianOptions) -> Result<LaplacianPair> {
    let mut soup = local_triangulation(cloud, graph, opts.collinear_tolerance)?;
    soup.mollify(opts.mollify_fraction)?;
    soup.assemble()
}

/// Union of local Delaunay umbrellas, before mollification.
pub fn local_triangulation(cloud: &PointCloud4D, graph: &KnnGraph, collinear_tolerance: f64) -> Result<TriangleSoup> {
    let n = cloud.len();
    if graph.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: graph.len(),
        });
    }
    if graph.k() < MIN_NEIGHBORS {
        return Err(param(alloc::format!(
            "Laplacian needs K >= {MIN_NEIGHBORS} neighbors, got {}",
            graph.k()
        )));
    }
    let pos = cloud.positions();
    let umbrellas = crate::par::map_range(n, |i| umbrella(pos, graph, i, collinear_tolerance));
    let mut all: Vec<[usize; 3]> = Vec::with_capacity(n * 7);
    for u in umbrellas {
        all.extend(u?);
    }
    all.sort_unstable();
    let mut triangles = Vec::with_capacity(all.len() / 3 + 1);
    let mut weights = Vec::with_capacity(all.len() / 3 + 1);
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j] == all[i] {
            j += 1;
        }
        triangles.push(all[i]);
        weights.push((j - i) as f64 / 3.0);
        i = j;
    }
    let lengths = triangles.iter().map(|t| corner_lengths(pos, t)).collect();
    Ok(TriangleSoup {
        n,
        triangles,
        weights,
        lengths,
    })
}

const BOX: usize = usize::MAX;

/// Delaunay triangles incident to point `i` in its projected neighborhood,
/// found as the edges of `i`'s Voronoi cell among the neighbors.
fn umbrella(pos: &[[f64; 3]], graph: &KnnGraph, i: usize, collinear_tolerance: f64) -> Result<Vec<[usize; 3]>> {
    let nbrs = graph.neighbors(i);
    let center = pos[i];
    let (e1, e2) = tangent_frame(pos, i, nbrs, collinear_tolerance)?;

    let local: Vec<[f64; 2]> = nbrs
        .iter()
        .map(|&j| {
            let v = [pos[j][0] - center[0], pos[j][1] - center[1], pos[j][2] - center[2]];
            [dot3(&v, &e1), dot3(&v, &e2)]
        })
        .collect();
    let reach = local.iter().map(|p| math::sqrt(p[0] * p[0] + p[1] * p[1])).fold(0.0, f64::max);
    if !(reach > 0.0) {
        return Err(Error::DegenerateNeighborhood {
            index: i,
            reason: "all neighbors project onto the point".into(),
        });
    }
    let r = 4.0 * reach;
    let mut verts: Vec<[f64; 2]> = vec![[-r, -r], [r, -r], [r, r], [-r, r]];
    let mut labels: Vec<usize> = vec![BOX; 4];
    let tiny = 1e-12 * reach;

    for (li, d) in local.iter().enumerate() {
        let dd = d[0] * d[0] + d[1] * d[1];
        if dd <= tiny * tiny {
            continue;
        }
        let max_r2 = verts.iter().map(|v| v[0] * v[0] + v[1] * v[1]).fold(0.0, f64::max);
        // bisector lies beyond every cell vertex: this and all farther
        // neighbors cannot cut the cell
        if dd / 4.0 > max_r2 {
            break;
        }
        clip(&mut verts, &mut labels, d, dd / 2.0, li);
    }

    // drop collapsed edges (cocircular configurations)
    let m = verts.len();
    let mut keep_labels = Vec::with_capacity(m);
    for a in 0..m {
        let (p, q) = (verts[a], verts[(a + 1) % m]);
        let len = math::sqrt(math::sq(p[0] - q[0]) + math::sq(p[1] - q[1]));
        if len > 1e-10 * reach {
            keep_labels.push(labels[a]);
        }
    }
    let m = keep_labels.len();
    let mut tris = Vec::with_capacity(m);
    for a in 0..m {
        let (la, lb) = (keep_labels[a], keep_labels[(a + 1) % m]);
        if la == BOX || lb == BOX || la == lb {
            continue;
        }
        let mut t = [i, nbrs[la], nbrs[lb]];
        t.sort_unstable();
        tris.push(t);
    }
    if tris.is_empty() {
        return Err(Error::DegenerateNeighborhood {
            index: i,
            reason: "no local triangles".into(),
        });
    }
    Ok(tris)
}

/// Clip a convex polygon to the half-plane `x·d <= offset`; the new edge
/// along the clipping line is labelled `label`.
fn clip(verts: &mut Vec<[f64; 2]>, labels: &mut Vec<usize>, d: &[f64; 2], offset: f64, label: usize) {
    let m = verts.len();
    let f = |v: &[f64; 2]| v[0] * d[0] + v[1] * d[1] - offset;
    if verts.iter().all(|v| f(v) <= 0.0) {
        return;
    }
    let mut nv = Vec::with_capacity(m + 1);
    let mut nl = Vec::with_capacity(m + 1);
    for a in 0..m {
        let (cur, nxt) = (verts[a], verts[(a + 1) % m]);
        let (fc, fn_) = (f(&cur), f(&nxt));
        let cross = |t: f64| [cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])];
        if fc <= 0.0 {
            nv.push(cur);
            nl.push(labels[a]);
            if fn_ > 0.0 {
                nv.push(cross(fc / (fc - fn_)));
                nl.push(label);
            }
        } else if fn_ <= 0.0 {
            nv.push(cross(fc / (fc - fn_)));
            nl.push(labels[a]);
        }
    }
    *verts = nv;
    *labels = nl;
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Two dominant principal axes of the centered neighborhood (center
/// included).
fn tangent_frame(pos: &[[f64; 3]], i: usize, nbrs: &[usize], tol: f64) -> Result<([f64; 3], [f64; 3])> {
    let count = (nbrs.len() + 1) as f64;
    let mut mean = pos[i];
    for &j in nbrs {
        for a in 0..3 {
            mean[a] += pos[j][a];
        }
    }
    for v in mean.iter_mut() {
        *v /= count;
    }
    let mut cov = Matrix3::<f64>::zeros();
    for &j in core::iter::once(&i).chain(nbrs) {
        let v = [pos[j][0] - mean[0], pos[j][1] - mean[1], pos[j][2] - mean[2]];
        for a in 0..3 {
            for b in 0..3 {
                cov[(a, b)] += v[a] * v[b];
            }
        }
    }
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let (l1, l2) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if !(l1 > 0.0) || l2 <= tol * l1 {
        return Err(Error::DegenerateNeighborhood {
            index: i,
            reason: "neighbors are collinear".into(),
        });
    }
    let col = |k: usize| {
        let c = eig.eigenvectors.column(order[k]);
        [c[0], c[1], c[2]]
    };
    Ok((col(0), col(1)))
}
