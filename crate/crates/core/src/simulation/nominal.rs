//! Nominal designs: quasi-uniform samplings of reference surfaces with a
//! color field that varies linearly along z.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cloud::PointCloud4D;
use crate::error::{param, Result};
use crate::math;
use crate::rng::{self, StreamRng};

/// Built-in reference surfaces.
#[derive(Debug, Clone, PartialEq)]
pub enum NominalShape {
    /// Unit sphere.
    Sphere,
    /// Ring torus with major radius 1 and minor radius 0.4.
    Torus,
    /// Asymmetric star-shaped body with two lobes of different size, a
    /// stand-in for a part without exact symmetries.
    TwoLobe,
    /// Geometry taken from an existing cloud (its color is replaced).
    FromCloud(PointCloud4D),
}

impl NominalShape {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sphere" => Ok(Self::Sphere),
            "torus" => Ok(Self::Torus),
            "two_lobe" => Ok(Self::TwoLobe),
            other => Err(param(alloc::format!(
                "unknown shape '{other}' (expected sphere, torus, two_lobe or a file)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Sphere => "sphere",
            Self::Torus => "torus",
            Self::TwoLobe => "two_lobe",
            Self::FromCloud(_) => "from_file",
        }
    }
}

/// A reference geometry with its nominal color field.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalDesign {
    pub name: String,
    pub base_cloud: PointCloud4D,
}

impl NominalDesign {
    pub fn len(&self) -> usize {
        self.base_cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_cloud.is_empty()
    }
}

pub const MIN_BUILTIN_POINTS: usize = 200;

/// Sample a nominal design with `n` points (ignored for `FromCloud`).
pub fn make_nominal(shape: &NominalShape, n: usize, seed: u64) -> Result<NominalDesign> {
    let mut rng = rng::stream(seed, rng::domain::NOMINAL, 0);
    let positions = match shape {
        NominalShape::FromCloud(c) => c.positions().to_vec(),
        _ if n < MIN_BUILTIN_POINTS => {
            return Err(param(alloc::format!(
                "built-in shapes need n >= {MIN_BUILTIN_POINTS}, got {n}"
            )))
        }
        NominalShape::Sphere => sphere(n, &mut rng),
        NominalShape::Torus => farthest_point_subset(torus_candidates(4 * n, &mut rng), n, &mut rng),
        NominalShape::TwoLobe => {
            let dirs = sphere(4 * n, &mut rng);
            let cand = dirs.into_iter().map(two_lobe_point).collect();
            farthest_point_subset(cand, n, &mut rng)
        }
    };
    let color = z_color(&positions);
    let cloud = PointCloud4D::new(alloc::format!("nominal-{}", shape.name()), positions, color)?;
    Ok(NominalDesign {
        name: String::from(shape.name()),
        base_cloud: cloud,
    })
}

/// Affine map of z onto `[0, 10]`.
pub fn z_color(positions: &[[f64; 3]]) -> Vec<f64> {
    let lo = positions.iter().map(|p| p[2]).fold(f64::INFINITY, f64::min);
    let hi = positions.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    positions
        .iter()
        .map(|p| if span > 0.0 { 10.0 * (p[2] - lo) / span } else { 0.0 })
        .collect()
}

/// Jittered Fibonacci lattice on the unit sphere under a random rotation.
fn sphere(n: usize, rng: &mut StreamRng) -> Vec<[f64; 3]> {
    let golden = core::f64::consts::PI * (3.0 - math::sqrt(5.0));
    let rot = random_rotation(rng);
    let spacing = math::sqrt(4.0 * core::f64::consts::PI / n as f64);
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = math::sqrt((1.0 - z * z).max(0.0));
            let phi = golden * i as f64;
            let mut p = [r * math::cos(phi), r * math::sin(phi), z];
            for v in p.iter_mut() {
                let g: f64 = StandardNormal.sample(rng);
                *v += 0.1 * spacing * g;
            }
            let q = mat_vec(&rot, &p);
            let norm = math::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
            [q[0] / norm, q[1] / norm, q[2] / norm]
        })
        .collect()
}

/// Area-uniform random points on a torus (rejection on the area element).
fn torus_candidates(count: usize, rng: &mut StreamRng) -> Vec<[f64; 3]> {
    let (big, small) = (1.0, 0.4);
    let tau = 2.0 * core::f64::consts::PI;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u: f64 = rng.random::<f64>() * tau;
        let v: f64 = rng.random::<f64>() * tau;
        let w: f64 = rng.random();
        if w <= (big + small * math::cos(v)) / (big + small) {
            let ring = big + small * math::cos(v);
            out.push([ring * math::cos(u), ring * math::sin(u), small * math::sin(v)]);
        }
    }
    out
}

fn two_lobe_point(d: [f64; 3]) -> [f64; 3] {
    let bump = |c: [f64; 3], width: f64| {
        let dd = math::sq(d[0] - c[0]) + math::sq(d[1] - c[1]) + math::sq(d[2] - c[2]);
        math::exp(-dd / width)
    };
    let a = normalized([0.3, 0.5, 0.81]);
    let b = normalized([-0.6, -0.2, 0.55]);
    let r = 1.0 + 0.45 * bump(a, 0.18) + 0.25 * bump(b, 0.09) + 0.08 * d[0] * d[1];
    [1.0 * r * d[0], 0.8 * r * d[1], 0.65 * r * d[2]]
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let n = math::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Greedy farthest-point subset of `n` candidates, in selection order.
fn farthest_point_subset(cand: Vec<[f64; 3]>, n: usize, rng: &mut StreamRng) -> Vec<[f64; 3]> {
    let m = cand.len();
    let mut d2 = alloc::vec![f64::INFINITY; m];
    let mut chosen = Vec::with_capacity(n);
    let mut cur = rng.random_range(0..m);
    for _ in 0..n {
        chosen.push(cand[cur]);
        let c = cand[cur];
        let mut best = 0usize;
        for (j, p) in cand.iter().enumerate() {
            let dd = math::sq(p[0] - c[0]) + math::sq(p[1] - c[1]) + math::sq(p[2] - c[2]);
            if dd < d2[j] {
                d2[j] = dd;
            }
            if d2[j] > d2[best] {
                best = j;
            }
        }
        cur = best;
    }
    chosen
}

fn random_rotation(rng: &mut StreamRng) -> [[f64; 3]; 3] {
    // uniform random unit quaternion
    let mut q = [0.0f64; 4];
    for v in q.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    let n = math::sqrt(q.iter().map(|v| v * v).sum());
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Random rotation matrix for the given seed.
pub fn rotation_from_seed(seed: u64) -> [[f64; 3]; 3] {
    random_rotation(&mut rng::stream(seed, 0xA0, 0))
}

fn mat_vec(m: &[[f64; 3]; 3], p: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
        m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
        m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_on_unit_radius() {
        let d = make_nominal(&NominalShape::Sphere, 1000, 1).unwrap();
        for p in d.base_cloud.positions() {
            let r = math::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn color_spans_zero_to_ten() {
        for shape in [NominalShape::Sphere, NominalShape::Torus, NominalShape::TwoLobe] {
            let d = make_nominal(&shape, 300, 4).unwrap();
            let c = d.base_cloud.color();
            assert_eq!(c.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
            assert_eq!(c.iter().copied().fold(f64::NEG_INFINITY, f64::max), 10.0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = make_nominal(&NominalShape::TwoLobe, 300, 9).unwrap();
        let b = make_nominal(&NominalShape::TwoLobe, 300, 9).unwrap();
        let c = make_nominal(&NominalShape::TwoLobe, 300, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_small_and_unknown() {
        assert!(make_nominal(&NominalShape::Sphere, 100, 0).is_err());
        assert!(NominalShape::parse("bunny").is_err());
    }
}
