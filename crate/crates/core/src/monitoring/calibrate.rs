//! Bootstrap-assisted bisection of control limits for the combined scheme.
//!
//! Stage 1 tunes each chart alone to twice the target ARL; stage 2 scales
//! both limits by a common factor until the combined scheme hits the
//! target. Bootstrap runs use common random numbers (run `r` always draws
//! from the same stream), so estimated ARLs are monotone in the limits and
//! bisection is well defined.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{param, Error, Result};
use crate::par;
use crate::rng::{self, domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    pub arl0: f64,
    pub k_s: f64,
    pub k_c: f64,
    pub n_bootstrap: usize,
    pub max_run_length: usize,
    pub rng_seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            m1: 600,
            m2: 300,
            m3: 4000,
            arl0: 100.0,
            k_s: 0.05,
            k_c: 0.05,
            n_bootstrap: 1000,
            max_run_length: 4000,
            rng_seed: 0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m1 < 2 || self.m2 < 2 || self.m3 < 2 {
            return Err(param("m1, m2 and m3 must each be at least 2"));
        }
        if !(self.arl0 > 1.0) || !self.arl0.is_finite() {
            return Err(param("arl0 must exceed 1"));
        }
        if !(self.k_s > 0.0 && self.k_c > 0.0) || !self.k_s.is_finite() || !self.k_c.is_finite() {
            return Err(param("reference values k_s and k_c must be positive"));
        }
        if self.n_bootstrap == 0 {
            return Err(param("n_bootstrap must be positive"));
        }
        if (self.max_run_length as f64) <= 2.0 * self.arl0 * (1.0 + TOLERANCE) {
            return Err(param("max_run_length must exceed twice arl0"));
        }
        Ok(())
    }

    pub fn reference_size(&self) -> usize {
        self.m1 + self.m2 + self.m3
    }
}

/// Relative half-width of the accepted ARL band.
pub const TOLERANCE: f64 = 0.02;
pub const BRACKET: (f64, f64) = (0.01, 100.0);
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub h_s: f64,
    pub h_c: f64,
    /// Stage-1 limits, each tuned to `2 · arl0` alone.
    pub stage1_h_s: f64,
    pub stage1_h_c: f64,
    pub rho: f64,
    pub arl_shape: f64,
    pub arl_color: f64,
    pub arl_combined: f64,
}

/// Bootstrap ARL estimator over standardized calibration statistics.
pub struct BootstrapArl<'a> {
    /// `(x − mu)/sigma − k` per calibration index.
    s: &'a [f64],
    c: &'a [f64],
    runs: usize,
    max_len: usize,
    seed: u64,
}

impl<'a> BootstrapArl<'a> {
    pub fn new(s: &'a [f64], c: &'a [f64], runs: usize, max_len: usize, seed: u64) -> Self {
        Self { s, c, runs, max_len, seed }
    }

    /// ARL of a single chart fed from `z` (censored runs count as `max_len`).
    pub fn single(&self, z: &[f64], h: f64, stream_domain: u64) -> f64 {
        let m = z.len();
        let lens = par::map_range(self.runs, |r| {
            let mut g = rng::stream(self.seed, stream_domain, r as u64);
            let mut state = 0.0f64;
            for t in 1..=self.max_len {
                state = (state + z[g.random_range(0..m)]).max(0.0);
                if state > h {
                    return t;
                }
            }
            self.max_len
        });
        mean(&lens)
    }

    /// ARL of the combined scheme with indices drawn jointly.
    pub fn combined(&self, h_s: f64, h_c: f64) -> f64 {
        let m = self.s.len();
        let lens = par::map_range(self.runs, |r| {
            let mut g = rng::stream(self.seed, domain::BOOTSTRAP_JOINT, r as u64);
            let (mut a, mut b) = (0.0f64, 0.0f64);
            for t in 1..=self.max_len {
                let i = g.random_range(0..m);
                a = (a + self.s[i]).max(0.0);
                b = (b + self.c[i]).max(0.0);
                if a > h_s || b > h_c {
                    return t;
                }
            }
            self.max_len
        });
        mean(&lens)
    }

    pub fn shape(&self, h: f64) -> f64 {
        self.single(self.s, h, domain::BOOTSTRAP_SHAPE)
    }

    pub fn color(&self, h: f64) -> f64 {
        self.single(self.c, h, domain::BOOTSTRAP_COLOR)
    }
}

fn mean(lens: &[usize]) -> f64 {
    lens.iter().sum::<usize>() as f64 / lens.len() as f64
}

/// Standardize and shift by the reference value: `(x − mu)/sigma − k`.
pub fn increments(x: &[f64], mu: f64, sigma: f64, k: f64) -> Vec<f64> {
    x.iter().map(|v| (v - mu) / sigma - k).collect()
}

/// Calibrate `(h_s, h_c)` on subset-3 statistics, given the subset-2
/// moments `(mu, sigma)` of each statistic.
pub fn calibrate_limits(
    s_cal: &[f64],
    c_cal: &[f64],
    shape_moments: (f64, f64),
    color_moments: (f64, f64),
    cfg: &CalibrationConfig,
) -> Result<Calibration> {
    cfg.validate()?;
    if s_cal.len() != c_cal.len() {
        return Err(Error::DimensionMismatch { expected: s_cal.len(), found: c_cal.len() });
    }
    if s_cal.len() < 2 {
        return Err(param("need at least two calibration statistics"));
    }
    for (name, x) in [("shape", s_cal), ("color", c_cal)] {
        let first = x[0];
        if x.iter().all(|v| *v == first) {
            return Err(Error::Calibration(alloc::format!(
                "{name} calibration statistics are all equal; the bootstrap cannot produce alarms"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Calibration(alloc::format!("non-finite {name} calibration statistic")));
        }
    }
    for (mu, sigma) in [shape_moments, color_moments] {
        if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
            return Err(Error::Calibration("statistic standard deviation must be positive".into()));
        }
    }
    let zs = increments(s_cal, shape_moments.0, shape_moments.1, cfg.k_s);
    let zc = increments(c_cal, color_moments.0, color_moments.1, cfg.k_c);
    let boot = BootstrapArl::new(&zs, &zc, cfg.n_bootstrap, cfg.max_run_length, cfg.rng_seed);

    let single_target = 2.0 * cfg.arl0;
    let (h_s1, arl_s) = bisect(|h| boot.shape(h), single_target, "shape")?;
    let (h_c1, arl_c) = bisect(|h| boot.color(h), single_target, "color")?;
    let lo = BRACKET.0 / h_s1.min(h_c1);
    let hi = BRACKET.1 / h_s1.max(h_c1);
    let (rho, arl) = bisect_in(|r| boot.combined(r * h_s1, r * h_c1), cfg.arl0, (lo, hi), "combined")?;
    log::info!(
        "calibrated limits: stage 1 h_s={h_s1:.4} (ARL {arl_s:.1}), h_c={h_c1:.4} (ARL {arl_c:.1}); rho={rho:.4}, combined ARL {arl:.1}"
    );
    Ok(Calibration {
        h_s: rho * h_s1,
        h_c: rho * h_c1,
        stage1_h_s: h_s1,
        stage1_h_c: h_c1,
        rho,
        arl_shape: arl_s,
        arl_color: arl_c,
        arl_combined: arl,
    })
}

/// Calibrate a lone CUSUM chart to `arl0` (used by single-chart baselines).
/// Returns `(h, bootstrap ARL)`.
pub fn calibrate_single_limit(
    x_cal: &[f64],
    moments: (f64, f64),
    k_ref: f64,
    cfg: &CalibrationConfig,
) -> Result<(f64, f64)> {
    cfg.validate()?;
    if x_cal.len() < 2 || x_cal.iter().all(|v| *v == x_cal[0]) {
        return Err(Error::Calibration("calibration statistics are degenerate".into()));
    }
    if !(moments.1 > 0.0) {
        return Err(Error::Calibration("statistic standard deviation must be positive".into()));
    }
    let z = increments(x_cal, moments.0, moments.1, k_ref);
    let boot = BootstrapArl::new(&z, &z, cfg.n_bootstrap, cfg.max_run_length, cfg.rng_seed);
    bisect(|h| boot.shape(h), cfg.arl0, "single chart")
}

fn bisect<F: Fn(f64) -> f64>(f: F, target: f64, what: &str) -> Result<(f64, f64)> {
    bisect_in(f, target, BRACKET, what)
}

/// Geometric bisection on a nondecreasing ARL curve until it lands in
/// `target · (1 ± TOLERANCE)`.
///
/// The bootstrap ARL is a step function of the limit. When a single step
/// straddles the whole band (a heavy-tailed calibration value crossing the
/// limit moves many runs at once) the closer side is kept with a warning.
fn bisect_in<F: Fn(f64) -> f64>(f: F, target: f64, (mut lo, mut hi): (f64, f64), what: &str) -> Result<(f64, f64)> {
    let band = (target * (1.0 - TOLERANCE), target * (1.0 + TOLERANCE));
    let mut f_lo = f(lo);
    if f_lo > band.1 {
        return Err(Error::Calibration(alloc::format!(
            "{what} ARL at the lower bracket ({f_lo:.1}) already exceeds the target; the calibration sample (m3) is too small to produce early alarms"
        )));
    }
    if f_lo >= band.0 {
        return Ok((lo, f_lo));
    }
    let mut f_hi = f(hi);
    if f_hi < band.0 {
        return Err(Error::Calibration(alloc::format!(
            "{what} ARL at the upper bracket ({f_hi:.1}) is below the target"
        )));
    }
    if f_hi <= band.1 {
        return Ok((hi, f_hi));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = crate::math::sqrt(lo * hi);
        let v = f(mid);
        if v < band.0 {
            lo = mid;
            f_lo = v;
        } else if v > band.1 {
            hi = mid;
            f_hi = v;
        } else {
            return Ok((mid, v));
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let (h, v) = if target / f_lo <= f_hi / target { (lo, f_lo) } else { (hi, f_hi) };
    log::warn!(
        "{what} ARL steps from {f_lo:.2} to {f_hi:.2} at limit {h:.6}, over the band [{:.2}, {:.2}]; keeping {v:.2} (a larger m3 smooths the curve)",
        band.0, band.1
    );
    Ok((h, v))
}
