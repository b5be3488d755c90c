//! Sampling the marked Poisson measure and evaluating the field.
//!
//! A configuration fixes the point intensity `beta`, the lifetime rate
//! `delta`, the magnitude truncation `u_min`, a spatial region, a time horizon
//! `[0, T]`, and the attribute law. Support points are born uniformly on an
//! extended window (so storms born before time 0 or outside the region that
//! are still visible inside it are not lost), live an Exponential(delta)
//! lifetime, and carry Pareto(u_min, 1) magnitudes.
//!
//! Truncation caveat: dropping magnitudes below `u_min` makes the simulated
//! field exact only at levels above the validity floor
//! `u_min * sup kernel_peak` (see [`MsvConfig::validity_floor`]); levels below
//! it are undercounted. Point counts scale as `beta / u_min`, so raising
//! `u_min` is an exact thinning device for studies that only look above the
//! floor.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::attr::{Attribute, AttributeDistribution};
use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::Panel;
use crate::rng::{CoreRng, Seed};

const TAG_WINDOW: u64 = 0x57;
const TAG_POINTS: u64 = 0x70;

/// Axis-aligned spatial region.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SpaceBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid("box bounds must be nonempty and share a dimension"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() || u <= l {
                return Err(Error::invalid("box must have positive volume"));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Grow by `pad` on every side.
    pub fn padded(&self, pad: f64) -> SpaceBox {
        SpaceBox {
            lower: self.lower.iter().map(|l| l - pad).collect(),
            upper: self.upper.iter().map(|u| u + pad).collect(),
        }
    }

    /// Smallest box containing the given points.
    pub fn hull(points: &[Vec<f64>]) -> Result<SpaceBox> {
        if points.is_empty() {
            return Err(Error::invalid("hull of an empty point set"));
        }
        let d = points[0].len();
        let mut lower = points[0].clone();
        let mut upper = points[0].clone();
        for p in points {
            for k in 0..d {
                lower[k] = lower[k].min(p[k]);
                upper[k] = upper[k].max(p[k]);
            }
        }
        Ok(SpaceBox { lower, upper })
    }

    /// Euclidean distance from `x` to the box (0 inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        let mut sq = 0.0;
        for (v, (l, u)) in x.iter().zip(self.lower.iter().zip(&self.upper)) {
            let d = if v < l { l - v } else if v > u { v - u } else { 0.0 };
            sq += d * d;
        }
        sq.sqrt()
    }
}

/// Kernel family; Gaussian is the only member so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[non_exhaustive]
pub enum KernelKind {
    Gaussian,
}

/// How far to extend the sampling window beyond the box and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPolicy {
    /// Births exactly on box x [0, horizon]; biased near the edges.
    None,
    /// Birth window extended by 20/delta (survival past it < 5e-9) and box
    /// padded by the kernel reach plus the 99.9% quantile of travel distance
    /// before death, estimated from 1e5 attribute draws.
    Auto,
    /// Explicit extensions.
    Fixed {
        /// Extra birth time before 0.
        time_pad: f64,
        /// Extra space on every side of the box.
        space_pad: f64,
    },
}

/// Full simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MsvConfig {
    /// Points per unit space-time volume.
    pub beta: f64,
    /// Lifetime rate.
    pub delta: f64,
    /// Magnitude truncation.
    pub u_min: f64,
    /// Spatial region of interest.
    pub region: SpaceBox,
    /// Observation horizon `[0, horizon]`.
    pub horizon: f64,
    /// Attribute law.
    pub attributes: AttributeDistribution,
    /// Kernel family.
    pub kernel: KernelKind,
    /// Seed; identical configs and seeds reproduce points bit for bit.
    pub seed: u64,
    /// Birth-window extension policy.
    pub window: WindowPolicy,
}

/// One marked Poisson point: a storm.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    /// Severity; at least the configured truncation.
    pub magnitude: f64,
    /// Where the storm was born.
    pub birth_location: Vec<f64>,
    /// When it was born.
    pub birth_time: f64,
    /// How long it lives.
    pub lifetime: f64,
    /// Velocity and kernel shape.
    pub attribute: Attribute,
}

/// Resolved sampling window: padded box and extended birth interval.
#[derive(Debug, Clone)]
pub struct ResolvedWindow {
    pub extended_box: SpaceBox,
    pub birth_start: f64,
    pub space_pad: f64,
}

impl MsvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.u_min > 0.0) || !self.u_min.is_finite() {
            return Err(Error::invalid(format!("u_min must be positive, got {}", self.u_min)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.attributes.dim() != self.region.dim() {
            return Err(Error::invalid(format!(
                "attribute dimension {} does not match box dimension {}",
                self.attributes.dim(),
                self.region.dim()
            )));
        }
        Ok(())
    }

    /// Kernel reach: radius at which the widest plausible kernel has decayed
    /// below 1e-9 of its peak.
    fn kernel_reach(&self, min_eigenvalue: f64) -> f64 {
        (2.0 * (1e9f64).ln() / min_eigenvalue.max(1e-300)).sqrt()
    }

    /// Resolve the window policy into a concrete sampling domain.
    pub fn resolved_window(&self) -> ResolvedWindow {
        match self.window {
            WindowPolicy::None => ResolvedWindow {
                extended_box: self.region.clone(),
                birth_start: 0.0,
                space_pad: 0.0,
            },
            WindowPolicy::Fixed { time_pad, space_pad } => ResolvedWindow {
                extended_box: self.region.padded(space_pad),
                birth_start: -time_pad.max(0.0),
                space_pad: space_pad.max(0.0),
            },
            WindowPolicy::Auto => {
                let summary = self.attributes.tail_summary(
                    self.delta,
                    100_000,
                    Seed(self.seed).derive(TAG_WINDOW),
                );
                let pad = self.kernel_reach(summary.min_eigenvalue_q001) + summary.travel_q999;
                ResolvedWindow {
                    extended_box: self.region.padded(pad),
                    birth_start: -20.0 / self.delta,
                    space_pad: pad,
                }
            }
        }
    }

    /// Expected number of sampled support points.
    pub fn expected_point_count(&self) -> f64 {
        let w = self.resolved_window();
        self.beta * w.extended_box.volume() * (self.horizon - w.birth_start) / self.u_min
    }

    /// Level above which the truncated simulation reproduces the exact law.
    ///
    /// Exceeding a level `y` requires a magnitude above `y / kernel_peak`;
    /// whenever that is above `u_min` the truncation changes nothing. For
    /// random shapes the peak is summarized by its 99.9% quantile, so the
    /// floor is approximate in that case.
    pub fn validity_floor(&self) -> f64 {
        let summary = self
            .attributes
            .tail_summary(self.delta, 100_000, Seed(self.seed).derive(TAG_WINDOW));
        self.u_min * summary.kernel_peak_q999
    }
}

struct PointSampler {
    attributes: AttributeDistribution,
    extended_box: SpaceBox,
    birth_start: f64,
    horizon: f64,
    delta: f64,
    u_min: f64,
    remaining: u64,
    rng: CoreRng,
}

impl PointSampler {
    fn new(config: &MsvConfig) -> Result<Self> {
        config.validate()?;
        let window = config.resolved_window();
        let rate = config.beta * window.extended_box.volume() * (config.horizon - window.birth_start)
            / config.u_min;
        let mut rng = Seed(config.seed).derive(TAG_POINTS).rng();
        let remaining = if rate < 1e-12 {
            0
        } else {
            Poisson::new(rate)
                .map_err(|_| Error::invalid(format!("invalid point intensity {rate}")))?
                .sample(&mut rng) as u64
        };
        Ok(Self {
            attributes: config.attributes.clone(),
            extended_box: window.extended_box,
            birth_start: window.birth_start,
            horizon: config.horizon,
            delta: config.delta,
            u_min: config.u_min,
            remaining,
            rng,
        })
    }
}

impl Iterator for PointSampler {
    type Item = SupportPoint;

    fn next(&mut self) -> Option<SupportPoint> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let d = self.extended_box.dim();
        let mut birth_location = Vec::with_capacity(d);
        for k in 0..d {
            let (l, u) = (self.extended_box.lower()[k], self.extended_box.upper()[k]);
            birth_location.push(l + (u - l) * self.rng.random::<f64>());
        }
        let birth_time =
            self.birth_start + (self.horizon - self.birth_start) * self.rng.random::<f64>();
        let lifetime = -(1.0 - self.rng.random::<f64>()).ln() / self.delta;
        // Pareto(u_min, 1) by inversion; 1 - U avoids u = u_min / 0.
        let magnitude = self.u_min / (1.0 - self.rng.random::<f64>());
        let attribute = self.attributes.sample(&mut self.rng);
        Some(SupportPoint { magnitude, birth_location, birth_time, lifetime, attribute })
    }
}

/// Sample every support point of the configured Poisson measure.
///
/// The count is Poisson with mean [`MsvConfig::expected_point_count`]; births
/// are uniform on the extended box and window, lifetimes Exponential(delta),
/// magnitudes Pareto(u_min, 1), attributes from the configured law.
/// Deterministic given the seed.
pub fn sample_support_points(config: &MsvConfig) -> Result<Vec<SupportPoint>> {
    Ok(PointSampler::new(config)?.collect())
}

/// Kernel-weighted magnitude of one storm at `(x, t)`:
/// `phi_shape(x - birth_location - v (t - birth_time))` while the storm is
/// alive (`birth_time <= t < birth_time + lifetime`), zero otherwise.
pub fn kernel_value(x: &[f64], t: f64, point: &SupportPoint) -> f64 {
    debug_assert_eq!(x.len(), point.birth_location.len());
    if t < point.birth_time || t >= point.birth_time + point.lifetime {
        return 0.0;
    }
    let d = x.len();
    let elapsed = t - point.birth_time;
    let v = point.attribute.velocity();
    let offset: Vec<f64> = (0..d)
        .map(|k| x[k] - point.birth_location[k] - v[k] * elapsed)
        .collect();
    gaussian_density(&offset, point.attribute.shape())
}

fn gaussian_density(z: &[f64], shape: &crate::linalg::SymMat) -> f64 {
    let d = z.len() as f64;
    let q = shape.quad_form(z);
    let det = shape.det().unwrap_or(0.0);
    det.sqrt() * (2.0 * core::f64::consts::PI).powf(-0.5 * d) * (-0.5 * q).exp()
}

/// Field value `Y(x, t)`: the largest magnitude-weighted kernel over the
/// given points; 0 when none is alive (a truncation artifact — the
/// untruncated field is a.s. positive, but thresholds of interest sit far
/// above 0).
pub fn evaluate_process(points: &[SupportPoint], x: &[f64], t: f64) -> f64 {
    points.iter().fold(0.0f64, |best, p| best.max(p.magnitude * kernel_value(x, t, p)))
}

/// Running maximum `sup { Y(x, s) : 0 <= s <= t }`, evaluated in closed form.
///
/// Each storm's supremum over its live overlap with `[0, t]` is attained at
/// the closest point of approach to `x` in the shape metric, clamped to that
/// interval (either endpoint when the approach lies outside; any live instant
/// for zero velocity). Nondecreasing in `t` and dominating `Y(x, t)`.
pub fn evaluate_running_max(points: &[SupportPoint], x: &[f64], t: f64) -> f64 {
    points.iter().fold(0.0f64, |best, p| best.max(point_running_max(p, x, t)))
}

fn point_running_max(point: &SupportPoint, x: &[f64], t: f64) -> f64 {
    let lo = point.birth_time.max(0.0);
    let hi = t.min(point.birth_time + point.lifetime);
    if lo > hi || lo >= point.birth_time + point.lifetime {
        return 0.0;
    }
    let d = x.len();
    let v = point.attribute.velocity();
    let shape = point.attribute.shape();
    let rel: Vec<f64> = (0..d).map(|k| x[k] - point.birth_location[k]).collect();
    let vlv = shape.quad_form(v);
    let s_star = if vlv > 0.0 {
        let approach = linalg::dot(&shape.mul_vec(&rel), v) / vlv;
        (point.birth_time + approach).clamp(lo, hi)
    } else {
        lo
    };
    let elapsed = s_star - point.birth_time;
    let offset: Vec<f64> = (0..d).map(|k| rel[k] - v[k] * elapsed).collect();
    point.magnitude * gaussian_density(&offset, shape)
}

/// Record the field on a site/time grid.
///
/// Equals [`evaluate_process`] over [`sample_support_points`] of the same
/// config cell by cell, but streams the points and skips storms whose kernel
/// underflows to exactly zero at every cell, so large windows never
/// materialize in memory. Deterministic given the seed.
pub fn simulate_panel(config: &MsvConfig, sites: &[Vec<f64>], times: &[f64]) -> Result<Panel> {
    config.validate()?;
    if sites.is_empty() {
        return Err(Error::invalid("no sites requested"));
    }
    for (i, s) in sites.iter().enumerate() {
        if !config.region.contains(s) {
            return Err(Error::invalid(format!("site {i} lies outside the box")));
        }
    }
    if times.is_empty() {
        return Err(Error::invalid("no times requested"));
    }
    for (j, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::invalid(format!("times must be strictly increasing at index {}", j + 1)));
        }
    }
    for (j, &t) in times.iter().enumerate() {
        if t < 0.0 || t > config.horizon {
            return Err(Error::invalid(format!("time index {j} ({t}) outside [0, {}]", config.horizon)));
        }
    }

    let site_hull = SpaceBox::hull(sites)?;
    let (t_first, t_last) = (times[0], *times.last().expect("nonempty"));
    let mut values = vec![vec![0.0f64; times.len()]; sites.len()];

    for point in PointSampler::new(config)? {
        let live_lo = point.birth_time.max(t_first);
        let live_hi = (point.birth_time + point.lifetime).min(t_last);
        if live_lo > live_hi {
            continue;
        }
        if track_underflows(&point, &site_hull, live_lo, live_hi) {
            continue;
        }
        scatter_point(&point, sites, times, &mut values);
    }

    Panel::new(sites.to_vec(), times.to_vec(), values)
}

/// True when the storm's kernel is exactly 0.0 (f64 underflow) at every site
/// for its whole live overlap with the observation span, so dropping it
/// cannot change any recorded value.
fn track_underflows(point: &SupportPoint, hull: &SpaceBox, live_lo: f64, live_hi: f64) -> bool {
    let lam_min = point.attribute.shape().min_eigenvalue().max(1e-300);
    // exp(-q/2) with q/2 > 800 underflows to zero regardless of the prefactor
    let reach_sq = 1600.0 / lam_min;
    let d = point.birth_location.len();
    let v = point.attribute.velocity();
    let span = (live_hi - live_lo).max(0.0);
    let speed = linalg::norm(v);
    let track_len = speed * span;
    let reach = reach_sq.sqrt();
    let steps = if track_len <= 0.25 * reach {
        1
    } else {
        ((4.0 * track_len / reach).ceil() as usize).min(256)
    };
    let mut min_dist = f64::INFINITY;
    let mut pos = vec![0.0; d];
    for s in 0..=steps {
        let t = live_lo + span * s as f64 / steps as f64;
        let elapsed = t - point.birth_time;
        for k in 0..d {
            pos[k] = point.birth_location[k] + v[k] * elapsed;
        }
        min_dist = min_dist.min(hull.distance(&pos));
    }
    // positions between samples deviate at most half a step of travel
    let slack = if steps > 0 { 0.5 * track_len / steps as f64 } else { 0.0 };
    let lower_bound = (min_dist - slack).max(0.0);
    lower_bound * lower_bound > reach_sq
}

fn scatter_point(point: &SupportPoint, sites: &[Vec<f64>], times: &[f64], values: &mut [Vec<f64>]) {
    let d = point.birth_location.len();
    let shape = point.attribute.shape();
    let v = point.attribute.velocity();
    let det = shape.det().unwrap_or(0.0);
    // same arithmetic path as kernel_value so panel cells match
    // evaluate_process bit for bit
    let norm = det.sqrt() * (2.0 * core::f64::consts::PI).powf(-0.5 * d as f64);
    let j_lo = times.partition_point(|&t| t < point.birth_time);
    let j_hi = times.partition_point(|&t| t < point.birth_time + point.lifetime);
    let mut offset = vec![0.0; d];
    for j in j_lo..j_hi {
        let elapsed = times[j] - point.birth_time;
        for (i, site) in sites.iter().enumerate() {
            for k in 0..d {
                offset[k] = site[k] - point.birth_location[k] - v[k] * elapsed;
            }
            let q = shape.quad_form(&offset);
            if q < 1600.0 {
                let val = point.magnitude * (norm * (-0.5 * q).exp());
                if val > values[i][j] {
                    values[i][j] = val;
                }
            }
        }
    }
}
