//! Closed-form distributions of the field and its waiting times.
//!
//! Everything here is an expectation against the Poisson measure, reduced to
//! formulas in `beta`, `delta`, and integrals over the attribute law:
//!
//! - the unit Fréchet marginal `P[Y <= y] = exp(-beta/(delta y))`,
//! - the first-exceedance waiting time, a mixture of an atom at zero and an
//!   exponential whose rate grows with the mean kernel-metric speed,
//! - joint CDFs over finitely many space-time points (inclusion-exclusion of
//!   intersection measures),
//! - the two-point Gaussian CDF in terms of the standard normal CDF,
//! - the law of the gap between first exceedances at two sites under
//!   independence and under zero velocity, and
//! - an upper stochastic bound on that gap for moving storms.
//!
//! Attribute integrals with no closed form are computed by plain Monte Carlo
//! with reported standard errors (exact, zero-error for point-mass laws);
//! spatial integrals use importance sampling from the mixture of the shifted
//! kernels, which bounds the weight by the number of query points.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::attr::AttributeDistribution;
use crate::error::{Error, Result};
use crate::linalg::{dot, sub, SymMat};
use crate::math::{mean_and_se, normal_cdf, CompensatedSum};
use crate::rng::Seed;

const TAG_SPEED: u64 = 0xc1;
const TAG_INTERSECTION: u64 = 0xc2;
const TAG_BIVARIATE: u64 = 0xc3;
const TAG_ZERO_V: u64 = 0xc4;
const TAG_BOUND: u64 = 0xc5;

/// Default number of Monte Carlo draws for attribute integrals.
pub const DEFAULT_MC_DRAWS: usize = 100_000;

/// Process parameters for the analytic layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessParams {
    /// Points per unit space-time volume.
    pub beta: f64,
    /// Lifetime rate.
    pub delta: f64,
    /// Attribute law.
    pub attributes: AttributeDistribution,
    /// Monte Carlo sample size for attribute integrals.
    pub mc_draws: usize,
    /// Seed for every Monte Carlo integral below.
    pub seed: u64,
}

impl ProcessParams {
    pub fn new(beta: f64, delta: f64, attributes: AttributeDistribution, seed: u64) -> Result<Self> {
        let p = Self { beta, delta, attributes, mc_draws: DEFAULT_MC_DRAWS, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mc_draws(mut self, mc_draws: usize) -> Result<Self> {
        self.mc_draws = mc_draws;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !(self.delta > 0.0) {
            return Err(Error::invalid("beta and delta must be positive"));
        }
        if self.mc_draws == 0 {
            return Err(Error::invalid("mc_draws must be at least 1"));
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.attributes.dim()
    }
}

/// A Monte Carlo estimate with its standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }
}

/// One (location, time, level) triple of a joint non-exceedance query.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedancePoint {
    pub location: Vec<f64>,
    pub time: f64,
    pub level: f64,
}

/// Nonempty list of query points with positive levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceQuery {
    points: Vec<ExceedancePoint>,
}

impl ExceedanceQuery {
    pub fn new(points: Vec<ExceedancePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("exceedance query needs at least one point"));
        }
        let d = points[0].location.len();
        for (i, p) in points.iter().enumerate() {
            if p.location.len() != d {
                return Err(Error::invalid(format!("query point {i} has mixed dimension")));
            }
            if !(p.level > 0.0) || !p.level.is_finite() {
                return Err(Error::invalid(format!("query point {i} needs a positive level")));
            }
            if !p.time.is_finite() {
                return Err(Error::invalid(format!("query point {i} has a non-finite time")));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[ExceedancePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Marginal CDF `P[Y(x, t) <= y] = exp(-beta / (delta y))`.
pub fn marginal_cdf(y: f64, params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    if !(y > 0.0) {
        return Err(Error::invalid(format!("level must be positive, got {y}")));
    }
    Ok((-params.beta / (params.delta * y)).exp())
}

/// Attribute-law expectation of `sqrt(v' shape v / (2 pi))`, the speed term
/// in the waiting-time rate. Exact for point masses, Monte Carlo otherwise.
pub fn speed_moment(params: &ProcessParams) -> Result<McEstimate> {
    params.validate()?;
    let term = |shape: &SymMat, v: &[f64]| (shape.quad_form(v) / (2.0 * core::f64::consts::PI)).sqrt();
    if let AttributeDistribution::PointMass(a) = &params.attributes {
        return Ok(McEstimate::exact(term(a.shape(), a.velocity())));
    }
    let mut rng = Seed(params.seed).derive(TAG_SPEED).rng();
    let values: Vec<f64> = (0..params.mc_draws)
        .map(|_| {
            let a = params.attributes.sample(&mut rng);
            term(a.shape(), a.velocity())
        })
        .collect();
    let (value, std_error) = mean_and_se(&values);
    Ok(McEstimate { value, std_error })
}

/// Atom exponent and exponential rate of the first-exceedance waiting time:
/// `P[kappa > t] = exp(-a - b t)` with `a = beta/(delta y)` and
/// `b = a (delta + speed_moment)`.
pub fn kappa_rates(y: f64, params: &ProcessParams) -> Result<(f64, f64)> {
    if !(y > 0.0) {
        return Err(Error::invalid(format!("level must be positive, got {y}")));
    }
    let a = params.beta / (params.delta * y);
    let b = a * (params.delta + speed_moment(params)?.value);
    Ok((a, b))
}

/// Waiting-time survival `P[kappa > t] = exp(-a - b t)`.
///
/// This also equals `P[Y*(x, t) < y]`, the CDF of the running maximum; the
/// atom mass at `kappa = 0` is `1 - exp(-a)`.
pub fn kappa_survival(t: f64, y: f64, params: &ProcessParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let (a, b) = kappa_rates(y, params)?;
    Ok((-a - b * t).exp())
}

fn kernel_norm(shape: &SymMat, d: usize) -> f64 {
    shape.det().map(|det| det.sqrt()).unwrap_or(0.0)
        * (2.0 * core::f64::consts::PI).powf(-0.5 * d as f64)
}

/// Measure of the joint exceedance set of every point in `subset`:
/// `(beta/delta) e^(-delta (t_max - t_min))` times the spatial integral of the
/// pointwise minimum of the scaled shifted kernels, averaged over attributes.
///
/// The spatial integral importance-samples from the equal-weight mixture of
/// the shifted kernels, so singleton and coincident queries are exact (zero
/// variance).
pub fn intersection_measure(
    subset: &[ExceedancePoint],
    params: &ProcessParams,
) -> Result<McEstimate> {
    intersection_measure_seeded(subset, params, Seed(params.seed).derive(TAG_INTERSECTION))
}

fn intersection_measure_seeded(
    subset: &[ExceedancePoint],
    params: &ProcessParams,
    seed: Seed,
) -> Result<McEstimate> {
    params.validate()?;
    if subset.is_empty() {
        return Err(Error::invalid("intersection of an empty subset"));
    }
    let d = params.dim();
    if subset.iter().any(|p| p.location.len() != d) {
        return Err(Error::invalid("query dimension does not match the attribute law"));
    }
    let m = subset.len();
    let t_max = subset.iter().map(|p| p.time).fold(f64::NEG_INFINITY, f64::max);
    let t_min = subset.iter().map(|p| p.time).fold(f64::INFINITY, f64::min);
    let factor = params.beta / params.delta * (-params.delta * (t_max - t_min)).exp();

    let mut rng = seed.rng();
    let mut weights = Vec::with_capacity(params.mc_draws);
    let mut centers = alloc::vec![alloc::vec![0.0; d]; m];
    let mut z = alloc::vec![0.0; d];
    let mut eps = alloc::vec![0.0; d];
    for _ in 0..params.mc_draws {
        let a = params.attributes.sample(&mut rng);
        let shape = a.shape();
        let v = a.velocity();
        for (c, p) in centers.iter_mut().zip(subset) {
            for k in 0..d {
                c[k] = p.location[k] - v[k] * p.time;
            }
        }
        // z from the mixture: pick a component, add kernel-shaped noise
        let pick = rng.random_range(0..m);
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(&mut rng);
        }
        let chol = shape.cholesky().expect("shape is positive definite");
        let noise = chol.solve_lower_transpose(&eps);
        for k in 0..d {
            z[k] = centers[pick][k] + noise[k];
        }
        let norm = kernel_norm(shape, d);
        let mut min_scaled = f64::INFINITY;
        let mut mix = 0.0;
        for (c, p) in centers.iter().zip(subset) {
            let offset = sub(c, &z);
            let dens = norm * (-0.5 * shape.quad_form(&offset)).exp();
            mix += dens;
            min_scaled = min_scaled.min(dens / p.level);
        }
        mix /= m as f64;
        weights.push(if mix > 0.0 { min_scaled / mix } else { 0.0 });
    }
    let (mean, se) = mean_and_se(&weights);
    Ok(McEstimate { value: factor * mean, std_error: factor * se })
}

/// Exponent of the joint CDF: the measure of the union of the per-point
/// exceedance sets by inclusion-exclusion over nonempty subsets.
///
/// Each subset term gets an independent Monte Carlo stream; the standard
/// error combines them in quadrature. At most 12 query points.
pub fn joint_exponent(query: &ExceedanceQuery, params: &ProcessParams) -> Result<McEstimate> {
    params.validate()?;
    let n = query.len();
    if n > 12 {
        return Err(Error::invalid(format!("query has {n} points; the subset sum caps at 12")));
    }
    let mut total = CompensatedSum::new();
    let mut var = CompensatedSum::new();
    let mut subset = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        subset.clear();
        for (i, p) in query.points().iter().enumerate() {
            if mask & (1 << i) != 0 {
                subset.push(p.clone());
            }
        }
        let est = intersection_measure_seeded(
            &subset,
            params,
            Seed(params.seed).derive2(TAG_INTERSECTION, mask as u64),
        )?;
        let sign = if subset.len() % 2 == 1 { 1.0 } else { -1.0 };
        total.add(sign * est.value);
        var.add(est.std_error * est.std_error);
    }
    Ok(McEstimate { value: total.value(), std_error: var.value().sqrt() })
}

/// Joint CDF `P[Y(x_i, t_i) <= y_i for all i] = exp(-joint_exponent)`.
pub fn joint_cdf(query: &ExceedanceQuery, params: &ProcessParams) -> Result<f64> {
    Ok((-joint_exponent(query, params)?.value).exp())
}

/// `Phi(s/2 - log_ratio/s)` with the `s -> 0` limit resolved by the sign of
/// the log ratio (1/2 at exact ties).
fn phi_half_minus(s: f64, log_ratio: f64) -> f64 {
    if s > 1e-154 {
        normal_cdf(0.5 * s - log_ratio / s)
    } else if log_ratio > 0.0 {
        0.0
    } else if log_ratio < 0.0 {
        1.0
    } else {
        0.5
    }
}

/// Exponent of the two-point Gaussian CDF, with standard error.
pub fn bivariate_exponent_gaussian(
    p1: &ExceedancePoint,
    p2: &ExceedancePoint,
    params: &ProcessParams,
) -> Result<McEstimate> {
    params.validate()?;
    let d = params.dim();
    if p1.location.len() != d || p2.location.len() != d {
        return Err(Error::invalid("query dimension does not match the attribute law"));
    }
    if !(p1.level > 0.0 && p2.level > 0.0) {
        return Err(Error::invalid("levels must be positive"));
    }
    let lag = (p2.time - p1.time).abs();
    let decay = (-params.delta * lag).exp();
    let base = params.beta / params.delta * (1.0 - decay) * (1.0 / p1.level + 1.0 / p2.level);
    let dx = sub(&p2.location, &p1.location);
    let dt = p2.time - p1.time;
    let log_ratio = (p1.level / p2.level).ln();

    let bracket = |shape: &SymMat, v: &[f64]| {
        let shifted: Vec<f64> = (0..d).map(|k| dx[k] - dt * v[k]).collect();
        let s = shape.quad_form(&shifted).max(0.0).sqrt();
        phi_half_minus(s, log_ratio) / p1.level + phi_half_minus(s, -log_ratio) / p2.level
    };

    let inner = if let AttributeDistribution::PointMass(a) = &params.attributes {
        McEstimate::exact(bracket(a.shape(), a.velocity()))
    } else {
        let mut rng = Seed(params.seed).derive(TAG_BIVARIATE).rng();
        let values: Vec<f64> = (0..params.mc_draws)
            .map(|_| {
                let a = params.attributes.sample(&mut rng);
                bracket(a.shape(), a.velocity())
            })
            .collect();
        let (value, std_error) = mean_and_se(&values);
        McEstimate { value, std_error }
    };
    let scale = params.beta / params.delta * decay;
    Ok(McEstimate { value: base + scale * inner.value, std_error: scale * inner.std_error })
}

/// Two-point CDF of the Gaussian field, `P[Y(x1,t1) <= y1, Y(x2,t2) <= y2]`.
///
/// Symmetric in its two points; at equal times and a point-mass attribute law
/// it reduces to the classical one-time bivariate exceedance exponent.
pub fn bivariate_cdf_gaussian(
    p1: &ExceedancePoint,
    p2: &ExceedancePoint,
    params: &ProcessParams,
) -> Result<f64> {
    Ok((-bivariate_exponent_gaussian(p1, p2, params)?.value).exp())
}

/// Atom exponents and exponential rates of the independence null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullRates {
    /// Atom exponent at site 1 (`beta/(delta y1)`).
    pub a1: f64,
    /// Atom exponent at site 2.
    pub a2: f64,
    /// Exponential rate at site 1.
    pub b1: f64,
    /// Exponential rate at site 2.
    pub b2: f64,
}

impl NullRates {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<Self> {
        if !(a1 >= 0.0 && a2 >= 0.0) {
            return Err(Error::invalid("atom exponents must be nonnegative"));
        }
        if !(b1 > 0.0 && b2 > 0.0) {
            return Err(Error::invalid("exponential rates must be positive"));
        }
        Ok(Self { a1, a2, b1, b2 })
    }

    /// Build the null from two levels via the marginal waiting-time rates.
    pub fn from_levels(y1: f64, y2: f64, params: &ProcessParams) -> Result<Self> {
        let (a1, b1) = kappa_rates(y1, params)?;
        let (a2, b2) = kappa_rates(y2, params)?;
        NullRates::new(a1, a2, b1, b2)
    }
}

/// Survival of the gap between two independent waiting times, each an atom
/// plus one exponential: a three-component mixture (atom at zero and two
/// exponentials with rates `b1`, `b2`).
pub fn independence_survival(t: f64, rates: &NullRates) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let NullRates { a1, a2, b1, b2 } = *rates;
    let s = (1.0 - (-a2).exp()) * (-a1 - b1 * t).exp()
        + (1.0 - (-a1).exp()) * (-a2 - b2 * t).exp()
        + (-a1 - a2).exp() / (b1 + b2) * (b2 * (-b1 * t).exp() + b1 * (-b2 * t).exp());
    Ok(s)
}

/// Rates of the zero-velocity pair law: simultaneous (`lambda0`) and
/// single-site (`lambda1`, `lambda2`) exceedance intensities, with
/// `lambda_plus` their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V0Rates {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_plus: f64,
}

impl V0Rates {
    pub fn new(lambda0: f64, lambda1: f64, lambda2: f64, lambda_plus: f64) -> Result<Self> {
        if [lambda0, lambda1, lambda2].iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::invalid("rates must be nonnegative"));
        }
        if (lambda0 + lambda1 + lambda2 - lambda_plus).abs() > 1e-9 {
            return Err(Error::invalid("lambda_plus must equal the sum of the components"));
        }
        Ok(Self { lambda0, lambda1, lambda2, lambda_plus })
    }
}

/// Rates of the pair waiting-time law when the attribute law has zero
/// velocity (only the shape is random), by Monte Carlo over the shape.
///
/// Equal thresholds take the fast path through the single integral
/// `Z = E[2 Phi(-S/2)]`: `lambda0 = c Z`, `lambda1 = lambda2 = c (1 - Z)`
/// with `c = beta / (delta y)`.
pub fn zero_velocity_rates(
    x1: &[f64],
    x2: &[f64],
    y1: f64,
    y2: f64,
    params: &ProcessParams,
) -> Result<V0Rates> {
    params.validate()?;
    if !params.attributes.is_zero_velocity() {
        return Err(Error::invalid(
            "zero-velocity law requires an attribute distribution concentrated on v = 0",
        ));
    }
    if !(y1 > 0.0 && y2 > 0.0) {
        return Err(Error::invalid("levels must be positive"));
    }
    let d = params.dim();
    if x1.len() != d || x2.len() != d {
        return Err(Error::invalid("site dimension does not match the attribute law"));
    }
    let dx = sub(x2, x1);
    let c = params.beta / params.delta;

    let mut rng = Seed(params.seed).derive(TAG_ZERO_V).rng();
    let exact = matches!(params.attributes, AttributeDistribution::PointMass(_));
    let draws = if exact { 1 } else { params.mc_draws };

    if y1 == y2 {
        let mut z_sum = CompensatedSum::new();
        for _ in 0..draws {
            let a = params.attributes.sample(&mut rng);
            let s = a.shape().quad_form(&dx).max(0.0).sqrt();
            z_sum.add(2.0 * normal_cdf(-0.5 * s));
        }
        let z = z_sum.value() / draws as f64;
        let lambda0 = c / y1 * z;
        let lambda1 = c / y1 * (1.0 - z);
        return V0Rates::new(lambda0, lambda1, lambda1, lambda0 + 2.0 * lambda1);
    }

    let l12 = (y1 / y2).ln();
    let l21 = -l12;
    // Phi(l/S + sign * S/2) with the S -> 0 limit stepped by the sign of l
    let term = |l: f64, s: f64, sign: f64| {
        if s > 1e-154 {
            normal_cdf(l / s + sign * 0.5 * s)
        } else if l > 0.0 {
            1.0
        } else {
            0.0
        }
    };
    let (mut s0, mut s1, mut s2) =
        (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for _ in 0..draws {
        let a = params.attributes.sample(&mut rng);
        let s = a.shape().quad_form(&dx).max(0.0).sqrt();
        s0.add(term(l12, s, -1.0) / y1 + term(l21, s, -1.0) / y2);
        s1.add(term(l21, s, 1.0) / y1 - term(l21, s, -1.0) / y2);
        s2.add(term(l12, s, 1.0) / y2 - term(l12, s, -1.0) / y1);
    }
    let lambda0 = (c * s0.value() / draws as f64).max(0.0);
    let lambda1 = (c * s1.value() / draws as f64).max(0.0);
    let lambda2 = (c * s2.value() / draws as f64).max(0.0);
    V0Rates::new(lambda0, lambda1, lambda2, lambda0 + lambda1 + lambda2)
}

/// Atom mass `P[gap = 0]` of the zero-velocity pair law.
pub fn zero_velocity_atom(rates: &V0Rates) -> f64 {
    let V0Rates { lambda0, lambda1, lambda2, lambda_plus } = *rates;
    if lambda_plus <= 0.0 {
        return 1.0;
    }
    1.0 - (-lambda0).exp() * ((-lambda1).exp() + (-lambda2).exp())
        + (-lambda_plus).exp() * (1.0 + lambda0 / lambda_plus)
}

/// Survival `P[gap > t]` of the zero-velocity pair law for `t >= 0`; together
/// with [`zero_velocity_atom`] the total mass is 1.
pub fn zero_velocity_survival(t: f64, rates: &V0Rates, delta: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    let V0Rates { lambda0, lambda1, lambda2, lambda_plus } = *rates;
    if lambda_plus <= 0.0 {
        return Ok(0.0);
    }
    let l02 = lambda0 + lambda2;
    let l01 = lambda0 + lambda1;
    let s = (-l02 * (1.0 + delta * t)).exp() * (1.0 - l02 / lambda_plus * (-lambda1).exp())
        + (-l01 * (1.0 + delta * t)).exp() * (1.0 - l01 / lambda_plus * (-lambda2).exp());
    Ok(s.max(0.0))
}

/// Exponent of the stochastic upper bound on the pair-gap survival for moving
/// storms, with standard error.
pub fn stochastic_bound_exponent(
    t: f64,
    x1: &[f64],
    x2: &[f64],
    y1: f64,
    y2: f64,
    params: &ProcessParams,
) -> Result<McEstimate> {
    params.validate()?;
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    if !(y1 > 0.0 && y2 > 0.0) {
        return Err(Error::invalid("levels must be positive"));
    }
    let d = params.dim();
    if x1.len() != d || x2.len() != d {
        return Err(Error::invalid("site dimension does not match the attribute law"));
    }
    let dx = sub(x2, x1);
    let log_ratio = (y1 / y2).ln();

    let contribution = |shape: &SymMat, v: &[f64]| {
        let vlv = shape.quad_form(v);
        if vlv <= 0.0 {
            // storms that do not move never enter the approach-time geometry
            return 0.0;
        }
        let drift = dot(&shape.mul_vec(v), &dx) / vlv;
        if drift < -t || drift > t {
            return 0.0;
        }
        let s_perp = (shape.quad_form(&dx) - drift * drift * vlv).max(0.0).sqrt();
        let term = |l: f64| {
            if s_perp > 1e-154 {
                normal_cdf(-0.5 * s_perp + l / s_perp)
            } else if l > 0.0 {
                1.0
            } else if l < 0.0 {
                0.0
            } else {
                0.5
            }
        };
        (t - drift)
            * (-params.delta * drift).exp()
            * (term(log_ratio) / y1 + term(-log_ratio) / y2)
            * vlv.sqrt()
    };

    let scale = params.beta / (2.0 * core::f64::consts::PI).sqrt();
    if let AttributeDistribution::PointMass(a) = &params.attributes {
        return Ok(McEstimate::exact(scale * contribution(a.shape(), a.velocity())));
    }
    let mut rng = Seed(params.seed).derive(TAG_BOUND).rng();
    let values: Vec<f64> = (0..params.mc_draws)
        .map(|_| {
            let a = params.attributes.sample(&mut rng);
            contribution(a.shape(), a.velocity())
        })
        .collect();
    let (mean, se) = mean_and_se(&values);
    Ok(McEstimate { value: scale * mean, std_error: scale * se })
}

/// Stochastic upper bound `P[gap > t] <= exp(-exponent)`.
pub fn stochastic_bound(
    t: f64,
    x1: &[f64],
    x2: &[f64],
    y1: f64,
    y2: f64,
    params: &ProcessParams,
) -> Result<f64> {
    Ok((-stochastic_bound_exponent(t, x1, x2, y1, y2, params)?.value).exp())
}
