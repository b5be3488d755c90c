//! Storm attributes (velocity and kernel shape) and their sampling law.
//!
//! Each support point carries an attribute `(v, shape)`: a velocity vector in
//! space units per time unit and a symmetric positive-definite matrix acting
//! as the inverse squared length scale of the Gaussian kernel. The attribute
//! law is one of:
//!
//! - a point mass (every storm identical),
//! - a factored law — Wishart shape, inverse-Gaussian speed, and wrapped
//!   Laplace angles on (-pi, pi] parameterizing the direction, or
//! - a weighted empirical list.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::SymMat;
use crate::math;
use crate::rng::Seed;

/// Velocity plus kernel shape for one storm.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    velocity: Vec<f64>,
    shape: SymMat,
}

impl Attribute {
    /// Validates dimension agreement and positive-definiteness of the shape.
    pub fn new(velocity: Vec<f64>, shape: SymMat) -> Result<Self> {
        if velocity.len() != shape.dim() {
            return Err(Error::invalid(format!(
                "velocity dimension {} does not match shape dimension {}",
                velocity.len(),
                shape.dim()
            )));
        }
        if velocity.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("velocity has non-finite entries"));
        }
        shape.cholesky()?; // all eigenvalues > 0
        Ok(Self { velocity, shape })
    }

    /// Zero velocity with the given shape.
    pub fn stationary(shape: SymMat) -> Self {
        let d = shape.dim();
        Self { velocity: vec![0.0; d], shape }
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn shape(&self) -> &SymMat {
        &self.shape
    }

    pub fn speed(&self) -> f64 {
        crate::linalg::norm(&self.velocity)
    }

    /// Kernel value at the center: `|shape|^(1/2) (2 pi)^(-d/2)`.
    pub fn kernel_peak(&self) -> f64 {
        let d = self.dim() as f64;
        let det = self.shape.det().unwrap_or(0.0);
        det.sqrt() * (2.0 * core::f64::consts::PI).powf(-0.5 * d)
    }
}

/// Law of the storm attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum AttributeDistribution {
    /// Every storm carries the same attribute.
    PointMass(Attribute),
    /// Wishart shape, inverse-Gaussian speed, wrapped Laplace direction.
    Factored {
        /// Wishart degrees of freedom (>= dimension).
        wishart_df: f64,
        /// Wishart scale matrix.
        wishart_scale: SymMat,
        /// Inverse-Gaussian mean of the speed.
        speed_mean: f64,
        /// Inverse-Gaussian shape of the speed.
        speed_shape: f64,
        /// Wrapped-Laplace rate for each angular coordinate.
        angle_rate: f64,
    },
    /// Weighted list of attributes; weights must sum to 1.
    Empirical(Vec<(Attribute, f64)>),
}

impl AttributeDistribution {
    /// Factored law, validated.
    pub fn factored(
        wishart_df: f64,
        wishart_scale: SymMat,
        speed_mean: f64,
        speed_shape: f64,
        angle_rate: f64,
    ) -> Result<Self> {
        let d = wishart_scale.dim() as f64;
        if wishart_df < d {
            return Err(Error::invalid(format!(
                "Wishart degrees of freedom {wishart_df} below dimension {d}"
            )));
        }
        wishart_scale.cholesky()?;
        if speed_mean <= 0.0 || speed_shape <= 0.0 || angle_rate <= 0.0 {
            return Err(Error::invalid(
                "speed mean, speed shape, and angle rate must all be positive",
            ));
        }
        Ok(Self::Factored { wishart_df, wishart_scale, speed_mean, speed_shape, angle_rate })
    }

    /// Weighted empirical law, validated.
    pub fn empirical(items: Vec<(Attribute, f64)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("empirical attribute list is empty"));
        }
        let d = items[0].0.dim();
        if items.iter().any(|(a, _)| a.dim() != d) {
            return Err(Error::invalid("empirical attributes have mixed dimensions"));
        }
        if items.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("empirical weights must be nonnegative"));
        }
        let total: f64 = items.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("empirical weights sum to {total}, not 1")));
        }
        Ok(Self::Empirical(items))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::PointMass(a) => a.dim(),
            Self::Factored { wishart_scale, .. } => wishart_scale.dim(),
            Self::Empirical(items) => items[0].0.dim(),
        }
    }

    /// True when the law puts all its mass on zero velocity.
    pub fn is_zero_velocity(&self) -> bool {
        match self {
            Self::PointMass(a) => a.velocity.iter().all(|&v| v == 0.0),
            Self::Factored { .. } => false,
            Self::Empirical(items) => {
                items.iter().all(|(a, w)| *w == 0.0 || a.velocity.iter().all(|&v| v == 0.0))
            }
        }
    }

    /// Draw one attribute.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Attribute {
        match self {
            Self::PointMass(a) => a.clone(),
            Self::Factored { wishart_df, wishart_scale, speed_mean, speed_shape, angle_rate } => {
                let d = wishart_scale.dim();
                let shape = sample_wishart(*wishart_df, wishart_scale, rng);
                let speed = InverseGaussian::new(*speed_mean, *speed_shape)
                    .expect("validated parameters")
                    .sample(rng);
                let angles: Vec<f64> =
                    (0..d.saturating_sub(1)).map(|_| sample_wrapped_laplace(*angle_rate, rng)).collect();
                Attribute { velocity: polar_to_velocity(speed, &angles, d), shape }
            }
            Self::Empirical(items) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, w) in items {
                    acc += w;
                    if u < acc {
                        return a.clone();
                    }
                }
                items.last().expect("nonempty").0.clone()
            }
        }
    }

    /// Monte Carlo tail summary used to size simulation windows.
    ///
    /// `delta` is the lifetime rate; `draws` pairs each sampled attribute with
    /// an Exponential(delta) lifetime to estimate the 99.9% quantile of the
    /// travel distance before death. Exact (no sampling) for point masses.
    pub fn tail_summary(&self, delta: f64, draws: usize, seed: Seed) -> TailSummary {
        if let Self::PointMass(a) = self {
            let life_q = (1000.0f64).ln() / delta;
            return TailSummary {
                speed_q999: a.speed(),
                travel_q999: a.speed() * life_q,
                min_eigenvalue_q001: a.shape.min_eigenvalue(),
                kernel_peak_q999: a.kernel_peak(),
            };
        }
        let mut rng = seed.rng();
        let n = draws.max(1000);
        let mut speeds = Vec::with_capacity(n);
        let mut travels = Vec::with_capacity(n);
        let mut eigs = Vec::with_capacity(n);
        let mut peaks = Vec::with_capacity(n);
        for _ in 0..n {
            let a = self.sample(&mut rng);
            let u: f64 = rng.random();
            let lifetime = -(1.0 - u).ln() / delta;
            let speed = a.speed();
            speeds.push(speed);
            travels.push(speed * lifetime);
            eigs.push(a.shape.min_eigenvalue());
            peaks.push(a.kernel_peak());
        }
        speeds.sort_unstable_by(|a, b| a.total_cmp(b));
        travels.sort_unstable_by(|a, b| a.total_cmp(b));
        eigs.sort_unstable_by(|a, b| a.total_cmp(b));
        peaks.sort_unstable_by(|a, b| a.total_cmp(b));
        TailSummary {
            speed_q999: math::order_statistic(&speeds, 0.999),
            travel_q999: math::order_statistic(&travels, 0.999),
            min_eigenvalue_q001: math::order_statistic(&eigs, 0.001),
            kernel_peak_q999: math::order_statistic(&peaks, 0.999),
        }
    }
}

/// Tail quantiles of the attribute law (see [`AttributeDistribution::tail_summary`]).
#[derive(Debug, Clone, Copy)]
pub struct TailSummary {
    /// 99.9% quantile of the speed.
    pub speed_q999: f64,
    /// 99.9% quantile of speed times lifetime.
    pub travel_q999: f64,
    /// 0.1% quantile of the smallest shape eigenvalue (widest plausible kernel).
    pub min_eigenvalue_q001: f64,
    /// 99.9% quantile of the kernel peak (drives the validity floor).
    pub kernel_peak_q999: f64,
}

/// Bartlett-decomposition Wishart sample with arbitrary real df >= dim.
fn sample_wishart<R: Rng + ?Sized>(df: f64, scale: &SymMat, rng: &mut R) -> SymMat {
    let d = scale.dim();
    let chol = scale.cholesky().expect("validated scale");
    // Lower-triangular A: diagonal sqrt(chi-square(df - i)), off-diagonal N(0,1).
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        let chi = Gamma::new(0.5 * (df - i as f64), 2.0)
            .expect("df >= dim keeps the shape positive")
            .sample(rng);
        a[i * d + i] = chi.sqrt();
        for j in 0..i {
            a[i * d + j] = StandardNormal.sample(rng);
        }
    }
    // B = L A, then W = B B'.
    let l = chol.lower();
    let mut b = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in j..=i {
                s += l[i * d + k] * a[k * d + j];
            }
            b[i * d + j] = s;
        }
    }
    let mut w = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += b[i * d + k] * b[j * d + k];
            }
            w[i * d + j] = s;
        }
    }
    SymMat::from_rows(d, w).expect("Wishart sample is symmetric")
}

/// Laplace(0, 1/rate) wrapped onto (-pi, pi].
fn sample_wrapped_laplace<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    let x = -u.signum() * (1.0 - 2.0 * u.abs()).ln() / rate;
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut w = x - two_pi * (x / two_pi + 0.5).floor();
    if w == -core::f64::consts::PI {
        w = core::f64::consts::PI;
    }
    w
}

/// Hyperspherical angles to a Cartesian velocity of dimension `d`.
fn polar_to_velocity(speed: f64, angles: &[f64], d: usize) -> Vec<f64> {
    match d {
        1 => vec![speed],
        2 => vec![speed * angles[0].cos(), speed * angles[0].sin()],
        _ => {
            let mut v = vec![0.0; d];
            let mut sin_prod = 1.0;
            for (i, &phi) in angles.iter().enumerate() {
                v[i] = speed * sin_prod * phi.cos();
                sin_prod *= phi.sin();
            }
            v[d - 1] = speed * sin_prod;
            v
        }
    }
}
