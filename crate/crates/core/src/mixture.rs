//! Bayesian atom-plus-exponentials mixture for waiting times.
//!
//! The model is `kappa ~ weights[0] * delta_0 + sum_j weights[j]
//! Exponential(rates[j])` with a Dirichlet prior on the weights and
//! independent Gamma priors on the rates. Observed waiting times are interval
//! censored: a recorded value is only known to lie in `[kappa, kappa +
//! censoring_interval]`, and a recorded zero may be a true atom or a small
//! positive value hidden by the sampling grid.
//!
//! One Gibbs sweep cycles four conjugate blocks:
//!
//! 1. allocations given the imputed values (an imputed exact zero belongs to
//!    the atom; positives split across the exponentials by density),
//! 2. rates given allocations (Gamma update),
//! 3. weights given allocations (Dirichlet update),
//! 4. fresh component picks and imputed values given the censored data
//!    (interval probabilities, then a truncated-exponential or atom draw).
//!
//! With a generous component count the extraneous components empty out, so
//! the posterior over the number of active exponentials is read off the
//! weights (see [`effective_components`]).

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::exceedance::WaitingTimes;
use crate::math::mean_and_se;
use crate::rng::{CoreRng, Seed};

/// Prior hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePriors {
    /// Number of components including the atom.
    pub components: usize,
    /// Symmetric Dirichlet concentration for the weights.
    pub dirichlet_alpha: f64,
    /// Gamma shape for each rate.
    pub gamma_shape: f64,
    /// Gamma rate for each rate.
    pub gamma_rate: f64,
}

impl MixturePriors {
    /// `alpha = 1/K`, Gamma(1, 1) rates.
    pub fn with_components(components: usize) -> Result<Self> {
        let p = Self {
            components,
            dirichlet_alpha: 1.0 / components as f64,
            gamma_shape: 1.0,
            gamma_rate: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<Self> {
        if self.components < 2 {
            return Err(Error::invalid("need at least the atom and one exponential"));
        }
        if !(self.dirichlet_alpha > 0.0 && self.gamma_shape > 0.0 && self.gamma_rate > 0.0) {
            return Err(Error::invalid("prior hyperparameters must be positive"));
        }
        Ok(self.clone())
    }
}

impl Default for MixturePriors {
    fn default() -> Self {
        Self::with_components(11).expect("11 components are valid")
    }
}

/// Mixture parameters: `weights[0]` belongs to the atom, `rates[j]` to
/// exponential component `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub rates: Vec<f64>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.len() != rates.len() + 1 {
            return Err(Error::invalid("weights must have one more entry than rates"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        if rates.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::invalid("rates must be positive"));
        }
        Ok(Self { weights, rates })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    /// Mean of the mixture, `sum_j weights[j] / rates[j - 1]`.
    pub fn mean(&self) -> f64 {
        self.weights[1..]
            .iter()
            .zip(&self.rates)
            .map(|(w, r)| w / r)
            .sum()
    }
}

/// Mutable Gibbs state: parameters plus latent allocations and imputations.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub params: MixtureParams,
    /// Component of each observation (0 = atom).
    pub allocations: Vec<usize>,
    /// Imputed uncensored waiting times.
    pub imputed: Vec<f64>,
}

impl GibbsState {
    /// Deterministic overdispersed initialization: uniform weights, rates on
    /// a ladder scaled by the mean positive wait, imputations at the
    /// censoring midpoint (zeros stay zero).
    pub fn init(data: &WaitingTimes, priors: &MixturePriors) -> Result<GibbsState> {
        if data.values.is_empty() {
            return Err(Error::insufficient("cannot fit a mixture to no waiting times"));
        }
        priors.validate()?;
        let k = priors.components;
        let positives: Vec<f64> = data.values.iter().copied().filter(|&v| v > 0.0).collect();
        let mean_pos = if positives.is_empty() {
            1.0
        } else {
            positives.iter().sum::<f64>() / positives.len() as f64
        };
        let rates: Vec<f64> =
            (1..k).map(|j| (j as f64 / k as f64) / mean_pos.max(1e-300)).collect();
        let weights = vec![1.0 / k as f64; k];
        let imputed: Vec<f64> = data
            .values
            .iter()
            .map(|&v| if v == 0.0 { 0.0 } else { v + 0.5 * data.censoring_interval })
            .collect();
        let allocations = vec![0; data.values.len()];
        Ok(GibbsState { params: MixtureParams::new(weights, rates)?, allocations, imputed })
    }
}

/// Draw allocations given imputed values: an exact zero is the atom,
/// positives go to exponential `j` with probability proportional to
/// `weights[j] rates[j-1] exp(-rates[j-1] value)`.
pub fn sample_allocations<R: Rng + ?Sized>(
    params: &MixtureParams,
    imputed: &[f64],
    rng: &mut R,
) -> Vec<usize> {
    let k = params.n_components();
    let mut logw = vec![0.0f64; k - 1];
    imputed
        .iter()
        .map(|&v| {
            if v == 0.0 {
                return 0;
            }
            for j in 1..k {
                let rate = params.rates[j - 1];
                logw[j - 1] = params.weights[j].ln() + rate.ln() - rate * v;
            }
            1 + sample_categorical_log(&logw, rng)
        })
        .collect()
}

/// Draw each rate from its Gamma full conditional.
pub fn sample_rates<R: Rng + ?Sized>(
    allocations: &[usize],
    imputed: &[f64],
    priors: &MixturePriors,
    rng: &mut R,
) -> Vec<f64> {
    let k = priors.components;
    let mut counts = vec![0.0f64; k];
    let mut sums = vec![0.0f64; k];
    for (&z, &v) in allocations.iter().zip(imputed) {
        counts[z] += 1.0;
        sums[z] += v;
    }
    (1..k)
        .map(|j| {
            let shape = priors.gamma_shape + counts[j];
            let rate = priors.gamma_rate + sums[j];
            Gamma::new(shape, 1.0 / rate)
                .expect("positive shape and scale")
                .sample(rng)
                .max(1e-300)
        })
        .collect()
}

/// Draw the weights from their Dirichlet full conditional.
pub fn sample_weights<R: Rng + ?Sized>(
    allocations: &[usize],
    priors: &MixturePriors,
    rng: &mut R,
) -> Vec<f64> {
    let k = priors.components;
    let mut counts = vec![0.0f64; k];
    for &z in allocations {
        counts[z] += 1.0;
    }
    loop {
        let draws: Vec<f64> = counts
            .iter()
            .map(|&n| {
                Gamma::new(priors.dirichlet_alpha + n, 1.0)
                    .expect("positive shape")
                    .sample(rng)
            })
            .collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return draws.into_iter().map(|g| g / total).collect();
        }
        // all-underflow is possible for tiny concentrations; redraw
    }
}

/// Re-pick a component for each censored observation from the interval
/// probabilities `weights[j] (F_j(kappa + dt) - F_j(kappa))` (atom only for
/// recorded zeros), then impute: zero for the atom, otherwise an exponential
/// truncated to `[kappa, kappa + dt]`.
pub fn impute<R: Rng + ?Sized>(
    params: &MixtureParams,
    data: &WaitingTimes,
    rng: &mut R,
) -> (Vec<usize>, Vec<f64>) {
    let k = params.n_components();
    let dt = data.censoring_interval;
    let mut picks = Vec::with_capacity(data.values.len());
    let mut imputed = Vec::with_capacity(data.values.len());
    let mut logw = vec![0.0f64; k];
    for &obs in &data.values {
        logw[0] = if obs == 0.0 { params.weights[0].ln() } else { f64::NEG_INFINITY };
        for j in 1..k {
            let rate = params.rates[j - 1];
            // ln of e^{-rate obs} (1 - e^{-rate dt})
            logw[j] = params.weights[j].ln() - rate * obs + (-(-rate * dt).exp_m1()).ln();
        }
        let w = sample_categorical_log(&logw, rng);
        picks.push(w);
        if w == 0 {
            imputed.push(0.0);
        } else {
            imputed.push(truncated_exponential(params.rates[w - 1], obs, dt, rng));
        }
    }
    (picks, imputed)
}

/// One full Gibbs sweep over allocations, rates, weights, and imputations.
pub fn gibbs_update<R: Rng + ?Sized>(
    state: &mut GibbsState,
    data: &WaitingTimes,
    priors: &MixturePriors,
    rng: &mut R,
) {
    state.allocations = sample_allocations(&state.params, &state.imputed, rng);
    let rates = sample_rates(&state.allocations, &state.imputed, priors, rng);
    let weights = sample_weights(&state.allocations, priors, rng);
    state.params = MixtureParams { weights, rates };
    let (_, imputed) = impute(&state.params, data, rng);
    state.imputed = imputed;
}

fn sample_categorical_log<R: Rng + ?Sized>(logw: &[f64], rng: &mut R) -> usize {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // every weight underflowed; fall back to uniform
        return rng.random_range(0..logw.len());
    }
    let weights: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Exponential(rate) conditioned on `[lo, lo + width]` by inversion.
fn truncated_exponential<R: Rng + ?Sized>(rate: f64, lo: f64, width: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if rate * width < 1e-12 {
        // the density is flat at this resolution
        return lo + u * width;
    }
    let q = -(-rate * width).exp_m1(); // 1 - e^{-rate width}
    let x = lo - (-u * q).ln_1p() / rate;
    x.clamp(lo, lo + width)
}

/// Per-parameter posterior means and standard deviations of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub weight_mean: Vec<f64>,
    pub weight_sd: Vec<f64>,
    pub rate_mean: Vec<f64>,
    pub rate_sd: Vec<f64>,
}

/// Retained draws of one chain.
#[derive(Debug, Clone)]
pub struct GibbsDraws {
    /// Post burn-in, thinned parameter draws.
    pub params: Vec<MixtureParams>,
    /// Imputed waiting times per retained draw (when stored).
    pub imputed: Option<Vec<Vec<f64>>>,
    /// Trace summaries (every step is a Gibbs move, so there is no
    /// acceptance rate to report).
    pub summary: TraceSummary,
}

impl GibbsDraws {
    /// Rebuild a chain from stored parameter draws (no imputations).
    pub fn from_params(params: Vec<MixtureParams>) -> Self {
        let summary = summarize(&params);
        GibbsDraws { params, imputed: None, summary }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}

/// Chain length controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Keep the per-draw imputed waiting times (memory scales with
    /// draws x observations).
    pub store_imputed: bool,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self { n_iter: 10_000, burn_in: 2_000, thin: 4, store_imputed: true }
    }
}

/// Run one chain; deterministic given the seed.
pub fn run_chain(
    data: &WaitingTimes,
    priors: &MixturePriors,
    n_iter: usize,
    burn_in: usize,
    thin: usize,
    seed: Seed,
) -> Result<GibbsDraws> {
    run_chain_with_options(
        data,
        priors,
        &ChainOptions { n_iter, burn_in, thin, store_imputed: true },
        seed,
    )
}

/// [`run_chain`] with explicit storage controls.
pub fn run_chain_with_options(
    data: &WaitingTimes,
    priors: &MixturePriors,
    options: &ChainOptions,
    seed: Seed,
) -> Result<GibbsDraws> {
    if options.n_iter <= options.burn_in {
        return Err(Error::invalid(format!(
            "n_iter {} must exceed burn_in {}",
            options.n_iter, options.burn_in
        )));
    }
    if options.thin == 0 {
        return Err(Error::invalid("thin must be at least 1"));
    }
    let mut rng: CoreRng = seed.rng();
    let mut state = GibbsState::init(data, priors)?;
    let mut params = Vec::new();
    let mut imputed = if options.store_imputed { Some(Vec::new()) } else { None };
    for iter in 0..options.n_iter {
        gibbs_update(&mut state, data, priors, &mut rng);
        if iter >= options.burn_in && (iter - options.burn_in).is_multiple_of(options.thin) {
            params.push(state.params.clone());
            if let Some(store) = imputed.as_mut() {
                store.push(state.imputed.clone());
            }
        }
    }
    let summary = summarize(&params);
    Ok(GibbsDraws { params, imputed, summary })
}

fn summarize(params: &[MixtureParams]) -> TraceSummary {
    let k = params.first().map_or(0, |p| p.n_components());
    let column = |extract: &dyn Fn(&MixtureParams) -> f64| {
        let values: Vec<f64> = params.iter().map(extract).collect();
        let (mean, se) = mean_and_se(&values);
        (mean, se * (values.len().max(1) as f64).sqrt())
    };
    let mut weight_mean = Vec::with_capacity(k);
    let mut weight_sd = Vec::with_capacity(k);
    for j in 0..k {
        let (m, s) = column(&|p: &MixtureParams| p.weights[j]);
        weight_mean.push(m);
        weight_sd.push(s);
    }
    let mut rate_mean = Vec::with_capacity(k.saturating_sub(1));
    let mut rate_sd = Vec::with_capacity(k.saturating_sub(1));
    for j in 0..k.saturating_sub(1) {
        let (m, s) = column(&|p: &MixtureParams| p.rates[j]);
        rate_mean.push(m);
        rate_sd.push(s);
    }
    TraceSummary { weight_mean, weight_sd, rate_mean, rate_sd }
}

/// `m` independent draws from the mixture under `params`.
pub fn predictive_sample(params: &MixtureParams, m: usize, seed: Seed) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::invalid("predictive sample size must be at least 1"));
    }
    let mut rng = seed.rng();
    Ok(predictive_sample_with(params, m, &mut rng))
}

/// [`predictive_sample`] drawing from a caller-owned generator.
pub fn predictive_sample_with<R: Rng + ?Sized>(
    params: &MixtureParams,
    m: usize,
    rng: &mut R,
) -> Vec<f64> {
    let k = params.n_components();
    (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut comp = k - 1;
            for (j, &w) in params.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    comp = j;
                    break;
                }
            }
            if comp == 0 {
                0.0
            } else {
                let v: f64 = rng.random();
                -(1.0 - v).ln() / params.rates[comp - 1]
            }
        })
        .collect()
}

/// Posterior distribution of the number of exponential components whose
/// weight exceeds `floor`, as (count, probability) pairs sorted by count.
pub fn effective_components(draws: &GibbsDraws, floor: f64) -> Result<Vec<(usize, f64)>> {
    if draws.is_empty() {
        return Err(Error::insufficient("no retained draws"));
    }
    let mut histogram = alloc::collections::BTreeMap::new();
    for p in &draws.params {
        let active = p.weights[1..].iter().filter(|&&w| w > floor).count();
        *histogram.entry(active).or_insert(0usize) += 1;
    }
    let total = draws.len() as f64;
    Ok(histogram.into_iter().map(|(k, n)| (k, n as f64 / total)).collect())
}
