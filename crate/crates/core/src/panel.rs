//! Multivariate time-series panels: values of the field at sites x times.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Grid spacing of the recording times.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingInterval {
    /// Constant gap between consecutive stamps.
    Uniform(f64),
    /// One gap per consecutive pair (length = times - 1).
    PerGap(Vec<f64>),
}

impl SamplingInterval {
    /// Derive from a strictly increasing time vector; collapses to `Uniform`
    /// when all gaps agree to 1e-9 relative.
    pub fn from_times(times: &[f64]) -> Self {
        if times.len() < 2 {
            return SamplingInterval::Uniform(1.0);
        }
        let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let first = gaps[0];
        if gaps.iter().all(|g| (g - first).abs() <= 1e-9 * first.abs().max(1.0)) {
            SamplingInterval::Uniform(first)
        } else {
            SamplingInterval::PerGap(gaps)
        }
    }

    /// Largest gap (the censoring width a single waiting time can hide in).
    pub fn max_gap(&self) -> f64 {
        match self {
            SamplingInterval::Uniform(g) => *g,
            SamplingInterval::PerGap(gaps) => gaps.iter().fold(0.0f64, |m, &g| m.max(g)),
        }
    }
}

/// Observations `values[site][time]` with site coordinates and time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    sites: Vec<Vec<f64>>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    sampling_interval: SamplingInterval,
}

impl Panel {
    /// Validates: strictly increasing times, finite values, consistent shapes.
    pub fn new(sites: Vec<Vec<f64>>, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("panel needs at least one site"));
        }
        if times.is_empty() {
            return Err(Error::invalid("panel needs at least one time stamp"));
        }
        let d = sites[0].len();
        if d == 0 || sites.iter().any(|s| s.len() != d) {
            return Err(Error::invalid("site coordinates have inconsistent dimensions"));
        }
        for (j, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "times must be strictly increasing; violation at index {}",
                    j + 1
                )));
            }
        }
        if values.len() != sites.len() {
            return Err(Error::invalid("one value row per site required"));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != times.len() {
                return Err(Error::invalid(format!(
                    "value row {} has {} entries for {} times",
                    i,
                    row.len(),
                    times.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite value at site {i}, time index {j}"
                )));
            }
        }
        let sampling_interval = SamplingInterval::from_times(&times);
        Ok(Self { sites, times, values, sampling_interval })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn sites(&self) -> &[Vec<f64>] {
        &self.sites
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn series(&self, site: usize) -> &[f64] {
        &self.values[site]
    }

    pub fn sampling_interval(&self) -> &SamplingInterval {
        &self.sampling_interval
    }

    /// Replace per-site series, keeping sites/times (shape checked).
    pub fn with_values(&self, values: Vec<Vec<f64>>) -> Result<Self> {
        Panel::new(self.sites.clone(), self.times.clone(), values)
    }
}
