//! From panels to waiting-time data.
//!
//! Exceedance events are up-crossings: sample `j > 1` exceeds the level while
//! sample `j - 1` does not (strictly above vs. at-or-below, so values exactly
//! at the level count as non-exceedances). Waiting times between a
//! down-crossing and the next up-crossing subtract one grid step on each side
//! because the crossing instants are only known up to the sampling interval;
//! adjacent crossings therefore read as zero, and every observed value is
//! censored to a window of one sampling interval.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::panel::Panel;

/// Which tail the threshold refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailDirection {
    /// Exceedances above the level of the data as given.
    Upper,
    /// The data were negated upstream so that lower-tail events appear as
    /// upper-tail exceedances.
    LowerNegated,
}

/// A per-site threshold, with the quantile it was derived from when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    pub level: f64,
    pub quantile: Option<f64>,
    pub direction: TailDirection,
}

/// What a waiting-time vector refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitKind {
    /// Marginal waits at one site.
    Site(usize),
    /// Waits from each first exceedance at `anchor` to the nearest first
    /// exceedance at `reference`.
    Pair { anchor: usize, reference: usize },
}

/// Censored waiting-time observations.
///
/// Each value is known only up to `[kappa, kappa + censoring_interval]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingTimes {
    pub kind: WaitKind,
    pub values: Vec<f64>,
    pub censoring_interval: f64,
}

impl WaitingTimes {
    pub fn new(kind: WaitKind, values: Vec<f64>, censoring_interval: f64) -> Result<Self> {
        if !(censoring_interval > 0.0) {
            return Err(Error::invalid("censoring interval must be positive"));
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::invalid("waiting times must be nonnegative"));
        }
        Ok(Self { kind, values, censoring_interval })
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn with_kind(mut self, kind: WaitKind) -> Self {
        self.kind = kind;
        self
    }
}

/// Order-statistic quantile: the sorted value at 1-based index `ceil(p N)`,
/// ties kept.
pub fn empirical_quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::insufficient("quantile of an empty sample"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile order must lie in (0, 1), got {p}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    Ok(math::order_statistic(&sorted, p))
}

/// Target margins for [`transform_margins`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginTarget {
    /// `-1 / log(U)` with `U = rank / (N + 1)`.
    Frechet,
    /// `-log(1 - U)`.
    Exponential,
}

/// Rank-transform every site to the target margins.
///
/// Ties share their average rank, so the map is order-preserving per site and
/// exceedance-time sets of corresponding quantiles are unchanged. Constant
/// series are rejected (all ranks tied).
pub fn transform_margins(panel: &Panel, target: MarginTarget) -> Result<Panel> {
    let n_times = panel.n_times();
    let mut out = Vec::with_capacity(panel.n_sites());
    for site in 0..panel.n_sites() {
        let series = panel.series(site);
        let first = series[0];
        if series.iter().all(|&v| v == first) {
            return Err(Error::numerical(format!(
                "site {site} is constant; margins are undefined"
            )));
        }
        let ranks = average_ranks(series);
        let transformed = ranks
            .iter()
            .map(|&r| {
                let u = r / (n_times as f64 + 1.0);
                match target {
                    MarginTarget::Frechet => -1.0 / u.ln(),
                    MarginTarget::Exponential => -(1.0 - u).ln(),
                }
            })
            .collect();
        out.push(transformed);
    }
    panel.with_values(out)
}

/// 1-based average ranks (ties share the mean of their positions).
fn average_ranks(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| series[a].total_cmp(&series[b]));
    let mut ranks = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && series[order[j + 1]] == series[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pick the most extreme candidate quantile such that every site yields at
/// least `min_count` first-exceedance events.
///
/// `candidates` must be strictly decreasing in extremity (e.g. `[0.999,
/// 0.99]`).
pub fn select_thresholds(
    panel: &Panel,
    candidates: &[f64],
    min_count: usize,
) -> Result<Vec<ThresholdSpec>> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate quantiles supplied"));
    }
    if candidates.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("candidate quantiles must be strictly decreasing"));
    }
    let mut last_counts: Vec<usize> = Vec::new();
    for &p in candidates {
        let mut specs = Vec::with_capacity(panel.n_sites());
        last_counts.clear();
        let mut ok = true;
        for site in 0..panel.n_sites() {
            let level = empirical_quantile(panel.series(site), p)?;
            let waits = marginal_waits(panel.series(site), panel.times(), level)?;
            last_counts.push(waits.count());
            if waits.count() < min_count {
                ok = false;
            }
            specs.push(ThresholdSpec {
                level,
                quantile: Some(p),
                direction: TailDirection::Upper,
            });
        }
        if ok {
            return Ok(specs);
        }
    }
    Err(Error::insufficient(format!(
        "no candidate quantile yields {min_count} first exceedances at every site; counts at the least extreme candidate: {last_counts:?}"
    )))
}

/// Marginal waiting times between a down-crossing and the next up-crossing.
///
/// Up-crossing indices pair with the immediately preceding down-crossing
/// after trimming a leading up-crossing with no earlier down-crossing and a
/// trailing down-crossing with no later up-crossing. Each wait subtracts one
/// grid step on both sides (crossings are located only up to the sampling
/// interval) and floors at zero.
pub fn marginal_waits(series: &[f64], times: &[f64], level: f64) -> Result<WaitingTimes> {
    if series.len() != times.len() {
        return Err(Error::invalid(format!(
            "series has {} samples for {} times",
            series.len(),
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times must be strictly increasing"));
    }
    let censoring = max_gap(times);
    let mut up: Vec<usize> = Vec::new();
    let mut down: Vec<usize> = Vec::new();
    for j in 1..series.len() {
        if series[j] > level && series[j - 1] <= level {
            up.push(j);
        } else if series[j] <= level && series[j - 1] > level {
            down.push(j);
        }
    }
    // an up-crossing before any down-crossing has no event to wait from
    if let Some(&f0) = up.first() {
        if down.first().is_none_or(|&l0| f0 <= l0) {
            up.remove(0);
        }
    }
    // a down-crossing after the last up-crossing never resolves
    if let Some(&l_last) = down.last() {
        if up.last().is_none_or(|&f_last| l_last >= f_last) {
            down.pop();
        }
    }
    debug_assert_eq!(up.len(), down.len());
    let n = up.len().min(down.len());
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let (f, l) = (up[k], down[k]);
            let raw = (times[f] - times[l]) - ((times[l + 1] - times[l]) + (times[f] - times[f - 1]));
            raw.max(0.0)
        })
        .collect();
    WaitingTimes::new(WaitKind::Site(0), values, censoring)
}

/// Waiting times from each first exceedance at the anchor site to the nearest
/// (in absolute gap, past or future) first exceedance at the reference site.
///
/// Errors when the reference site has no first exceedances. Not symmetric in
/// the two sites; compute both directions and pool when an unordered pair is
/// wanted.
pub fn pairwise_waits(
    series_anchor: &[f64],
    series_reference: &[f64],
    times_anchor: &[f64],
    times_reference: &[f64],
    level_anchor: f64,
    level_reference: f64,
) -> Result<WaitingTimes> {
    let anchor = first_exceedance_times(series_anchor, times_anchor, level_anchor)?;
    let reference = first_exceedance_times(series_reference, times_reference, level_reference)?;
    if reference.is_empty() {
        return Err(Error::insufficient(
            "reference site has no first exceedances to measure against",
        ));
    }
    let censoring = max_gap(times_anchor).max(max_gap(times_reference));
    let values: Vec<f64> = anchor
        .iter()
        .map(|&t| {
            // reference is sorted; the nearest event brackets the insertion point
            let idx = reference.partition_point(|&r| r < t);
            let mut best = f64::INFINITY;
            if idx < reference.len() {
                best = best.min((reference[idx] - t).abs());
            }
            if idx > 0 {
                best = best.min((t - reference[idx - 1]).abs());
            }
            best
        })
        .collect();
    WaitingTimes::new(WaitKind::Pair { anchor: 0, reference: 1 }, values, censoring)
}

/// Times of first exceedances (up-crossings) of `level`.
pub fn first_exceedance_times(series: &[f64], times: &[f64], level: f64) -> Result<Vec<f64>> {
    if series.len() != times.len() {
        return Err(Error::invalid(format!(
            "series has {} samples for {} times",
            series.len(),
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times must be strictly increasing"));
    }
    Ok((1..series.len())
        .filter(|&j| series[j] > level && series[j - 1] <= level)
        .map(|j| times[j])
        .collect())
}

fn max_gap(times: &[f64]) -> f64 {
    times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Pre-thresholding transform of raw data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessMode {
    Identity,
    /// Per-site `-log(w_t / w_{t-1})`, dropping the first stamp; requires
    /// strictly positive values.
    NegLogReturn,
}

/// Apply the pre-thresholding transform.
pub fn preprocess(panel: &Panel, mode: PreprocessMode) -> Result<Panel> {
    match mode {
        PreprocessMode::Identity => Ok(panel.clone()),
        PreprocessMode::NegLogReturn => {
            if panel.n_times() < 2 {
                return Err(Error::insufficient("returns need at least two time stamps"));
            }
            for site in 0..panel.n_sites() {
                if let Some(j) = panel.series(site).iter().position(|&v| !(v > 0.0)) {
                    return Err(Error::invalid(format!(
                        "negated log returns need positive values; site {site}, time index {j}"
                    )));
                }
            }
            let times = panel.times()[1..].to_vec();
            let values: Vec<Vec<f64>> = (0..panel.n_sites())
                .map(|site| {
                    let s = panel.series(site);
                    (1..s.len()).map(|j| -(s[j] / s[j - 1]).ln()).collect()
                })
                .collect();
            Panel::new(panel.sites().to_vec(), times, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_grid(n: usize) -> Vec<f64> {
        (1..=n).map(|j| j as f64).collect()
    }

    #[test]
    fn empirical_quantile_order_statistics() {
        let v = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(empirical_quantile(&v, 0.5).unwrap(), 3.0);
        let big: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(empirical_quantile(&big, 0.99).unwrap(), 99.0);
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&v, 0.0).is_err());
        assert!(empirical_quantile(&v, 1.0).is_err());
    }

    #[test]
    fn empirical_quantile_matches_brute_force_on_random_sets() {
        let mut state = 0xabcdef12u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..1000 {
            let n = 1 + (next() * 40.0) as usize;
            let values: Vec<f64> = (0..n).map(|_| (next() * 10.0).round()).collect();
            let p = 0.01 + 0.98 * next();
            // brute force: full sort, 1-based ceil(p n) order statistic
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let k = ((p * n as f64).ceil() as usize).clamp(1, n);
            let expected = sorted[k - 1];
            assert_eq!(empirical_quantile(&values, p).unwrap(), expected, "trial {trial}");
        }
    }

    #[test]
    fn marginal_waits_hand_traced_fixture() {
        // w = {0,5,0,0,5} on t = 1..5, level 1: one wait of exactly 0
        let w = vec![0.0, 5.0, 0.0, 0.0, 5.0];
        let out = marginal_waits(&w, &unit_grid(5), 1.0).unwrap();
        assert_eq!(out.values, vec![0.0]);
        assert_eq!(out.censoring_interval, 1.0);
    }

    #[test]
    fn marginal_waits_gap_of_g_steps_reads_g_minus_two() {
        // down-crossing, then g quiet steps, then up-crossing on a unit grid
        for g in 2usize..8 {
            let mut w = vec![0.0, 5.0];
            w.extend(std::iter::repeat_n(0.0, g));
            w.push(5.0);
            w.push(0.0);
            let times = unit_grid(w.len());
            let out = marginal_waits(&w, &times, 1.0).unwrap();
            assert_eq!(out.values, vec![(g as f64) - 2.0], "g = {g}");
        }
    }

    #[test]
    fn marginal_waits_floors_on_irregular_grids() {
        // widening gaps put the crossing uncertainty above the raw spacing,
        // so the subtraction goes negative and reads as zero
        let times = vec![0.0, 1.0, 5.0, 6.0, 12.0];
        let w = vec![0.0, 5.0, 0.0, 5.0, 0.0];
        let out = marginal_waits(&w, &times, 1.0).unwrap();
        // down at index 2, up at index 3: (6-5) - ((6-5) + (6-5)) = -1 -> 0
        assert_eq!(out.values, vec![0.0]);
        assert_eq!(out.censoring_interval, 6.0); // widest gap
    }

    #[test]
    fn marginal_waits_never_exceeding_is_empty() {
        let w = vec![0.1, 0.2, 0.3];
        let out = marginal_waits(&w, &unit_grid(3), 1.0).unwrap();
        assert!(out.values.is_empty());
    }

    #[test]
    fn marginal_waits_equal_values_do_not_cross() {
        // values exactly at the level are non-exceedances
        let w = vec![0.0, 1.0, 2.0, 1.0, 2.0];
        let out = marginal_waits(&w, &unit_grid(5), 1.0).unwrap();
        // up-crossings at j=3 (0-based 2) and j=5; down at j=4
        assert_eq!(out.values.len(), 1);
    }

    #[test]
    fn marginal_waits_initial_exceedance_is_ignored() {
        // first sample already above the level: no index-1 event
        let w = vec![5.0, 0.0, 5.0, 0.0];
        let out = marginal_waits(&w, &unit_grid(4), 1.0).unwrap();
        // F = {3}, L = {2, 4}; trailing down-crossing trimmed
        assert_eq!(out.values.len(), 1);
        assert_eq!(out.values[0], 0.0);
    }

    #[test]
    fn marginal_waits_counts_and_nonnegativity_on_random_series() {
        let mut state = 77u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let n = 5 + (next() * 200.0) as usize;
            let w: Vec<f64> = (0..n).map(|_| next()).collect();
            let times = unit_grid(n);
            let out = marginal_waits(&w, &times, 0.8).unwrap();
            assert!(out.values.iter().all(|&k| k >= 0.0));
            // count equals the trimmed up-crossing count
            let ups = (1..n).filter(|&j| w[j] > 0.8 && w[j - 1] <= 0.8).count();
            assert!(out.values.len() == ups || out.values.len() + 1 == ups);
        }
    }

    #[test]
    fn marginal_waits_time_reversal_symmetry() {
        // reversal swaps up- and down-crossings but preserves the gap multiset
        let w = vec![0.0, 3.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0];
        let times = unit_grid(w.len());
        let forward = marginal_waits(&w, &times, 1.0).unwrap();
        let reversed: Vec<f64> = w.iter().rev().copied().collect();
        let backward = marginal_waits(&reversed, &times, 1.0).unwrap();
        let mut a = forward.values.clone();
        let mut b = backward.values.clone();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, vec![0.0, 2.0]);
    }

    #[test]
    fn pairwise_waits_hand_traced_fixtures() {
        // anchor first-exceedances at t=10; reference at 7 and 12 -> gap 2
        let mk = |ts: &[f64], horizon: usize| {
            // series that up-crosses level 1 exactly at the given times
            let times = unit_grid(horizon);
            let mut s = vec![0.0; horizon];
            for &t in ts {
                s[(t as usize) - 1] = 5.0;
            }
            (s, times)
        };
        let (sa, ta) = mk(&[10.0], 14);
        let (sr, tr) = mk(&[7.0, 12.0], 14);
        let out = pairwise_waits(&sa, &sr, &ta, &tr, 1.0, 1.0).unwrap();
        assert_eq!(out.values, vec![2.0]);

        // identical series and thresholds: all gaps zero
        let out = pairwise_waits(&sr, &sr, &tr, &tr, 1.0, 1.0).unwrap();
        assert_eq!(out.values, vec![0.0, 0.0]);

        // anchors at 1.. wait: F anchored at {2, 100}, reference {50}
        let (sa, ta) = mk(&[2.0, 100.0], 110);
        let (sr, tr) = mk(&[50.0], 110);
        let out = pairwise_waits(&sa, &sr, &ta, &tr, 1.0, 1.0).unwrap();
        assert_eq!(out.values, vec![48.0, 50.0]);
    }

    #[test]
    fn pairwise_waits_requires_reference_events() {
        let w = vec![0.0, 5.0, 0.0];
        let quiet = vec![0.0, 0.0, 0.0];
        let t = unit_grid(3);
        assert!(pairwise_waits(&w, &quiet, &t, &t, 1.0, 1.0).is_err());
    }

    #[test]
    fn pairwise_waits_is_direction_sensitive() {
        // anchor 1 has events at 10 and 90; anchor 2 only at 50:
        // (1 -> 2) = {40, 40}, (2 -> 1) = {40}
        let times = unit_grid(100);
        let mut s1 = vec![0.0; 100];
        s1[9] = 5.0;
        s1[89] = 5.0;
        let mut s2 = vec![0.0; 100];
        s2[49] = 5.0;
        let fwd = pairwise_waits(&s1, &s2, &times, &times, 1.0, 1.0).unwrap();
        let bwd = pairwise_waits(&s2, &s1, &times, &times, 1.0, 1.0).unwrap();
        assert_eq!(fwd.values, vec![40.0, 40.0]);
        assert_eq!(bwd.values, vec![40.0]);
        assert_ne!(fwd.values, bwd.values);
    }

    #[test]
    fn transform_margins_hand_values_and_monotonicity() {
        let panel = Panel::new(
            vec![vec![0.0]],
            vec![1.0, 2.0, 3.0],
            vec![vec![5.0, 1.0, 9.0]],
        )
        .unwrap();
        let out = transform_margins(&panel, MarginTarget::Exponential).unwrap();
        let expect = [
            -(1.0 - 2.0 / 4.0f64).ln(),
            -(1.0 - 1.0 / 4.0f64).ln(),
            -(1.0 - 3.0 / 4.0f64).ln(),
        ];
        for (got, want) in out.series(0).iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        // strictly increasing input stays strictly increasing
        let panel = Panel::new(
            vec![vec![0.0]],
            (1..=6).map(|j| j as f64).collect(),
            vec![(1..=6).map(|j| j as f64 * 2.0).collect()],
        )
        .unwrap();
        let out = transform_margins(&panel, MarginTarget::Frechet).unwrap();
        assert!(out.series(0).windows(2).all(|w| w[1] > w[0]));
        // constant series rejected
        let flat = Panel::new(vec![vec![0.0]], vec![1.0, 2.0], vec![vec![3.0, 3.0]]).unwrap();
        assert!(transform_margins(&flat, MarginTarget::Frechet).is_err());
    }

    #[test]
    fn transform_margins_fits_target_distribution() {
        // DKW band check of the Fréchet target on one site
        let mut state = 99u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 4000;
        let values: Vec<f64> = (0..n).map(|_| next() * next() + next()).collect();
        let panel = Panel::new(
            vec![vec![0.0]],
            (1..=n).map(|j| j as f64).collect(),
            vec![values],
        )
        .unwrap();
        let out = transform_margins(&panel, MarginTarget::Frechet).unwrap();
        let mut sorted = out.series(0).to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // DKW: sup |F_hat - F| <= sqrt(ln(2/alpha) / (2n)) with alpha = 1e-6
        let band = ((2.0f64 / 1e-6).ln() / (2.0 * n as f64)).sqrt();
        for (i, &v) in sorted.iter().enumerate() {
            let f_hat = (i + 1) as f64 / n as f64;
            let f = (-1.0 / v).exp();
            assert!((f_hat - f).abs() <= band + 1.0 / n as f64, "i={i}");
        }
    }

    #[test]
    fn transform_margins_preserves_up_crossing_sets() {
        let mut state = 4242u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 500;
        let values: Vec<f64> = (0..n).map(|_| next()).collect();
        let times: Vec<f64> = (1..=n).map(|j| j as f64).collect();
        let panel = Panel::new(vec![vec![0.0]], times.clone(), vec![values.clone()]).unwrap();
        let out = transform_margins(&panel, MarginTarget::Frechet).unwrap();
        for &p in &[0.8, 0.9, 0.95] {
            let before = first_exceedance_times(
                &values,
                &times,
                empirical_quantile(&values, p).unwrap(),
            )
            .unwrap();
            let after = first_exceedance_times(
                out.series(0),
                &times,
                empirical_quantile(out.series(0), p).unwrap(),
            )
            .unwrap();
            assert_eq!(before, after, "quantile {p}");
        }
    }

    #[test]
    fn select_thresholds_picks_most_extreme_feasible() {
        let mut state = 123u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 12_000;
        let w: Vec<f64> = (0..n).map(|_| next()).collect();
        let times: Vec<f64> = (1..=n).map(|j| j as f64).collect();
        let panel = Panel::new(vec![vec![0.0]], times, vec![w.clone()]).unwrap();

        // every candidate feasible: the most extreme wins
        let specs = select_thresholds(&panel, &[0.99, 0.9], 100).unwrap();
        assert_eq!(specs[0].quantile, Some(0.99));
        assert_eq!(specs[0].level, empirical_quantile(&w, 0.99).unwrap());

        // boundary of the rule: one event short at the extreme candidate
        let count_at = |p: f64| {
            let level = empirical_quantile(&w, p).unwrap();
            marginal_waits(&w, panel.times(), level).unwrap().count()
        };
        let (c_hi, c_lo) = (count_at(0.999), count_at(0.99));
        assert!(c_hi < c_lo);
        let specs = select_thresholds(&panel, &[0.999, 0.99], c_hi + 1).unwrap();
        assert_eq!(specs[0].quantile, Some(0.99));

        // nothing feasible: the error reports per-site counts
        let err = select_thresholds(&panel, &[0.999, 0.99], c_lo + 1).unwrap_err();
        match err {
            Error::InsufficientData(msg) => assert!(msg.contains("counts")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn preprocess_modes() {
        let panel = Panel::new(
            vec![vec![0.0]],
            vec![1.0, 2.0],
            vec![vec![100.0, 110.0]],
        )
        .unwrap();
        let out = preprocess(&panel, PreprocessMode::NegLogReturn).unwrap();
        assert_eq!(out.n_times(), 1);
        assert!((out.series(0)[0] - (-(1.1f64).ln())).abs() < 1e-12);
        assert!((out.series(0)[0] + 0.09531017980432486).abs() < 1e-12);

        // constant series: all-zero returns
        let flat = Panel::new(vec![vec![0.0]], vec![1.0, 2.0, 3.0], vec![vec![4.0, 4.0, 4.0]])
            .unwrap();
        let out = preprocess(&flat, PreprocessMode::NegLogReturn).unwrap();
        assert!(out.series(0).iter().all(|&v| v == 0.0));

        // identity is bit-identical
        let same = preprocess(&flat, PreprocessMode::Identity).unwrap();
        assert_eq!(same, flat);

        // nonpositive prices rejected
        let bad = Panel::new(vec![vec![0.0]], vec![1.0, 2.0], vec![vec![1.0, 0.0]]).unwrap();
        assert!(preprocess(&bad, PreprocessMode::NegLogReturn).is_err());
    }

    #[test]
    fn electrophysiology_scale_panel_admits_extreme_quantile() {
        // ~2e6 samples of a noisy series: 0.998 yields well over 100 events
        let mut state = 31u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 2_000_000;
        let w: Vec<f64> = (0..n).map(|_| next()).collect();
        let times: Vec<f64> = (1..=n).map(|j| j as f64).collect();
        let panel = Panel::new(vec![vec![0.0]], times, vec![w]).unwrap();
        let specs = select_thresholds(&panel, &[0.998, 0.99], 100).unwrap();
        assert_eq!(specs[0].quantile, Some(0.998));
    }
}
