//! Small numeric helpers: the standard normal CDF and compensated summation.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

/// Standard normal CDF via the complementary error function.
///
/// `normal_cdf(x) = erfc(-x / sqrt(2)) / 2`, accurate to a few ulp across the
/// full double range; the right tail underflows to 0 near x = -39.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Neumaier-compensated accumulator.
///
/// Running sums of Monte Carlo weights must not depend on how the stream is
/// chunked beyond ~1e-12 relative; plain f64 addition does not guarantee that
/// for long streams.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a slice.
pub fn sum_compensated(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Mean and standard error of a sample, both compensated.
///
/// Returns `(mean, se)` with `se = sd / sqrt(n)`; `se = 0` for n < 2.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum_compensated(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let mut sq = CompensatedSum::new();
    for &v in values {
        let d = v - mean;
        sq.add(d * d);
    }
    let var = sq.value() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pearson correlation of two equal-length samples.
///
/// Returns `None` when either series has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return None;
    }
    let ma = sum_compensated(a) / n as f64;
    let mb = sum_compensated(b) / n as f64;
    let (mut saa, mut sbb, mut sab) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for i in 0..n {
        let da = a[i] - ma;
        let db = b[i] - mb;
        saa.add(da * da);
        sbb.add(db * db);
        sab.add(da * db);
    }
    let (vaa, vbb) = (saa.value(), sbb.value());
    if vaa <= 0.0 || vbb <= 0.0 {
        return None;
    }
    Some(sab.value() / (vaa * vbb).sqrt())
}

/// Order-statistic quantile: sorted value at 1-based index `ceil(p * n)`.
///
/// `values` must already be sorted ascending and nonempty; `p` in (0, 1).
pub(crate) fn order_statistic(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let k = (p * n as f64).ceil() as usize;
    sorted[k.clamp(1, n) - 1]
}

/// Empirical survival function of `sample` evaluated at each point of `grid`.
pub fn empirical_survival(sample: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = sample.len().max(1) as f64;
    let mut sorted: Vec<f64> = sample.to_vec();
    sorted.sort_unstable_by(|x, y| x.total_cmp(y));
    grid.iter()
        .map(|&t| {
            // count of values strictly greater than t
            let idx = sorted.partition_point(|&v| v <= t);
            (sorted.len() - idx) as f64 / n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        // Reference values to 15 digits (Abramowitz & Stegun / mpmath).
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.0) - 0.841344746068543).abs() < 1e-14);
        assert!((normal_cdf(-1.0) - 0.158655253931457).abs() < 1e-14);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-13);
        assert!((normal_cdf(-8.0) - 6.22096057427178e-16).abs() < 1e-27);
    }

    #[test]
    fn normal_cdf_symmetry() {
        for i in 0..200 {
            let x = -10.0 + 0.1 * i as f64;
            let s = normal_cdf(x) + normal_cdf(-x);
            assert!((s - 1.0).abs() < 1e-14, "x={x} sum={s}");
        }
    }

    #[test]
    fn compensated_sum_is_chunk_stable() {
        // Same stream accumulated in different chunkings agrees to 1e-12
        // relative.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let values: Vec<f64> = (0..100_000).map(|_| next() * 1e6).collect();
        let whole = sum_compensated(&values);
        for chunk in [7usize, 64, 1024, 9999] {
            let mut outer = CompensatedSum::new();
            for block in values.chunks(chunk) {
                outer.add(sum_compensated(block));
            }
            let rel = (outer.value() - whole).abs() / whole.abs().max(1.0);
            assert!(rel < 1e-12, "chunk={chunk} rel={rel}");
        }
    }

    #[test]
    fn pearson_detects_zero_variance() {
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_survival_counts_strict_exceedances() {
        let s = empirical_survival(&[1.0, 2.0, 2.0, 3.0], &[0.0, 2.0, 3.0]);
        assert_eq!(s, alloc::vec![1.0, 0.25, 0.0]);
    }
}
