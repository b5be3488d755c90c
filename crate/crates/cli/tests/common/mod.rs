//! Shared helpers for the acceptance suite: exact first-exceedance times of
//! a sampled field (closed form per storm), rank correlation, and synthetic
//! censored mixtures.

use rand::Rng;
use tailwait_core::exceedance::{WaitKind, WaitingTimes};
use tailwait_core::sim::SupportPoint;
use tailwait_core::Seed;

/// First time in `[0, horizon)` at which this storm alone pushes the field
/// at `x` strictly above `level`; `None` when it never does.
///
/// The squared shape-metric offset is quadratic in time, so the exceedance
/// window is an interval intersected with the storm's live span. Two-
/// dimensional attributes only (everything in the suite is planar), kept
/// allocation-free because the simulations below visit ~1e8 storms.
pub fn point_first_crossing(
    point: &SupportPoint,
    x: &[f64],
    level: f64,
    horizon: f64,
) -> Option<f64> {
    let shape = point.attribute.shape();
    debug_assert_eq!(shape.dim(), 2);
    let m = shape.rows();
    let (s00, s01, s11) = (m[0], m[1], m[3]);
    let det = s00 * s11 - s01 * s01;
    if det <= 0.0 {
        return None;
    }
    let norm = det.sqrt() / (2.0 * std::f64::consts::PI);
    let gain = point.magnitude * norm / level;
    if gain <= 1.0 {
        return None;
    }
    let live_lo = point.birth_time.max(0.0);
    let live_hi = (point.birth_time + point.lifetime).min(horizon);
    if live_lo >= live_hi {
        return None;
    }
    // exceedance while offset' shape offset < c2
    let c2 = 2.0 * gain.ln();
    let r0 = x[0] - point.birth_location[0];
    let r1 = x[1] - point.birth_location[1];
    let v = point.attribute.velocity();
    let (v0, v1) = (v[0], v[1]);
    let a = s00 * v0 * v0 + 2.0 * s01 * v0 * v1 + s11 * v1 * v1;
    let c = s00 * r0 * r0 + 2.0 * s01 * r0 * r1 + s11 * r1 * r1;
    if a <= 0.0 {
        // stationary: constant offset
        return (c < c2).then_some(live_lo);
    }
    let b = v0 * (s00 * r0 + s01 * r1) + v1 * (s01 * r0 + s11 * r1);
    // a s^2 - 2 b s + (c - c2) < 0 in elapsed time s since birth
    let disc = b * b - a * (c - c2);
    if disc <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let enter = point.birth_time + (b - root) / a;
    let exit = point.birth_time + (b + root) / a;
    let start = enter.max(live_lo);
    (start < exit.min(live_hi)).then_some(start)
}

/// First exceedance time of the whole field at `x`, if any.
pub fn first_exceedance(
    points: &[SupportPoint],
    x: &[f64],
    level: f64,
    horizon: f64,
) -> Option<f64> {
    points
        .iter()
        .filter_map(|p| point_first_crossing(p, x, level, horizon))
        .min_by(|s, t| s.total_cmp(t))
}

/// Allocation-free field evaluation for planar attributes; must agree with
/// the library evaluator (asserted in the suite on sampled replicates).
pub fn field_value_2d(points: &[SupportPoint], x: &[f64], t: f64) -> f64 {
    let mut best = 0.0f64;
    for p in points {
        if t < p.birth_time || t >= p.birth_time + p.lifetime {
            continue;
        }
        let m = p.attribute.shape().rows();
        let (s00, s01, s11) = (m[0], m[1], m[3]);
        let det = s00 * s11 - s01 * s01;
        if det <= 0.0 {
            continue;
        }
        let v = p.attribute.velocity();
        let elapsed = t - p.birth_time;
        let z0 = x[0] - p.birth_location[0] - v[0] * elapsed;
        let z1 = x[1] - p.birth_location[1] - v[1] * elapsed;
        let q = s00 * z0 * z0 + 2.0 * s01 * z0 * z1 + s11 * z1 * z1;
        if q < 1600.0 {
            let val =
                p.magnitude * (det.sqrt() / (2.0 * std::f64::consts::PI) * (-0.5 * q).exp());
            best = best.max(val);
        }
    }
    best
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut out = vec![0.0; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && v[order[j + 1]] == v[order[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &idx in &order[i..=j] {
                out[idx] = avg;
            }
            i = j + 1;
        }
        out
    }
    let (ra, rb) = (ranks(a), ranks(b));
    tailwait_core::math::pearson(&ra, &rb).unwrap_or(0.0)
}

/// Exact mixture draws floored onto an observation grid of width `dt`.
pub fn censored_mixture(
    weights: &[f64],
    rates: &[f64],
    n: usize,
    dt: f64,
    seed: u64,
) -> WaitingTimes {
    let mut rng = Seed(seed).rng();
    let values: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut comp = weights.len() - 1;
            for (j, &w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    comp = j;
                    break;
                }
            }
            if comp == 0 {
                0.0
            } else {
                let exact = -(1.0 - rng.random::<f64>()).ln() / rates[comp - 1];
                (exact / dt).floor() * dt
            }
        })
        .collect();
    WaitingTimes::new(WaitKind::Site(0), values, dt).unwrap()
}

/// Print one pass line for a criterion; panics carry the fail line instead.
pub fn report(criterion: usize, name: &str, detail: &str) {
    println!("[acceptance] criterion {criterion} ({name}): PASS — {detail}");
}
