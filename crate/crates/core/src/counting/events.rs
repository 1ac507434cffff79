//! Poisson arrival-time helpers.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

pub(crate) fn poisson_count(rng: &mut impl Rng, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// `n` arrival times uniform on [start, end), sorted.
pub(crate) fn uniform_times(rng: &mut impl Rng, n: u64, start: f64, end: f64) -> Vec<f64> {
    let mut times: Vec<f64> = (0..n).map(|_| start + (end - start) * rng.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);
    times
}

/// Homogeneous Poisson process of `rate` on [0, duration).
pub(crate) fn poisson_times(rng: &mut impl Rng, rate: f64, duration: f64) -> Vec<f64> {
    let n = poisson_count(rng, rate * duration);
    uniform_times(rng, n, 0.0, duration)
}

pub(crate) fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Poisson background of `rate` on [0, duration), materialised only inside
/// the union of the windows `[t, t + gate]` opened by `triggers`.
///
/// Returns the sorted in-window arrival times and the total number of
/// arrivals over the whole duration. Counts in disjoint intervals of a
/// Poisson process are independent, so this is exact for gate matching.
pub(crate) fn background_in_gates(
    rng: &mut impl Rng,
    triggers: &[f64],
    gate: f64,
    rate: f64,
    duration: f64,
) -> (Vec<f64>, u64) {
    if !(rate > 0.0) || duration <= 0.0 {
        return (Vec::new(), 0);
    }
    let mut inside = Vec::new();
    let mut covered = 0.0;
    let mut k = 0;
    while k < triggers.len() {
        let start = triggers[k];
        let mut end = start + gate;
        k += 1;
        while k < triggers.len() && triggers[k] <= end {
            end = end.max(triggers[k] + gate);
            k += 1;
        }
        let (start, end) = (start.max(0.0), end.min(duration));
        if end <= start {
            continue;
        }
        covered += end - start;
        let n = poisson_count(rng, rate * (end - start));
        inside.extend(uniform_times(rng, n, start, end));
    }
    let outside = poisson_count(rng, rate * (duration - covered).max(0.0));
    let total = inside.len() as u64 + outside;
    (inside, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::stream_rng;

    #[test]
    fn merge_keeps_order() {
        assert_eq!(merge_sorted(&[1.0, 3.0], &[0.5, 2.0, 4.0]), vec![0.5, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn gated_background_counts() {
        let mut rng = stream_rng(5, 0);
        let triggers: Vec<f64> = (0..1000).map(|k| k as f64 * 1e-3).collect();
        let (inside, total) = background_in_gates(&mut rng, &triggers, 1e-4, 2e4, 1.0);
        // expected in-gate: 2e4 · 1000 · 1e-4 = 2000
        assert!((inside.len() as f64 - 2000.0).abs() < 200.0);
        assert!((total as f64 - 2e4).abs() < 600.0);
        assert!(inside.windows(2).all(|w| w[0] <= w[1]));
        for t in &inside {
            let k = (t / 1e-3).floor();
            assert!(t - k * 1e-3 <= 1e-4 + 1e-15);
        }
    }
}
