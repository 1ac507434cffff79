//! Time-tag coincidence matching.

use super::CountingError;

fn check_sorted(times: &[f64]) -> Result<(), CountingError> {
    match times.windows(2).position(|w| !(w[0] <= w[1])) {
        Some(k) => Err(CountingError::SortOrderViolation { index: k + 1 }),
        None => Ok(()),
    }
}

/// Counts overlapping pulse pairs between two detectors.
///
/// Every event opens a pulse `[t, t + pulse_width]`; an `a` pulse and a `b`
/// pulse overlap when `|t_a − t_b| ≤ pulse_width` (closed intervals, so
/// touching pulses count). Matching is a linear two-stream merge that pairs
/// each `a` event with the earliest still-unmatched overlapping `b` event;
/// every event is used at most once. For independent Poisson streams the
/// expected count per second is `r_a · r_b · 2·pulse_width`.
pub fn window_coincidence(a: &[f64], b: &[f64], pulse_width: f64) -> Result<u64, CountingError> {
    check_sorted(a)?;
    check_sorted(b)?;
    let (mut i, mut j, mut count) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        if b[j] < a[i] - pulse_width {
            j += 1;
        } else if b[j] > a[i] + pulse_width {
            i += 1;
        } else {
            count += 1;
            i += 1;
            j += 1;
        }
    }
    Ok(count)
}

/// Trigger-gated matching: trigger `k` opens the gate `[t_k, t_k + gate]` and
/// is flagged when an event falls inside it. Events are consumed greedily by
/// the first gate that contains them.
pub fn gate_hits(triggers: &[f64], events: &[f64], gate: f64) -> Result<Vec<bool>, CountingError> {
    check_sorted(triggers)?;
    check_sorted(events)?;
    let mut hits = Vec::with_capacity(triggers.len());
    let mut j = 0;
    for &t in triggers {
        while j < events.len() && events[j] < t {
            j += 1;
        }
        if j < events.len() && events[j] <= t + gate {
            hits.push(true);
            j += 1;
        } else {
            hits.push(false);
        }
    }
    Ok(hits)
}
