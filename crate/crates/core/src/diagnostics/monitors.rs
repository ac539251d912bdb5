//! Plateau test for running integrals and norm histories.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauReport {
    /// Growth rate over the last 20% of the time window.
    pub late_rate: f64,
    /// Growth rate over the whole window.
    pub mean_rate: f64,
    pub plateaued: bool,
}

fn value_at(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&s| s < t);
    if k == 0 {
        return values[0];
    }
    if k >= times.len() {
        return values[values.len() - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
    values[k - 1] + w * (values[k] - values[k - 1])
}

/// Compares the growth rate over the final 20% of the window with the mean
/// rate; a plateau is a late rate below 10% of the mean (or no growth at
/// all). Needs at least two samples spanning a positive time.
pub fn plateau(times: &[f64], values: &[f64]) -> Option<PlateauReport> {
    if times.len() < 2 || times.len() != values.len() {
        return None;
    }
    let (t0, t1) = (times[0], times[times.len() - 1]);
    if !(t1 > t0) {
        return None;
    }
    let span = t1 - t0;
    let t_late = t1 - 0.2 * span;
    let end = values[values.len() - 1];
    let mean_rate = (end - values[0]) / span;
    let late_rate = (end - value_at(times, values, t_late)) / (0.2 * span);
    let plateaued = if mean_rate > 0.0 { late_rate < 0.1 * mean_rate } else { late_rate <= 0.0 };
    Some(PlateauReport { late_rate, mean_rate, plateaued })
}

/// [`plateau`] applied to the running maximum of a norm history.
pub fn plateau_of_running_max(times: &[f64], values: &[f64]) -> Option<PlateauReport> {
    let mut best = f64::NEG_INFINITY;
    let running: Vec<f64> = values
        .iter()
        .map(|&v| {
            best = best.max(v);
            best
        })
        .collect();
    plateau(times, &running)
}
