//! Communication accounting, learning-curve stability and the edge-removal
//! Monte-Carlo study.

mod comm;
mod prop1;
mod stability;

pub use comm::{comm_cost, comm_cost_with, CommReport};
pub use prop1::{prop1_experiment, regret_bound, Prop1Bin, Prop1Config, Prop1Report, Prop1Row};
pub use stability::{smooth, stability_distance, SmoothingMethod, SmoothingParams, StabilityReport};

/// Linear-interpolation quantile of an ascending slice (`p` in `[0, 1]`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Median, 25th and 75th percentile of unsorted values.
pub fn median_iqr(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile(&v, 0.5), quantile(&v, 0.25), quantile(&v, 0.75))
}
