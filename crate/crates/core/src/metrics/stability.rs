use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingMethod {
    Kalman,
    Ema,
    Dema,
    Midpoint,
}

impl SmoothingMethod {
    pub const ALL: [SmoothingMethod; 4] =
        [SmoothingMethod::Kalman, SmoothingMethod::Ema, SmoothingMethod::Dema, SmoothingMethod::Midpoint];
}

impl FromStr for SmoothingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kalman" => SmoothingMethod::Kalman,
            "ema" => SmoothingMethod::Ema,
            "dema" => SmoothingMethod::Dema,
            "midpoint" => SmoothingMethod::Midpoint,
            other => return Err(invalid(format!("unknown smoothing method {other:?}"))),
        })
    }
}

impl fmt::Display for SmoothingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SmoothingMethod::Kalman => "kalman",
            SmoothingMethod::Ema => "ema",
            SmoothingMethod::Dema => "dema",
            SmoothingMethod::Midpoint => "midpoint",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingParams {
    pub kalman_process_var: f64,
    pub kalman_measurement_var: f64,
    /// EMA span; the smoothing factor is `2 / (span + 1)`.
    pub span: f64,
    pub midpoint_window: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams { kalman_process_var: 1e-4, kalman_measurement_var: 1e-1, span: 10.0, midpoint_window: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub method: SmoothingMethod,
    pub distance: f64,
}

fn ema(xs: &[f64], span: f64) -> Vec<f64> {
    let alpha = 2.0 / (span + 1.0);
    let mut out = Vec::with_capacity(xs.len());
    let mut s = xs[0];
    for &x in xs {
        s = if alpha == 1.0 { x } else { s + alpha * (x - s) };
        out.push(s);
    }
    out
}

/// Smoothed copy of `curve`.
///
/// Kalman is a forward local-level filter started at the first sample.
/// Midpoint uses a window of `midpoint_window` samples ending at `t`, shifted
/// forward near the start so it always holds the full width when possible.
pub fn smooth(curve: &[f64], method: SmoothingMethod, params: &SmoothingParams) -> Result<Vec<f64>> {
    if curve.len() < 2 {
        return Err(invalid("curve needs at least two points"));
    }
    if curve.iter().any(|v| !v.is_finite()) {
        return Err(invalid("curve must be finite"));
    }
    Ok(match method {
        SmoothingMethod::Kalman => {
            let (q, r) = (params.kalman_process_var, params.kalman_measurement_var);
            if !(q >= 0.0 && r > 0.0) {
                return Err(invalid("Kalman variances must be q >= 0 and r > 0"));
            }
            let (mut x, mut p) = (curve[0], r);
            let mut out = vec![x];
            for &z in &curve[1..] {
                let prior = p + q;
                let k = prior / (prior + r);
                x += k * (z - x);
                p = (1.0 - k) * prior;
                out.push(x);
            }
            out
        }
        SmoothingMethod::Ema | SmoothingMethod::Dema => {
            if !(params.span >= 1.0) {
                return Err(invalid("EMA span must be at least 1"));
            }
            let e1 = ema(curve, params.span);
            if method == SmoothingMethod::Ema {
                e1
            } else {
                let e2 = ema(&e1, params.span);
                e1.iter().zip(&e2).map(|(a, b)| 2.0 * a - b).collect()
            }
        }
        SmoothingMethod::Midpoint => {
            let w = params.midpoint_window;
            if w == 0 {
                return Err(invalid("midpoint window must be positive"));
            }
            let n = curve.len();
            (0..n)
                .map(|t| {
                    let start = (t + 1).saturating_sub(w);
                    let win = &curve[start..(start + w).min(n)];
                    let hi = win.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lo = win.iter().copied().fold(f64::INFINITY, f64::min);
                    (hi + lo) / 2.0
                })
                .collect()
        }
    })
}

/// Root-sum-square distance between a curve and its smoothed version.
pub fn stability_distance(curve: &[f64], method: SmoothingMethod, params: &SmoothingParams) -> Result<StabilityReport> {
    let s = smooth(curve, method, params)?;
    let distance = curve.iter().zip(&s).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok(StabilityReport { method, distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curve_is_perfectly_stable() {
        for m in SmoothingMethod::ALL {
            let r = stability_distance(&[2.5; 12], m, &SmoothingParams::default()).unwrap();
            assert_eq!(r.distance, 0.0, "{m}");
        }
    }

    #[test]
    fn alternating_curve_midpoint() {
        let curve: Vec<f64> = (0..9).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        for w in [2, 3, 5] {
            let p = SmoothingParams { midpoint_window: w, ..Default::default() };
            assert!(smooth(&curve, SmoothingMethod::Midpoint, &p).unwrap().iter().all(|&v| v == 0.0));
            let d = stability_distance(&curve, SmoothingMethod::Midpoint, &p).unwrap().distance;
            assert!((d - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_span_ema_is_identity() {
        let line: Vec<f64> = (0..20).map(|t| t as f64 * 0.3).collect();
        let p = SmoothingParams { span: 1.0, ..Default::default() };
        assert_eq!(stability_distance(&line, SmoothingMethod::Ema, &p).unwrap().distance, 0.0);
        assert_eq!(stability_distance(&line, SmoothingMethod::Dema, &p).unwrap().distance, 0.0);
    }

    #[test]
    fn rejects_short_curves_and_unknown_methods() {
        assert!(stability_distance(&[1.0], SmoothingMethod::Ema, &SmoothingParams::default()).is_err());
        assert!("loess".parse::<SmoothingMethod>().is_err());
    }
}
