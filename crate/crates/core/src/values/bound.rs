use crate::error::{invalid, Error, Result};

/// Inputs of the edge-removal bound for one edge {i,j} seen from agent j.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Inputs {
    /// Message from the edge's factor to agent j, one entry per action of j.
    pub m: Vec<f64>,
    /// Edge statistic of the payoff, a non-negative scalar.
    pub zeta: f64,
    /// Largest regret of the combined payoff-plus-message table.
    pub a_bound: f64,
    pub n_actions: usize,
}

/// Lower bound on the probability that Max-Sum keeps the endpoint actions of an
/// edge when the edge is removed:
///
/// ```text
/// (2/n) * [ (m̄ - min m)(max m - m̄) / (ζ + 2A² + 2·sqrt(A²(A² + ζ)))² - 1 ]
/// ```
///
/// The value may be negative, in which case the bound is vacuous.
pub fn prop1_lower_bound(inp: &Prop1Inputs) -> Result<f64> {
    if inp.n_actions == 0 {
        return Err(invalid("n_actions must be positive"));
    }
    if inp.m.is_empty() || inp.m.iter().any(|v| !v.is_finite()) {
        return Err(invalid("message must be non-empty and finite"));
    }
    if !(inp.zeta.is_finite() && inp.zeta >= 0.0 && inp.a_bound.is_finite() && inp.a_bound >= 0.0) {
        return Err(invalid("zeta and A must be finite and non-negative"));
    }
    let mean = inp.m.iter().sum::<f64>() / inp.m.len() as f64;
    let lo = inp.m.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inp.m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a2 = inp.a_bound * inp.a_bound;
    let root = inp.zeta + 2.0 * a2 + 2.0 * (a2 * (a2 + inp.zeta)).sqrt();
    let denom = root * root;
    if denom == 0.0 {
        return Err(Error::NumericFailure("edge-removal bound has a zero denominator".into()));
    }
    let spread = (mean - lo) * (hi - mean);
    Ok(2.0 / inp.n_actions as f64 * (spread / denom - 1.0))
}
