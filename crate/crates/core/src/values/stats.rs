//! Edge statistics and sparseness losses over the value tables.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ObsKey, PairKey, TableKey, ValueTables};
use crate::error::{invalid, Error, Result};
use crate::matrix::{population_variance, ActionMatrix};

/// Largest row variance of a payoff block: `max_{a_i} Var_{a_j} q(a_i, a_j)`.
pub fn zeta_qvar(m: &ActionMatrix) -> f64 {
    (0..m.rows())
        .map(|r| population_variance(m.row(r)))
        .fold(0.0, f64::max)
}

/// Utility difference `q_ij(a_i,a_j) - q_i(a_i) - q_j(a_j)`, rows indexed by
/// agent i's actions.
pub fn delta_ij(tables: &ValueTables, ki: &ObsKey, kj: &ObsKey) -> ActionMatrix {
    let qi = tables.utility(ki);
    let qj = tables.utility(kj);
    let mut d = tables.payoff(ki, kj);
    for r in 0..d.rows() {
        for c in 0..d.cols() {
            d.set(r, c, d.get(r, c) - qi[r] - qj[c]);
        }
    }
    d
}

/// Largest absolute utility difference.
pub fn zeta_delta_max(tables: &ValueTables, ki: &ObsKey, kj: &ObsKey) -> f64 {
    delta_ij(tables, ki, kj)
        .as_slice()
        .iter()
        .fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Largest row variance of the utility difference.
pub fn zeta_delta_var(tables: &ValueTables, ki: &ObsKey, kj: &ObsKey) -> f64 {
    zeta_qvar(&delta_ij(tables, ki, kj))
}

/// Which sparseness regularizer to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVariant {
    /// Mean row variance of the payoff.
    Qvar,
    /// Mean absolute utility difference.
    AbsDelta,
    /// Mean row variance of the utility difference.
    DeltaVar,
}

impl FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qvar" => Ok(LossVariant::Qvar),
            "abs_delta" => Ok(LossVariant::AbsDelta),
            "delta_var" => Ok(LossVariant::DeltaVar),
            other => Err(invalid(format!("unknown sparseness loss {other:?}"))),
        }
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossVariant::Qvar => "qvar",
            LossVariant::AbsDelta => "abs_delta",
            LossVariant::DeltaVar => "delta_var",
        })
    }
}

/// Gradient of a loss with respect to table entries, stored per block in the
/// tables' canonical orientation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableGradient {
    utility: HashMap<TableKey, Vec<f64>>,
    payoff: HashMap<PairKey, Vec<f64>>,
}

impl TableGradient {
    pub fn utility(&self, tables: &ValueTables, k: &ObsKey) -> Vec<f64> {
        self.utility
            .get(&tables.table_key(k))
            .cloned()
            .unwrap_or_else(|| vec![0.0; tables.n_actions()])
    }

    /// Gradient block with rows indexed by `ki`'s actions.
    pub fn payoff(&self, tables: &ValueTables, ki: &ObsKey, kj: &ObsKey) -> ActionMatrix {
        let n = tables.n_actions();
        let (key, transposed) = tables.pair_key(ki, kj);
        match self.payoff.get(&key) {
            None => ActionMatrix::zeros(n, n),
            Some(b) => {
                let m = ActionMatrix::from_vec(n, n, b.clone()).expect("block shape");
                if transposed {
                    m.transpose()
                } else {
                    m
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.utility.values().chain(self.payoff.values()).flatten().all(|v| *v == 0.0)
    }

    /// `tables += scale * self`, skipping blocks that are entirely zero.
    pub fn apply(&self, tables: &mut ValueTables, scale: f64) -> Result<()> {
        let mut ukeys: Vec<_> = self.utility.keys().copied().collect();
        ukeys.sort_unstable();
        for k in ukeys {
            let g = &self.utility[&k];
            if g.iter().any(|v| *v != 0.0) {
                tables.add_to_utility_block(k, g, scale)?;
            }
        }
        let mut pkeys: Vec<_> = self.payoff.keys().copied().collect();
        pkeys.sort_unstable();
        for k in pkeys {
            let g = &self.payoff[&k];
            if g.iter().any(|v| *v != 0.0) {
                tables.add_to_payoff_block(k, g, scale)?;
            }
        }
        Ok(())
    }

    fn add_payoff(&mut self, tables: &ValueTables, ki: &ObsKey, kj: &ObsKey, d: &ActionMatrix) {
        let n = tables.n_actions();
        let (key, transposed) = tables.pair_key(ki, kj);
        let block = self.payoff.entry(key).or_insert_with(|| vec![0.0; n * n]);
        for r in 0..n {
            for c in 0..n {
                let idx = if transposed { c * n + r } else { r * n + c };
                block[idx] += d.get(r, c);
            }
        }
    }

    fn add_utility(&mut self, tables: &ValueTables, k: &ObsKey, d: &[f64]) {
        let block = self
            .utility
            .entry(tables.table_key(k))
            .or_insert_with(|| vec![0.0; tables.n_actions()]);
        for (b, v) in block.iter_mut().zip(d) {
            *b += v;
        }
    }
}

fn check_batch(batch: &[Vec<ObsKey>]) -> Result<()> {
    if batch.is_empty() {
        return Err(invalid("sparseness loss needs a non-empty batch"));
    }
    Ok(())
}

/// Sum over rows of the row variance, and its derivative per entry.
fn row_variance_sum(m: &ActionMatrix, with_grad: bool) -> (f64, Option<ActionMatrix>) {
    let cols = m.cols() as f64;
    let mut total = 0.0;
    let mut grad = with_grad.then(|| ActionMatrix::zeros(m.rows(), m.cols()));
    for r in 0..m.rows() {
        let row = m.row(r);
        let mean = row.iter().sum::<f64>() / cols;
        total += row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / cols;
        if let Some(g) = grad.as_mut() {
            for (c, x) in row.iter().enumerate() {
                g.set(r, c, 2.0 * (x - mean) / cols);
            }
        }
    }
    (total, grad)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-pair term of the loss (unnormalized) and its derivative with respect
/// to the oriented payoff block, or to the utility difference for the delta
/// variants.
fn pair_term(
    tables: &ValueTables,
    variant: LossVariant,
    ki: &ObsKey,
    kj: &ObsKey,
    with_grad: bool,
) -> (f64, Option<ActionMatrix>) {
    match variant {
        LossVariant::Qvar => row_variance_sum(&tables.payoff(ki, kj), with_grad),
        LossVariant::DeltaVar => row_variance_sum(&delta_ij(tables, ki, kj), with_grad),
        LossVariant::AbsDelta => {
            let d = delta_ij(tables, ki, kj);
            let total = d.as_slice().iter().map(|v| v.abs()).sum();
            (total, with_grad.then(|| d.map(sign)))
        }
    }
}

fn normalizer(variant: LossVariant, n_agents: usize, n_actions: usize, batch: usize) -> f64 {
    let pairs = (n_agents * n_agents.saturating_sub(1)) as f64;
    let per_pair = match variant {
        LossVariant::Qvar | LossVariant::DeltaVar => n_actions as f64,
        LossVariant::AbsDelta => (n_actions * n_actions) as f64,
    };
    if pairs == 0.0 {
        0.0
    } else {
        1.0 / (batch as f64 * pairs * per_pair)
    }
}

/// Sparseness loss averaged over the batch and over all ordered agent pairs.
///
/// `Qvar` and `DeltaVar` use the `1/(n(n-1)|A|)` normalizer, `AbsDelta` uses
/// `1/(n(n-1)|A|²)`.
pub fn sparse_loss(tables: &ValueTables, variant: LossVariant, batch: &[Vec<ObsKey>]) -> Result<f64> {
    check_batch(batch)?;
    let mut total = 0.0;
    for keys in batch {
        let n = keys.len();
        let norm = normalizer(variant, n, tables.n_actions(), batch.len());
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total += norm * pair_term(tables, variant, &keys[i], &keys[j], false).0;
                }
            }
        }
    }
    Ok(total)
}

/// Exact gradient of [`sparse_loss`] with respect to every touched entry
/// (`sign(0) = 0` for the absolute-value variant).
pub fn sparse_loss_grad(tables: &ValueTables, variant: LossVariant, batch: &[Vec<ObsKey>]) -> Result<TableGradient> {
    check_batch(batch)?;
    let mut grad = TableGradient::default();
    for keys in batch {
        let n = keys.len();
        let norm = normalizer(variant, n, tables.n_actions(), batch.len());
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (ki, kj) = (&keys[i], &keys[j]);
                let d = pair_term(tables, variant, ki, kj, true).1.expect("gradient requested");
                let d = d.map(|v| v * norm);
                grad.add_payoff(tables, ki, kj, &d);
                if variant != LossVariant::Qvar {
                    let row_sums: Vec<f64> = (0..d.rows()).map(|r| -d.row(r).iter().sum::<f64>()).collect();
                    let col_sums: Vec<f64> = (0..d.cols())
                        .map(|c| -(0..d.rows()).map(|r| d.get(r, c)).sum::<f64>())
                        .collect();
                    grad.add_utility(tables, ki, &row_sums);
                    grad.add_utility(tables, kj, &col_sums);
                }
            }
        }
    }
    Ok(grad)
}
