//! Context-aware sparse topology selection.
//!
//! For a joint observation every agent pair gets a score from the (target)
//! value tables. The asymmetric per-ordered-pair statistic is symmetrized by
//! `max(ζ_ij, ζ_ji)`, pairs are sorted by score (ties in lexicographic edge
//! order) and the first `edge_budget(n, λ)` become the graph.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{complete_edge_count, CoordinationGraph, Edge};
use crate::values::{zeta_delta_max, zeta_delta_var, zeta_qvar, ObsKey, ValueTables};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Qvar,
    DeltaMax,
    DeltaVar,
    Random,
    Full,
    None,
}

impl CriterionKind {
    /// Kinds whose edges are chosen by a value statistic.
    pub fn is_scored(&self) -> bool {
        matches!(self, CriterionKind::Qvar | CriterionKind::DeltaMax | CriterionKind::DeltaVar)
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "qvar" => CriterionKind::Qvar,
            "delta_max" => CriterionKind::DeltaMax,
            "delta_var" => CriterionKind::DeltaVar,
            "random" => CriterionKind::Random,
            "full" => CriterionKind::Full,
            "none" => CriterionKind::None,
            other => return Err(invalid(format!("unknown criterion {other:?}"))),
        })
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionKind::Qvar => "qvar",
            CriterionKind::DeltaMax => "delta_max",
            CriterionKind::DeltaVar => "delta_var",
            CriterionKind::Random => "random",
            CriterionKind::Full => "full",
            CriterionKind::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyCriterion {
    pub kind: CriterionKind,
    /// Fraction of the complete graph's edges to keep (ignored by full/none).
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Seed for the random kind when no external generator is supplied.
    #[serde(default)]
    pub seed: u64,
}

fn default_lambda() -> f64 {
    0.5
}

impl TopologyCriterion {
    pub fn new(kind: CriterionKind, lambda: f64) -> Self {
        TopologyCriterion { kind, lambda, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(invalid(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }
}

/// Order in which scored edges are admitted into the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOrder {
    /// Largest score first.
    Descending,
    /// Smallest score first; only used to probe the ranking.
    Ascending,
}

/// Number of undirected edges kept for budget `lambda`:
/// `round_half_even(lambda * n(n-1)/2)`, clamped to the complete graph.
pub fn edge_budget(n: usize, lambda: f64) -> usize {
    let total = complete_edge_count(n);
    // snap to 1e-9 so products like 0.1 * 105 land exactly on the half
    let raw = (lambda * total as f64 * 1e9).round() / 1e9;
    (raw.round_ties_even().max(0.0) as usize).min(total)
}

/// Symmetrized score for every pair, in lexicographic edge order.
pub fn edge_scores(tables: &ValueTables, keys: &[ObsKey], kind: CriterionKind) -> Result<Vec<(Edge, f64)>> {
    let n = keys.len();
    let score = |i: usize, j: usize| -> f64 {
        let (ki, kj) = (&keys[i], &keys[j]);
        match kind {
            CriterionKind::Qvar => zeta_qvar(&tables.payoff(ki, kj)),
            CriterionKind::DeltaMax => zeta_delta_max(tables, ki, kj),
            CriterionKind::DeltaVar => zeta_delta_var(tables, ki, kj),
            _ => 0.0,
        }
    };
    if !kind.is_scored() {
        return Err(invalid(format!("criterion {kind} does not score edges")));
    }
    let mut out = Vec::with_capacity(complete_edge_count(n));
    for i in 0..n {
        for j in i + 1..n {
            out.push((Edge::new(i, j)?, score(i, j).max(score(j, i))));
        }
    }
    Ok(out)
}

/// Builds the topology for one joint observation, seeding the random kind
/// from `crit.seed`.
pub fn select_topology(tables: &ValueTables, keys: &[ObsKey], crit: &TopologyCriterion) -> Result<CoordinationGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(crit.seed);
    select_topology_with(tables, keys, crit, EdgeOrder::Descending, &mut rng)
}

/// Builds the topology with an explicit admission order and generator. Only
/// the random kind draws from `rng`.
pub fn select_topology_with<R: Rng + ?Sized>(
    tables: &ValueTables,
    keys: &[ObsKey],
    crit: &TopologyCriterion,
    order: EdgeOrder,
    rng: &mut R,
) -> Result<CoordinationGraph> {
    crit.validate()?;
    let n = keys.len();
    match crit.kind {
        CriterionKind::None => CoordinationGraph::empty(n),
        CriterionKind::Full => CoordinationGraph::complete(n),
        CriterionKind::Random => {
            let total = complete_edge_count(n);
            let budget = edge_budget(n, crit.lambda);
            let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let picked = rand::seq::index::sample(rng, total, budget);
            CoordinationGraph::from_edges(n, picked.iter().map(|k| all[k]))
        }
        kind => {
            let mut scored = edge_scores(tables, keys, kind)?;
            // stable sort keeps lexicographic order among equal scores
            match order {
                EdgeOrder::Descending => scored.sort_by(|a, b| b.1.total_cmp(&a.1)),
                EdgeOrder::Ascending => scored.sort_by(|a, b| a.1.total_cmp(&b.1)),
            }
            let budget = edge_budget(n, crit.lambda);
            CoordinationGraph::from_edges(n, scored[..budget].iter().map(|(e, _)| (e.lo(), e.hi())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ActionMatrix;

    fn keys(n: usize) -> Vec<ObsKey> {
        (0..n).map(|i| ObsKey::new(i, i as u64)).collect()
    }

    #[test]
    fn budget_examples() {
        assert_eq!(edge_budget(15, 0.1), 10);
        assert_eq!(edge_budget(15, 0.0), 0);
        assert_eq!(edge_budget(10, 1.0), 45);
        assert_eq!(edge_budget(6, 0.3), 4);
        assert_eq!(edge_budget(1, 1.0), 0);
    }

    #[test]
    fn trivial_kinds() {
        let t = ValueTables::new(2, false).unwrap();
        let none = select_topology(&t, &keys(4), &TopologyCriterion::new(CriterionKind::None, 0.7)).unwrap();
        assert_eq!(none.n_edges(), 0);
        for kind in [CriterionKind::Qvar, CriterionKind::DeltaMax, CriterionKind::DeltaVar, CriterionKind::Random, CriterionKind::Full] {
            let g = select_topology(&t, &keys(4), &TopologyCriterion::new(kind, 1.0)).unwrap();
            assert_eq!(g, CoordinationGraph::complete(4).unwrap());
        }
    }

    #[test]
    fn picks_highest_variance_edge() {
        let mut t = ValueTables::new(2, false).unwrap();
        let k = keys(3);
        t.set_payoff_matrix(&k[0], &k[1], &ActionMatrix::from_rows(&[[0.0, 6.0], [0.0, 0.0]]).unwrap())
            .unwrap();
        let g = select_topology(&t, &k, &TopologyCriterion::new(CriterionKind::Qvar, 1.0 / 3.0)).unwrap();
        assert_eq!(g.edges().map(|e| (e.lo(), e.hi())).collect::<Vec<_>>(), vec![(0, 1)]);
        let scores = edge_scores(&t, &k, CriterionKind::Qvar).unwrap();
        assert_eq!(scores[0].1, 9.0);
    }

    #[test]
    fn ties_follow_lexicographic_order() {
        let t = ValueTables::new(2, false).unwrap();
        let g = select_topology(&t, &keys(4), &TopologyCriterion::new(CriterionKind::Qvar, 0.5)).unwrap();
        assert_eq!(
            g.edges().map(|e| (e.lo(), e.hi())).collect::<Vec<_>>(),
            vec![(0, 1), (0, 2), (0, 3)]
        );
    }

    #[test]
    fn random_is_seeded() {
        let t = ValueTables::new(2, false).unwrap();
        let mut crit = TopologyCriterion::new(CriterionKind::Random, 0.4);
        crit.seed = 17;
        let a = select_topology(&t, &keys(6), &crit).unwrap();
        let b = select_topology(&t, &keys(6), &crit).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_edges(), edge_budget(6, 0.4));
    }

    #[test]
    fn rejects_bad_lambda() {
        let t = ValueTables::new(2, false).unwrap();
        assert!(select_topology(&t, &keys(3), &TopologyCriterion::new(CriterionKind::Qvar, 1.5)).is_err());
        assert!("fancy".parse::<CriterionKind>().is_err());
    }
}
