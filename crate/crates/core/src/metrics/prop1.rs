//! Monte-Carlo study of how often removing one coordination edge leaves the
//! Max-Sum actions of its endpoints unchanged, against the analytic bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quantile;
use crate::error::{invalid, Result};
use crate::graph::{CoordinationGraph, Edge};
use crate::matrix::ActionMatrix;
use crate::maxsum::{run_max_sum, CoordinationProblem, MaxSumConfig, PayoffSet};
use crate::values::{prop1_lower_bound, zeta_qvar, Prop1Inputs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop1Config {
    pub n_instances: usize,
    pub n_agents: usize,
    pub n_actions: usize,
    /// Table entries are drawn uniformly from `[value_low, value_high)`.
    pub value_low: f64,
    pub value_high: f64,
    pub iterations: usize,
    pub seed: u64,
    pub n_bins: usize,
    pub bootstrap_resamples: usize,
    pub confidence: f64,
}

impl Default for Prop1Config {
    fn default() -> Self {
        Prop1Config {
            n_instances: 1000,
            n_agents: 4,
            n_actions: 3,
            value_low: -1.0,
            value_high: 1.0,
            iterations: 5,
            seed: 0,
            n_bins: 10,
            bootstrap_resamples: 1000,
            confidence: 0.95,
        }
    }
}

/// One removed edge of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Row {
    pub instance: usize,
    pub edge: Edge,
    /// Symmetrized variance statistic of the raw payoff table.
    pub zeta: f64,
    /// Whether either endpoint changed its action after removal.
    pub changed: bool,
    /// Bound for the higher endpoint, from the final messages and the
    /// weighted factor; NaN when undefined.
    pub bound: f64,
}

/// Unchanged-action frequency among rows with `zeta` in `[zeta_lo, zeta_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Bin {
    pub zeta_lo: f64,
    pub zeta_hi: f64,
    pub count: usize,
    pub unchanged_freq: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub positive_bounds: usize,
    /// Largest finite bound in the bin, `-inf` if none.
    pub max_bound: f64,
    /// Mean bound with each edge's value read as a probability: clamped to
    /// `[0, 1]`, undefined bounds counting as 0.
    pub mean_bound: f64,
}

impl Prop1Bin {
    pub fn half_width(&self) -> f64 {
        (self.ci_hi - self.ci_lo) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Report {
    pub rows: Vec<Prop1Row>,
    /// Equal-count bins in ascending `zeta` order.
    pub bins: Vec<Prop1Bin>,
    /// All rows with a positive bound, pooled; `None` if there are none.
    pub positive: Option<Prop1Bin>,
}

impl Prop1Report {
    /// Groups (the `zeta` bins, then the pooled positive rows) holding a
    /// positive bound whose mean bound exceeds the empirical frequency by more
    /// than the group's confidence half-width.
    pub fn bound_violations(&self) -> Vec<&Prop1Bin> {
        self.bins
            .iter()
            .chain(&self.positive)
            .filter(|b| b.positive_bounds > 0 && b.unchanged_freq < b.mean_bound - b.half_width())
            .collect()
    }
}

/// Largest regret of `r(a_i, a_j) = q(a_i, a_j) + m(a_i)` over `a_i` for a
/// fixed `a_j`, maximized over both actions.
pub fn regret_bound(q: &ActionMatrix, m_i: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for aj in 0..q.cols() {
        let r: Vec<f64> = (0..q.rows()).map(|ai| q.get(ai, aj) + m_i[ai]).collect();
        let best = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let low = r.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max(best - low);
    }
    worst
}

fn instance_rows(cfg: &Prop1Config, instance: usize) -> Result<Vec<Prop1Row>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(instance as u64);
    let (n, k) = (cfg.n_agents, cfg.n_actions);
    let mut draw = || rng.gen_range(cfg.value_low..cfg.value_high);
    let utilities: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| draw()).collect()).collect();
    let g = CoordinationGraph::complete(n)?;
    let mut payoffs = PayoffSet::new();
    for e in g.edges() {
        payoffs.insert(*e, ActionMatrix::from_vec(k, k, (0..k * k).map(|_| draw()).collect())?);
    }
    let ms = MaxSumConfig { iterations: cfg.iterations, normalize: true, anytime: false };
    let problem = CoordinationProblem::new(&g, utilities.clone(), payoffs.clone())?;
    let (base, state) = run_max_sum(&problem, &ms)?;
    let n_edges = g.n_edges() as f64;
    let mut rows = Vec::with_capacity(g.n_edges());
    for e in g.edges() {
        let q = &payoffs[e];
        let scaled = q.map(|v| v / n_edges);
        let f = state.factor_graph().pairwise_factor(e).expect("edge factor");
        let m_j = state.factor_to_agent(f, e.hi()).expect("link").to_vec();
        let m_i = state.agent_to_factor(e.lo(), f).expect("link");
        let inputs = Prop1Inputs { m: m_j, zeta: zeta_qvar(&scaled), a_bound: regret_bound(&scaled, m_i), n_actions: k };
        let bound = prop1_lower_bound(&inputs).unwrap_or(f64::NAN);

        let mut reduced = g.clone();
        reduced.remove_edge(e);
        // keep every remaining factor at its original weight 1/|E|
        let keep = (n_edges - 1.0) / n_edges;
        let rest: PayoffSet = payoffs
            .iter()
            .filter(|(k, _)| *k != e)
            .map(|(k, m)| (*k, m.map(|v| v * keep)))
            .collect();
        let (after, _) = run_max_sum(&CoordinationProblem::new(&reduced, utilities.clone(), rest)?, &ms)?;
        rows.push(Prop1Row {
            instance,
            edge: *e,
            zeta: zeta_qvar(q).max(zeta_qvar(&q.transpose())),
            changed: after[e.lo()] != base[e.lo()] || after[e.hi()] != base[e.hi()],
            bound,
        });
    }
    Ok(rows)
}

fn bootstrap_ci(unchanged: &[bool], cfg: &Prop1Config, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = unchanged.len();
    let mut means: Vec<f64> = (0..cfg.bootstrap_resamples)
        .map(|_| (0..n).filter(|_| unchanged[rng.gen_range(0..n)]).count() as f64 / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = 1.0 - cfg.confidence;
    (quantile(&means, alpha / 2.0), quantile(&means, 1.0 - alpha / 2.0))
}

fn summarize(rows: &[Prop1Row], idx: &[usize], cfg: &Prop1Config, rng: &mut ChaCha8Rng) -> Prop1Bin {
    let unchanged: Vec<bool> = idx.iter().map(|&i| !rows[i].changed).collect();
    let (ci_lo, ci_hi) = bootstrap_ci(&unchanged, cfg, rng);
    let bound = |i: &usize| rows[*i].bound;
    Prop1Bin {
        zeta_lo: idx.iter().map(|&i| rows[i].zeta).fold(f64::INFINITY, f64::min),
        zeta_hi: idx.iter().map(|&i| rows[i].zeta).fold(f64::NEG_INFINITY, f64::max),
        count: idx.len(),
        unchanged_freq: unchanged.iter().filter(|&&u| u).count() as f64 / idx.len() as f64,
        ci_lo,
        ci_hi,
        positive_bounds: idx.iter().filter(|&i| bound(i) > 0.0).count(),
        max_bound: idx.iter().map(bound).filter(|b| b.is_finite()).fold(f64::NEG_INFINITY, f64::max),
        mean_bound: idx.iter().map(|i| if bound(i).is_nan() { 0.0 } else { bound(i).clamp(0.0, 1.0) }).sum::<f64>() / idx.len() as f64,
    }
}

/// Runs the study. Instance `t` draws utilities then payoffs (lexicographic
/// edge order) from stream `t` of a generator seeded with `cfg.seed`, so rows
/// do not depend on worker scheduling.
pub fn prop1_experiment(cfg: &Prop1Config) -> Result<Prop1Report> {
    if cfg.n_instances == 0 || cfg.n_agents < 2 || cfg.n_actions == 0 || cfg.iterations == 0 || cfg.n_bins == 0 {
        return Err(invalid("prop1 parameters must be positive with at least two agents"));
    }
    if !(cfg.value_low < cfg.value_high) || !(cfg.confidence > 0.0 && cfg.confidence < 1.0) || cfg.bootstrap_resamples == 0 {
        return Err(invalid("prop1 value range, confidence or resample count invalid"));
    }
    let per_instance: Vec<Vec<Prop1Row>> =
        (0..cfg.n_instances).into_par_iter().map(|t| instance_rows(cfg, t)).collect::<Result<_>>()?;
    let rows: Vec<Prop1Row> = per_instance.into_iter().flatten().collect();

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].zeta.total_cmp(&rows[b].zeta).then(a.cmp(&b)));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let n_bins = cfg.n_bins.min(rows.len());
    let bins: Vec<Prop1Bin> = (0..n_bins)
        .map(|b| summarize(&rows, &order[b * rows.len() / n_bins..(b + 1) * rows.len() / n_bins], cfg, &mut rng))
        .collect();
    let positive: Vec<usize> = order.iter().copied().filter(|&i| rows[i].bound > 0.0).collect();
    let positive = (!positive.is_empty()).then(|| summarize(&rows, &positive, cfg, &mut rng));
    Ok(Prop1Report { rows, bins, positive })
}
