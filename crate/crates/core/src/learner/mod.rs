//! Epsilon-greedy Max-Sum acting, tabular TD learning with a sparseness
//! penalty, target synchronization and the training loop.

mod replay;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::CoordinationGraph;
use crate::maxsum::{run_max_sum, JointAction, MaxSumConfig};
use crate::sparsify::{select_topology_with, CriterionKind, EdgeOrder, TopologyCriterion};
use crate::values::{q_tot, sparse_loss, sparse_loss_grad, LossVariant, ObsKey, ValueTables, DEFAULT_ENTRY_CAP};

pub use replay::ReplayBuffer;
pub use train::{evaluate, train, train_with_tables, CurvePoint, EvalReport, LearningCurve, Trained};

impl Default for TopologyCriterion {
    fn default() -> Self {
        TopologyCriterion::new(CriterionKind::Qvar, 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_anneal_steps: u64,
    pub batch_episodes: usize,
    pub replay_capacity: usize,
    pub target_sync_interval: u64,
    pub lambda_sparse: f64,
    pub sparse_loss: LossVariant,
    pub maxsum_iterations: usize,
    pub maxsum_normalize: bool,
    pub anytime: bool,
    /// Set from the experiment's top-level criterion when loaded from a file.
    #[serde(skip)]
    pub criterion: TopologyCriterion,
    pub total_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub seed: u64,
    /// Observations folded into each table key.
    pub history: usize,
    pub shared_tables: bool,
    /// Use the all-pairs global value instead of the active-topology one.
    pub qtot_all_pairs: bool,
    pub entry_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 5e-4,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_anneal_steps: 50_000,
            batch_episodes: 32,
            replay_capacity: 5000,
            target_sync_interval: 2000,
            lambda_sparse: 1e-4,
            sparse_loss: LossVariant::Qvar,
            maxsum_iterations: 5,
            maxsum_normalize: true,
            anytime: true,
            criterion: TopologyCriterion::default(),
            total_steps: 50_000,
            eval_interval: 5000,
            eval_episodes: 32,
            seed: 0,
            history: 1,
            shared_tables: true,
            qtot_all_pairs: false,
            entry_cap: DEFAULT_ENTRY_CAP,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.lr > 0.0, self.batch_episodes > 0, self.replay_capacity > 0, self.target_sync_interval > 0];
        if positive.contains(&false) || self.maxsum_iterations == 0 || self.eval_episodes == 0 || self.history == 0 {
            return Err(invalid("lr, batch, replay, sync interval, iterations, eval episodes and history must be positive"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        for eps in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(invalid(format!("epsilon {eps} outside [0, 1]")));
            }
        }
        if !self.lambda_sparse.is_finite() || self.lambda_sparse < 0.0 {
            return Err(invalid("lambda_sparse must be finite and non-negative"));
        }
        self.criterion.validate()
    }

    /// Linearly annealed exploration rate after `step` environment steps.
    pub fn epsilon(&self, step: u64) -> f64 {
        if self.epsilon_anneal_steps == 0 {
            return self.epsilon_end;
        }
        if step >= self.epsilon_anneal_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / self.epsilon_anneal_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    pub fn maxsum(&self) -> MaxSumConfig {
        MaxSumConfig { iterations: self.maxsum_iterations, normalize: self.maxsum_normalize, anytime: self.anytime }
    }

    pub fn selection(&self) -> Selection {
        Selection { criterion: self.criterion, order: EdgeOrder::Descending, maxsum: self.maxsum() }
    }
}

/// How a joint action is chosen: topology rule plus solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub criterion: TopologyCriterion,
    pub order: EdgeOrder,
    pub maxsum: MaxSumConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub keys: Vec<ObsKey>,
    pub actions: JointAction,
    pub reward: f64,
    pub next_keys: Vec<ObsKey>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    /// Mean squared TD error over the batch.
    pub td_loss: f64,
    /// Sparseness loss of the batch before the update.
    pub sparse_loss: f64,
}

/// Chooses a joint action.
///
/// The topology comes from `target`, the greedy action from Max-Sum on
/// `tables`. Afterwards each agent in order draws `u` from `rng` and, when
/// `u < epsilon`, a uniform replacement action. The random criterion draws its
/// edges from `rng` before any of that.
pub fn act<R: Rng + ?Sized>(
    tables: &ValueTables,
    target: &ValueTables,
    keys: &[ObsKey],
    sel: &Selection,
    epsilon: f64,
    rng: &mut R,
) -> Result<(JointAction, CoordinationGraph)> {
    let g = select_topology_with(target, keys, &sel.criterion, sel.order, rng)?;
    let (mut a, _) = run_max_sum(&tables.problem(&g, keys)?, &sel.maxsum)?;
    for ai in a.0.iter_mut() {
        if rng.gen::<f64>() < epsilon {
            *ai = rng.gen_range(0..tables.n_actions());
        }
    }
    Ok((a, g))
}

fn value_graph(g: CoordinationGraph, all_pairs: bool) -> Result<CoordinationGraph> {
    if all_pairs {
        CoordinationGraph::complete(g.n_agents())
    } else {
        Ok(g)
    }
}

/// One pass of semi-gradient TD over `batch`, then a sparseness step.
///
/// Transitions are applied one after another in batch order. For each, the
/// topology is rebuilt from `target`; the bootstrap value uses Max-Sum on
/// `target` at the next keys and is skipped for terminal transitions. The
/// TD error `d` adds `lr*d/|V|` to each executed utility entry and `lr*d/|E|`
/// to each executed payoff entry on the topology. Finally
/// `lr * lambda_sparse * grad` of the sparseness loss over the batch's keys is
/// subtracted.
pub fn td_update<R: Rng + ?Sized>(
    tables: &mut ValueTables,
    target: &ValueTables,
    batch: &[&Transition],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<LossReport> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let ms = cfg.maxsum();
    let mut td_sq = 0.0;
    for tr in batch {
        let n = tr.keys.len();
        let y = if tr.terminal {
            tr.reward
        } else {
            let g = select_topology_with(target, &tr.next_keys, &cfg.criterion, EdgeOrder::Descending, rng)?;
            let (a_next, _) = run_max_sum(&target.problem(&g, &tr.next_keys)?, &ms)?;
            let vg = value_graph(g, cfg.qtot_all_pairs)?;
            tr.reward + cfg.gamma * q_tot(target, &vg, &tr.next_keys, &a_next)
        };
        let g = select_topology_with(target, &tr.keys, &cfg.criterion, EdgeOrder::Descending, rng)?;
        let vg = value_graph(g, cfg.qtot_all_pairs)?;
        let a = &tr.actions;
        let delta = y - q_tot(tables, &vg, &tr.keys, a);
        td_sq += delta * delta;
        if delta == 0.0 {
            continue;
        }
        let inv_n = 1.0 / n as f64;
        for i in 0..n {
            tables.add_utility(&tr.keys[i], a[i], cfg.lr * delta * inv_n)?;
        }
        if vg.n_edges() > 0 {
            let inv_e = 1.0 / vg.n_edges() as f64;
            for e in vg.edges() {
                let (i, j) = (e.lo(), e.hi());
                tables.add_payoff(&tr.keys[i], &tr.keys[j], a[i], a[j], cfg.lr * delta * inv_e)?;
            }
        }
    }
    let mut report = LossReport { td_loss: td_sq / batch.len() as f64, sparse_loss: 0.0 };
    if cfg.lambda_sparse > 0.0 && batch[0].keys.len() > 1 {
        let keys: Vec<Vec<ObsKey>> = batch.iter().map(|t| t.keys.clone()).collect();
        report.sparse_loss = sparse_loss(tables, cfg.sparse_loss, &keys)?;
        let grad = sparse_loss_grad(tables, cfg.sparse_loss, &keys)?;
        grad.apply(tables, -cfg.lr * cfg.lambda_sparse)?;
    }
    Ok(report)
}

/// Makes `target` a deep copy of `tables`.
pub fn sync_target(tables: &ValueTables, target: &mut ValueTables) {
    target.clone_from(tables);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ActionMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn keys(n: usize) -> Vec<ObsKey> {
        (0..n).map(|i| ObsKey::new(i, 0)).collect()
    }

    fn sel(kind: CriterionKind) -> Selection {
        TrainConfig { criterion: TopologyCriterion::new(kind, 1.0), ..Default::default() }.selection()
    }

    #[test]
    fn greedy_follows_payoff() {
        let mut t = ValueTables::new(2, false).unwrap();
        let k = keys(2);
        t.set_payoff_matrix(&k[0], &k[1], &ActionMatrix::from_rows(&[[5.0, 0.0], [0.0, 3.0]]).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, g) = act(&t, &t, &k, &sel(CriterionKind::Full), 0.0, &mut rng).unwrap();
        assert_eq!(a.0, vec![0, 0]);
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn greedy_edgeless_is_utility_argmax() {
        let mut t = ValueTables::new(3, true).unwrap();
        let k: Vec<ObsKey> = (0..3).map(|i| ObsKey::new(i, i as u64)).collect();
        for (i, best) in [2, 0, 1].into_iter().enumerate() {
            t.set_utility(&k[i], best, 1.0).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, _) = act(&t, &t, &k, &sel(CriterionKind::None), 0.0, &mut rng).unwrap();
        assert_eq!(a.0, vec![2, 0, 1]);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let t = ValueTables::new(3, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0f64; 9];
        let draws = 9000;
        for _ in 0..draws {
            let (a, _) = act(&t, &t, &keys(2), &sel(CriterionKind::None), 1.0, &mut rng).unwrap();
            counts[a[0] * 3 + a[1]] += 1.0;
        }
        let expected = draws as f64 / 9.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 26.12, "chi2 = {chi2}");
    }

    fn terminal(reward: f64) -> Transition {
        Transition { keys: keys(2), actions: JointAction(vec![1, 0]), reward, next_keys: keys(2), terminal: true }
    }

    #[test]
    fn one_step_hand_simulation() {
        let cfg = TrainConfig { criterion: TopologyCriterion::new(CriterionKind::None, 0.0), lr: 0.1, ..Default::default() };
        let mut t = ValueTables::new(2, false).unwrap();
        let target = t.clone();
        let tr = terminal(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = td_update(&mut t, &target, &[&tr], &cfg, &mut rng).unwrap();
        assert_eq!(r.td_loss, 1.0);
        assert!((t.utility_at(&tr.keys[0], 1) - 0.05).abs() < 1e-15);
        assert!((t.utility_at(&tr.keys[1], 0) - 0.05).abs() < 1e-15);
        assert_eq!(t.utility_at(&tr.keys[0], 0), 0.0);
    }

    #[test]
    fn fixed_point_has_no_increment() {
        let cfg = TrainConfig { criterion: TopologyCriterion::new(CriterionKind::Full, 1.0), lambda_sparse: 0.0, ..Default::default() };
        let mut t = ValueTables::new(2, false).unwrap();
        let k = keys(2);
        t.set_utility(&k[0], 1, 2.0).unwrap();
        t.set_payoff(&k[0], &k[1], 1, 0, 1.0).unwrap();
        let before = t.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        td_update(&mut t, &before, &[&terminal(2.0)], &cfg, &mut rng).unwrap();
        assert_eq!(t, before);
    }

    #[test]
    fn repeated_updates_contract() {
        let cfg = TrainConfig {
            criterion: TopologyCriterion::new(CriterionKind::Full, 1.0),
            lambda_sparse: 0.0,
            lr: 0.3,
            ..Default::default()
        };
        let mut t = ValueTables::new(2, false).unwrap();
        let target = t.clone();
        let tr = terminal(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // weights 1/2, 1/2 and 1 give a contraction rate of 1 - lr * 1.5
        let rate = 1.0 - 0.3 * 1.5;
        let mut prev = td_update(&mut t, &target, &[&tr], &cfg, &mut rng).unwrap().td_loss.sqrt();
        for _ in 0..20 {
            let err = td_update(&mut t, &target, &[&tr], &cfg, &mut rng).unwrap().td_loss.sqrt();
            assert!((err - rate * prev).abs() < 1e-12);
            prev = err;
        }
    }

    #[test]
    fn sync_is_a_snapshot() {
        let mut t = ValueTables::new(2, true).unwrap();
        let mut target = ValueTables::new(2, true).unwrap();
        t.set_utility(&ObsKey::new(0, 3), 1, 4.0).unwrap();
        sync_target(&t, &mut target);
        assert_eq!(t, target);
        t.set_utility(&ObsKey::new(0, 3), 1, 5.0).unwrap();
        assert_eq!(target.utility_at(&ObsKey::new(0, 3), 1), 4.0);
        sync_target(&t, &mut target);
        sync_target(&t, &mut target);
        assert_eq!(t, target);
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.epsilon(0), 1.0);
        assert!((cfg.epsilon(25_000) - 0.525).abs() < 1e-12);
        assert_eq!(cfg.epsilon(1_000_000), 0.05);
    }
}
