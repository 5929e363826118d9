use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{act, sync_target, td_update, ReplayBuffer, Selection, TrainConfig, Transition};
use crate::envs::Environment;
use crate::error::Result;
use crate::metrics::{comm_cost, median_iqr};
use crate::values::{HistoryEncoder, ValueTables};

/// Generator streams derived from the run seed.
const STREAM_ACT: u64 = 1;
const STREAM_REPLAY: u64 = 2;
const STREAM_ENV: u64 = 3;
const STREAM_EVAL: u64 = 4;
const STREAM_TD: u64 = 5;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub env_steps: u64,
    pub eval_return_median: f64,
    pub eval_return_p25: f64,
    pub eval_return_p75: f64,
    pub edges_used_mean: f64,
    pub messages_per_selection: f64,
    /// Per-episode means of the environment's auxiliary counters.
    pub aux: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningCurve {
    pub aux_keys: Vec<String>,
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn returns(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.eval_return_median).collect()
    }
}

/// Greedy evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub returns: Vec<f64>,
    /// Per-episode totals of each auxiliary counter.
    pub aux: Vec<Vec<f64>>,
    pub edges_used_mean: f64,
    pub messages_per_selection: f64,
}

impl EvalReport {
    pub fn aux_means(&self) -> Vec<f64> {
        self.aux.iter().map(|a| a.iter().sum::<f64>() / a.len().max(1) as f64).collect()
    }

    fn point(&self, env_steps: u64) -> CurvePoint {
        let (median, p25, p75) = median_iqr(&self.returns);
        CurvePoint {
            env_steps,
            eval_return_median: median,
            eval_return_p25: p25,
            eval_return_p75: p75,
            edges_used_mean: self.edges_used_mean,
            messages_per_selection: self.messages_per_selection,
            aux: self.aux_means(),
        }
    }
}

/// Runs `episodes` greedy episodes. Episode seeds, and edges of the random
/// criterion, come from a generator seeded with `seed`.
pub fn evaluate(
    env: &mut dyn Environment,
    tables: &ValueTables,
    target: &ValueTables,
    sel: &Selection,
    history: usize,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport> {
    evaluate_with(env, tables, target, sel, history, episodes, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn evaluate_with(
    env: &mut dyn Environment,
    tables: &ValueTables,
    target: &ValueTables,
    sel: &Selection,
    history: usize,
    episodes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EvalReport> {
    let n_aux = env.aux_keys().len();
    let mut enc = HistoryEncoder::new(env.n_agents(), history, env.obs_space_size());
    let mut report = EvalReport { returns: Vec::new(), aux: vec![Vec::new(); n_aux], edges_used_mean: 0.0, messages_per_selection: 0.0 };
    let (mut selections, mut edges, mut messages) = (0u64, 0u64, 0u64);
    for _ in 0..episodes {
        enc.reset();
        let mut keys = enc.push(&env.reset(rng.gen()));
        let mut ret = 0.0;
        let mut aux = vec![0.0; n_aux];
        loop {
            let (a, g) = act(tables, target, &keys, sel, 0.0, rng)?;
            let comm = comm_cost(&g, sel.maxsum.iterations)?;
            selections += 1;
            edges += comm.edges_used as u64;
            messages += comm.messages_per_selection;
            let step = env.step(&a)?;
            ret += step.reward;
            for (acc, key) in aux.iter_mut().zip(env.aux_keys()) {
                *acc += step.info.get(key).copied().unwrap_or(0.0);
            }
            if step.terminal {
                break;
            }
            keys = enc.push(&step.observations);
        }
        report.returns.push(ret);
        for (col, v) in report.aux.iter_mut().zip(aux) {
            col.push(v);
        }
    }
    if selections > 0 {
        report.edges_used_mean = edges as f64 / selections as f64;
        report.messages_per_selection = messages as f64 / selections as f64;
    }
    Ok(report)
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct Trained {
    pub curve: LearningCurve,
    pub tables: ValueTables,
    pub target: ValueTables,
}

/// Trains from empty tables. See [`train_with_tables`].
pub fn train(env: &mut dyn Environment, cfg: &TrainConfig) -> Result<Trained> {
    let tables = ValueTables::with_cap(env.n_actions(), cfg.shared_tables, cfg.entry_cap)?;
    train_with_tables(env, cfg, tables)
}

/// Trains for `cfg.total_steps` environment steps.
///
/// Episodes are stored whole in the replay buffer and one TD update over
/// `batch_episodes` sampled episodes follows every episode. The target is
/// synchronized every `target_sync_interval` steps. Checkpoints fall on
/// multiples of `eval_interval` and on `total_steps`; a checkpoint reached
/// mid-episode is evaluated when that episode ends, before its update, and
/// recorded at its nominal step. Evaluation at every checkpoint replays the
/// same episode seeds.
pub fn train_with_tables(env: &mut dyn Environment, cfg: &TrainConfig, tables: ValueTables) -> Result<Trained> {
    cfg.validate()?;
    let mut tables = tables;
    let mut target = tables.clone();
    let mut curve = LearningCurve { aux_keys: env.aux_keys().iter().map(|s| s.to_string()).collect(), points: Vec::new() };
    let sel = cfg.selection();
    let mut act_rng = stream(cfg.seed, STREAM_ACT);
    let mut replay_rng = stream(cfg.seed, STREAM_REPLAY);
    let mut env_rng = stream(cfg.seed, STREAM_ENV);
    let mut td_rng = stream(cfg.seed, STREAM_TD);
    let mut replay = ReplayBuffer::new(cfg.replay_capacity);
    let mut enc = HistoryEncoder::new(env.n_agents(), cfg.history, env.obs_space_size());
    let mut steps = 0u64;
    let mut pending: Vec<u64> = Vec::new();
    let is_checkpoint = |s: u64| s == cfg.total_steps || (cfg.eval_interval > 0 && s % cfg.eval_interval == 0);

    while steps < cfg.total_steps {
        enc.reset();
        let mut keys = enc.push(&env.reset(env_rng.gen()));
        let mut episode = Vec::new();
        loop {
            let eps = cfg.epsilon(steps);
            let (a, _) = act(&tables, &target, &keys, &sel, eps, &mut act_rng)?;
            let step = env.step(&a)?;
            steps += 1;
            let next_keys = enc.push(&step.observations);
            episode.push(Transition {
                keys,
                actions: a,
                reward: step.reward,
                next_keys: next_keys.clone(),
                terminal: step.terminal,
            });
            if steps % cfg.target_sync_interval == 0 {
                sync_target(&tables, &mut target);
            }
            if is_checkpoint(steps) {
                pending.push(steps);
            }
            if step.terminal || steps >= cfg.total_steps {
                break;
            }
            keys = next_keys;
        }
        if !pending.is_empty() {
            let mut eval_env_rng = stream(cfg.seed, STREAM_EVAL);
            let report = evaluate_with(&mut *env, &tables, &target, &sel, cfg.history, cfg.eval_episodes, &mut eval_env_rng)?;
            for s in pending.drain(..) {
                curve.points.push(report.point(s));
            }
        }
        replay.push(episode);
        let batch = replay.sample(cfg.batch_episodes, &mut replay_rng);
        if !batch.is_empty() {
            td_update(&mut tables, &target, &batch, cfg, &mut td_rng)?;
        }
    }
    Ok(Trained { curve, tables, target })
}
