//! Plain tabular Q-learner with one utility table per (agent tag, code) and
//! global value `(1/n) * sum_i Q(o_i, a_i)`, written against the environment
//! interface only.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsecg::envs::{Environment, StepResult};
use sparsecg::learner::TrainConfig;
use sparsecg::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Reset(u64, Vec<u64>),
    Step(Vec<usize>, StepResult),
}

/// Forwards to an environment and logs every call.
pub struct Recorder<E> {
    pub inner: E,
    pub log: Vec<Event>,
}

impl<E: Environment> Environment for Recorder<E> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }
    fn n_agents(&self) -> usize {
        self.inner.n_agents()
    }
    fn n_actions(&self) -> usize {
        self.inner.n_actions()
    }
    fn obs_space_size(&self) -> u64 {
        self.inner.obs_space_size()
    }
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }
    fn reward_bounds(&self) -> (f64, f64) {
        self.inner.reward_bounds()
    }
    fn aux_keys(&self) -> &'static [&'static str] {
        self.inner.aux_keys()
    }
    fn reset(&mut self, seed: u64) -> Vec<u64> {
        let obs = self.inner.reset(seed);
        self.log.push(Event::Reset(seed, obs.clone()));
        obs
    }
    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        let r = self.inner.step(actions)?;
        self.log.push(Event::Step(actions.to_vec(), r.clone()));
        Ok(r)
    }
    fn render(&self) -> String {
        self.inner.render()
    }
}

type Table = HashMap<(usize, u64), Vec<f64>>;

struct Tr {
    obs: Vec<u64>,
    actions: Vec<usize>,
    reward: f64,
    next: Vec<u64>,
    terminal: bool,
}

pub struct OracleLearner {
    pub q: Table,
    n_actions: usize,
    shared: bool,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

impl OracleLearner {
    fn key(&self, agent: usize, code: u64) -> (usize, u64) {
        (if self.shared { 0 } else { agent }, code)
    }

    pub fn value(&self, agent: usize, code: u64) -> Vec<f64> {
        self.q.get(&self.key(agent, code)).cloned().unwrap_or_else(|| vec![0.0; self.n_actions])
    }

    fn best(table: &Table, key: (usize, u64), n_actions: usize) -> (usize, f64) {
        match table.get(&key) {
            None => (0, 0.0),
            Some(row) => {
                let mut b = 0;
                for a in 1..n_actions {
                    if row[a] > row[b] {
                        b = a;
                    }
                }
                (b, row[b])
            }
        }
    }

    fn greedy(&self, table: &Table, obs: &[u64]) -> Vec<usize> {
        obs.iter().enumerate().map(|(i, &o)| Self::best(table, self.key(i, o), self.n_actions).0).collect()
    }

    /// Trains on `env` with the schedule of `cfg`, criterion ignored.
    pub fn train(env: &mut dyn Environment, cfg: &TrainConfig) -> Self {
        let n = env.n_agents();
        let k = env.n_actions();
        let mut me = OracleLearner { q: HashMap::new(), n_actions: k, shared: cfg.shared_tables };
        let mut target = me.q.clone();
        let (mut act_rng, mut replay_rng, mut env_rng) = (rng(cfg.seed, 1), rng(cfg.seed, 2), rng(cfg.seed, 3));
        let mut replay: VecDeque<Vec<Tr>> = VecDeque::new();
        let mut t = 0u64;
        let mut eval_due = false;
        while t < cfg.total_steps {
            let mut obs = env.reset(env_rng.gen());
            let mut episode = Vec::new();
            loop {
                let eps = if t >= cfg.epsilon_anneal_steps {
                    cfg.epsilon_end
                } else {
                    cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * (t as f64 / cfg.epsilon_anneal_steps as f64)
                };
                let mut a = me.greedy(&me.q, &obs);
                for ai in a.iter_mut() {
                    if act_rng.gen::<f64>() < eps {
                        *ai = act_rng.gen_range(0..k);
                    }
                }
                let s = env.step(&a).unwrap();
                t += 1;
                if t % cfg.target_sync_interval == 0 {
                    target = me.q.clone();
                }
                if t % cfg.eval_interval == 0 || t == cfg.total_steps {
                    eval_due = true;
                }
                let stop = s.terminal || t >= cfg.total_steps;
                episode.push(Tr { obs: obs.clone(), actions: a, reward: s.reward, next: s.observations.clone(), terminal: s.terminal });
                obs = s.observations;
                if stop {
                    break;
                }
            }
            if eval_due {
                eval_due = false;
                let mut r = rng(cfg.seed, 4);
                for _ in 0..cfg.eval_episodes {
                    let mut o = env.reset(r.gen());
                    loop {
                        let a = me.greedy(&me.q, &o);
                        for _ in 0..n {
                            let _: f64 = r.gen();
                        }
                        let s = env.step(&a).unwrap();
                        if s.terminal {
                            break;
                        }
                        o = s.observations;
                    }
                }
            }
            if replay.len() == cfg.replay_capacity {
                replay.pop_front();
            }
            replay.push_back(episode);
            let picks: Vec<usize> = (0..cfg.batch_episodes).map(|_| replay_rng.gen_range(0..replay.len())).collect();
            for &p in &picks {
                for tr in &replay[p] {
                    let y = if tr.terminal {
                        tr.reward
                    } else {
                        let mut next = 0.0;
                        for (i, &o) in tr.next.iter().enumerate() {
                            next += Self::best(&target, me.key(i, o), k).1;
                        }
                        tr.reward + cfg.gamma * (next / n as f64)
                    };
                    let mut cur = 0.0;
                    for i in 0..n {
                        cur += me.value(i, tr.obs[i])[tr.actions[i]];
                    }
                    let d = y - cur / n as f64;
                    for i in 0..n {
                        let key = me.key(i, tr.obs[i]);
                        me.q.entry(key).or_insert_with(|| vec![0.0; k])[tr.actions[i]] += cfg.lr * d / n as f64;
                    }
                }
            }
        }
        me
    }
}
