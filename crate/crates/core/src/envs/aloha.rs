//! Slotted-Aloha islands on a grid.
//!
//! Each island holds a packet backlog and chooses to send or stay idle. A
//! send succeeds unless a 4-neighbour sends in the same slot; every colliding
//! sender costs the team 10 and keeps its packet.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_actions, info, Environment, StepResult};
use crate::error::{invalid, Result};

pub const IDLE: usize = 0;
pub const SEND: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlohaConfig {
    pub rows: usize,
    pub cols: usize,
    pub max_backlog: usize,
    pub initial_backlog: usize,
    pub arrival_prob: f64,
    pub success_reward: f64,
    pub collision_penalty: f64,
    pub horizon: usize,
}

impl Default for AlohaConfig {
    fn default() -> Self {
        AlohaConfig {
            rows: 2,
            cols: 5,
            max_backlog: 5,
            initial_backlog: 1,
            arrival_prob: 0.6,
            success_reward: 0.1,
            collision_penalty: 10.0,
            horizon: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Aloha {
    cfg: AlohaConfig,
    backlog: Vec<usize>,
    t: usize,
    rng: ChaCha8Rng,
}

impl Aloha {
    pub fn new(cfg: AlohaConfig) -> Result<Self> {
        if cfg.rows * cfg.cols == 0 || cfg.horizon == 0 || cfg.max_backlog == 0 {
            return Err(invalid("aloha needs a non-empty grid, a horizon and a backlog"));
        }
        if cfg.initial_backlog > cfg.max_backlog || !(0.0..=1.0).contains(&cfg.arrival_prob) {
            return Err(invalid("aloha backlog or arrival probability out of range"));
        }
        let n = cfg.rows * cfg.cols;
        Ok(Aloha {
            backlog: vec![cfg.initial_backlog; n],
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            cfg,
        })
    }

    pub fn backlog(&self) -> &[usize] {
        &self.backlog
    }

    /// Overrides backlogs, for tests and scripted scenarios.
    pub fn set_backlog(&mut self, backlog: Vec<usize>) -> Result<()> {
        if backlog.len() != self.n_agents() || backlog.iter().any(|&b| b > self.cfg.max_backlog) {
            return Err(invalid("backlog vector has the wrong shape or range"));
        }
        self.backlog = backlog;
        Ok(())
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = (i / self.cfg.cols, i % self.cfg.cols);
        super::MOVES[1..]
            .iter()
            .filter_map(move |&mv| super::shifted((r, c), mv, self.cfg.rows, self.cfg.cols))
            .map(|(r, c)| r * self.cfg.cols + c)
    }

    fn observe(&self) -> Vec<u64> {
        let radix = (self.cfg.max_backlog + 1) as u64;
        self.backlog
            .iter()
            .enumerate()
            .map(|(i, &b)| i as u64 * radix + b as u64)
            .collect()
    }
}

impl Environment for Aloha {
    fn name(&self) -> &'static str {
        "aloha"
    }

    fn n_agents(&self) -> usize {
        self.cfg.rows * self.cfg.cols
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn obs_space_size(&self) -> u64 {
        (self.n_agents() * (self.cfg.max_backlog + 1)) as u64
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reward_bounds(&self) -> (f64, f64) {
        let n = self.n_agents() as f64;
        (-self.cfg.collision_penalty * n, self.cfg.success_reward * n)
    }

    fn aux_keys(&self) -> &'static [&'static str] {
        &["successes", "collisions"]
    }

    fn reset(&mut self, seed: u64) -> Vec<u64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.backlog = vec![self.cfg.initial_backlog; self.n_agents()];
        self.t = 0;
        self.observe()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        let n = self.n_agents();
        check_actions(actions, n, 2)?;
        let sending: Vec<bool> = (0..n).map(|i| actions[i] == SEND && self.backlog[i] > 0).collect();
        let (mut successes, mut collisions) = (0usize, 0usize);
        for i in 0..n {
            if !sending[i] {
                continue;
            }
            if self.neighbours(i).any(|j| sending[j]) {
                collisions += 1;
            } else {
                successes += 1;
                self.backlog[i] -= 1;
            }
        }
        // one arrival draw per island, in island order
        for b in self.backlog.iter_mut() {
            if self.rng.gen_bool(self.cfg.arrival_prob) {
                *b = (*b + 1).min(self.cfg.max_backlog);
            }
        }
        self.t += 1;
        let reward = self.cfg.success_reward * successes as f64 - self.cfg.collision_penalty * collisions as f64;
        Ok(StepResult {
            observations: self.observe(),
            reward,
            terminal: self.t >= self.cfg.horizon,
            info: info(&[("successes", successes as f64), ("collisions", collisions as f64)]),
        })
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for r in 0..self.cfg.rows {
            let row: Vec<String> = (0..self.cfg.cols)
                .map(|c| self.backlog[r * self.cfg.cols + c].to_string())
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}
