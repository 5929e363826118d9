//! Grouped chain walkers that must reach the goal together.
//!
//! Each agent walks its own chain toward the goal cell 0. A group scores when
//! all of its members reach the goal in the same step; an agent arriving ahead
//! of its groupmates dissolves the group without reward. Groups arriving in
//! the same step clash, stay where they were and cost `0.5` each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_actions, info, Environment, StepResult};
use crate::error::{invalid, Result};

pub const STAY: usize = 0;
pub const LEFT: usize = 1;
pub const RIGHT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HallwayConfig {
    /// Members per group; agents are numbered group by group.
    pub group_sizes: Vec<usize>,
    /// Explicit chain length per agent; drawn from the range below when empty.
    pub lengths: Vec<usize>,
    pub min_length: usize,
    pub max_length: usize,
    pub layout_seed: u64,
    pub win_reward: f64,
    pub clash_penalty: f64,
    /// Extra steps on top of the longest chain.
    pub horizon_slack: usize,
}

impl Default for HallwayConfig {
    fn default() -> Self {
        HallwayConfig {
            group_sizes: vec![3, 3, 3, 3],
            lengths: Vec::new(),
            min_length: 4,
            max_length: 8,
            layout_seed: 0,
            win_reward: 1.0,
            clash_penalty: 0.5,
            horizon_slack: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hallway {
    cfg: HallwayConfig,
    lengths: Vec<usize>,
    group: Vec<usize>,
    pos: Vec<Option<usize>>,
    t: usize,
    rng: ChaCha8Rng,
}

impl Hallway {
    pub fn new(cfg: HallwayConfig) -> Result<Self> {
        let n: usize = cfg.group_sizes.iter().sum();
        if n == 0 || cfg.group_sizes.contains(&0) {
            return Err(invalid("hallway groups must be non-empty"));
        }
        let lengths = if cfg.lengths.is_empty() {
            if cfg.min_length == 0 || cfg.min_length > cfg.max_length {
                return Err(invalid("hallway length range is empty"));
            }
            let mut layout = ChaCha8Rng::seed_from_u64(cfg.layout_seed);
            (0..n).map(|_| layout.gen_range(cfg.min_length..=cfg.max_length)).collect()
        } else {
            if cfg.lengths.len() != n || cfg.lengths.contains(&0) {
                return Err(invalid("hallway needs one positive length per agent"));
            }
            cfg.lengths.clone()
        };
        let group = cfg
            .group_sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat(g).take(s))
            .collect();
        let mut env = Hallway {
            pos: vec![None; n],
            group,
            lengths,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            cfg,
        };
        env.reset(0);
        Ok(env)
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn positions(&self) -> &[Option<usize>] {
        &self.pos
    }

    /// Overrides positions, for tests and scripted scenarios.
    pub fn set_positions(&mut self, pos: Vec<Option<usize>>) -> Result<()> {
        if pos.len() != self.pos.len() || pos.iter().zip(&self.lengths).any(|(p, &l)| p.is_some_and(|p| p > l)) {
            return Err(invalid("positions have the wrong shape or range"));
        }
        self.pos = pos;
        Ok(())
    }

    fn n_groups(&self) -> usize {
        self.cfg.group_sizes.len()
    }

    fn max_length(&self) -> usize {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    fn observe(&self) -> Vec<u64> {
        let removed = self.max_length() as u64 + 1;
        self.pos.iter().map(|p| p.map_or(removed, |p| p as u64)).collect()
    }
}

impl Environment for Hallway {
    fn name(&self) -> &'static str {
        "hallway"
    }

    fn n_agents(&self) -> usize {
        self.pos.len()
    }

    fn n_actions(&self) -> usize {
        3
    }

    fn obs_space_size(&self) -> u64 {
        self.max_length() as u64 + 2
    }

    fn horizon(&self) -> usize {
        self.max_length() + self.cfg.horizon_slack
    }

    fn reward_bounds(&self) -> (f64, f64) {
        (-self.cfg.clash_penalty * self.n_groups() as f64, self.cfg.win_reward)
    }

    fn aux_keys(&self) -> &'static [&'static str] {
        &["wins", "clashes"]
    }

    /// Spawns each agent uniformly on `1..=l_i`, in agent order.
    fn reset(&mut self, seed: u64) -> Vec<u64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.pos = self.lengths.iter().map(|&l| Some(self.rng.gen_range(1..=l))).collect();
        self.t = 0;
        self.observe()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        let n = self.n_agents();
        check_actions(actions, n, 3)?;
        let proposed: Vec<Option<usize>> = (0..n)
            .map(|i| {
                self.pos[i].map(|p| match actions[i] {
                    LEFT => p.saturating_sub(1),
                    RIGHT => (p + 1).min(self.lengths[i]),
                    _ => p,
                })
            })
            .collect();
        let (mut arriving, mut partial) = (Vec::new(), Vec::new());
        for g in 0..self.n_groups() {
            let members: Vec<usize> = (0..n).filter(|&i| self.group[i] == g && proposed[i].is_some()).collect();
            let at_goal = members.iter().filter(|&&i| proposed[i] == Some(0)).count();
            if members.is_empty() || at_goal == 0 {
                continue;
            }
            if at_goal == members.len() {
                arriving.push(g);
            } else {
                partial.push(g);
            }
        }
        let mut next = proposed;
        let mut reward = 0.0;
        let (mut wins, mut clashes) = (0usize, 0usize);
        for &g in &partial {
            for i in (0..n).filter(|&i| self.group[i] == g) {
                next[i] = None;
            }
        }
        if arriving.len() == 1 {
            reward += self.cfg.win_reward;
            wins = 1;
            for i in (0..n).filter(|&i| self.group[i] == arriving[0]) {
                next[i] = None;
            }
        } else if arriving.len() > 1 {
            reward -= self.cfg.clash_penalty * arriving.len() as f64;
            clashes = arriving.len();
            for i in (0..n).filter(|&i| arriving.contains(&self.group[i])) {
                next[i] = self.pos[i];
            }
        }
        self.pos = next;
        self.t += 1;
        let terminal = self.t >= self.horizon() || self.pos.iter().all(Option::is_none);
        Ok(StepResult {
            observations: self.observe(),
            reward,
            terminal,
            info: info(&[("wins", wins as f64), ("clashes", clashes as f64)]),
        })
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.pos.iter().enumerate() {
            let mut line: Vec<char> = vec!['.'; self.lengths[i] + 1];
            line[0] = 'G';
            if let Some(p) = p {
                line[*p] = 'a';
            }
            s.push_str(&format!("g{} {}\n", self.group[i], line.into_iter().collect::<String>()));
        }
        s
    }
}
