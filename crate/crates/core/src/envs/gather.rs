//! Goal gathering with a hidden optimal goal.
//!
//! Agents roam a grid with three goal cells, one of which is secretly optimal
//! for the episode. Only agents spawning near the optimal goal learn which one
//! it is. Scoring happens once every agent stands on a goal, or at the horizon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_actions, info, shifted, Environment, StepResult, MOVES};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatherConfig {
    pub rows: usize,
    pub cols: usize,
    pub n_agents: usize,
    pub horizon: usize,
    pub knowledge_radius: usize,
    pub optimal_reward: f64,
    pub suboptimal_reward: f64,
    pub partial_penalty: f64,
}

impl Default for GatherConfig {
    fn default() -> Self {
        GatherConfig {
            rows: 8,
            cols: 8,
            n_agents: 5,
            horizon: 20,
            knowledge_radius: 2,
            optimal_reward: 10.0,
            suboptimal_reward: 5.0,
            partial_penalty: 5.0,
        }
    }
}

type Cell = (usize, usize);

#[derive(Debug, Clone)]
pub struct Gather {
    cfg: GatherConfig,
    pos: Vec<Cell>,
    knows: Vec<bool>,
    optimal: usize,
    t: usize,
    rng: ChaCha8Rng,
}

impl Gather {
    pub fn new(cfg: GatherConfig) -> Result<Self> {
        if cfg.rows < 2 || cfg.cols < 2 || cfg.n_agents == 0 || cfg.horizon == 0 {
            return Err(invalid("gather needs a 2x2 grid or larger, agents and a horizon"));
        }
        let mut env = Gather {
            pos: Vec::new(),
            knows: Vec::new(),
            optimal: 0,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            cfg,
        };
        env.reset(0);
        Ok(env)
    }

    /// Goal cells: top-left, top-right, bottom-left.
    pub fn goals(&self) -> [Cell; 3] {
        [(0, 0), (0, self.cfg.cols - 1), (self.cfg.rows - 1, 0)]
    }

    pub fn optimal_goal(&self) -> usize {
        self.optimal
    }

    pub fn positions(&self) -> &[Cell] {
        &self.pos
    }

    /// Overrides positions and the optimal goal, for tests and scripted scenarios.
    pub fn set_state(&mut self, pos: Vec<Cell>, optimal: usize) -> Result<()> {
        if pos.len() != self.cfg.n_agents || optimal >= 3 || pos.iter().any(|c| c.0 >= self.cfg.rows || c.1 >= self.cfg.cols) {
            return Err(invalid("invalid gather state"));
        }
        self.pos = pos;
        self.optimal = optimal;
        Ok(())
    }

    fn goal_at(&self, c: Cell) -> Option<usize> {
        self.goals().iter().position(|&g| g == c)
    }

    fn observe(&self) -> Vec<u64> {
        self.pos
            .iter()
            .zip(&self.knows)
            .map(|(p, &k)| {
                let cell = (p.0 * self.cfg.cols + p.1) as u64;
                cell * 4 + if k { self.optimal as u64 + 1 } else { 0 }
            })
            .collect()
    }

    fn score(&self) -> f64 {
        let on: Vec<Option<usize>> = self.pos.iter().map(|&p| self.goal_at(p)).collect();
        let at_optimal = on.iter().filter(|&&g| g == Some(self.optimal)).count();
        if at_optimal == on.len() {
            self.cfg.optimal_reward
        } else if at_optimal > 0 {
            -self.cfg.partial_penalty
        } else if on[0].is_some() && on.iter().all(|&g| g == on[0]) {
            self.cfg.suboptimal_reward
        } else {
            0.0
        }
    }
}

impl Environment for Gather {
    fn name(&self) -> &'static str {
        "gather"
    }

    fn n_agents(&self) -> usize {
        self.cfg.n_agents
    }

    fn n_actions(&self) -> usize {
        MOVES.len()
    }

    fn obs_space_size(&self) -> u64 {
        (self.cfg.rows * self.cfg.cols * 4) as u64
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reward_bounds(&self) -> (f64, f64) {
        (-self.cfg.partial_penalty, self.cfg.optimal_reward.max(self.cfg.suboptimal_reward))
    }

    fn aux_keys(&self) -> &'static [&'static str] {
        &["optimal_gathers"]
    }

    /// Draws the optimal goal, then each agent's spawn cell.
    fn reset(&mut self, seed: u64) -> Vec<u64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.optimal = self.rng.gen_range(0..3);
        let (h, w) = (self.cfg.rows, self.cfg.cols);
        self.pos = (0..self.cfg.n_agents).map(|_| (self.rng.gen_range(0..h), self.rng.gen_range(0..w))).collect();
        let g = self.goals()[self.optimal];
        let r = self.cfg.knowledge_radius;
        self.knows = self.pos.iter().map(|p| p.0.abs_diff(g.0) <= r && p.1.abs_diff(g.1) <= r).collect();
        self.t = 0;
        self.observe()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        check_actions(actions, self.cfg.n_agents, MOVES.len())?;
        for (p, &a) in self.pos.iter_mut().zip(actions) {
            if let Some(next) = shifted(*p, MOVES[a], self.cfg.rows, self.cfg.cols) {
                *p = next;
            }
        }
        self.t += 1;
        let all_on_goals = self.pos.iter().all(|&p| self.goal_at(p).is_some());
        let terminal = all_on_goals || self.t >= self.cfg.horizon;
        let reward = if terminal { self.score() } else { 0.0 };
        let optimal = (terminal && reward == self.cfg.optimal_reward) as u8 as f64;
        Ok(StepResult {
            observations: self.observe(),
            reward,
            terminal,
            info: info(&[("optimal_gathers", optimal)]),
        })
    }

    fn render(&self) -> String {
        let mut grid = vec![vec!['.'; self.cfg.cols]; self.cfg.rows];
        for (k, g) in self.goals().iter().enumerate() {
            grid[g.0][g.1] = if k == self.optimal { 'G' } else { 'g' };
        }
        for p in &self.pos {
            grid[p.0][p.1] = 'a';
        }
        grid.into_iter().map(|row| row.into_iter().collect::<String>() + "\n").collect()
    }
}
