//! Predator-prey pursuit with simultaneous-catch capture.
//!
//! Predators move on a grid and may try to catch a specific prey standing in
//! their Moore neighbourhood. A prey is captured only when at least two
//! predators catch it in the same step; a lone catch is punished. Captured
//! prey and the two lowest-id catchers leave the grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_actions, info, shifted, Environment, StepResult, MOVES};
use crate::error::{invalid, Result};

/// Index of the first catch action; `CATCH + k` targets prey `k`.
pub const CATCH: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PursuitConfig {
    pub rows: usize,
    pub cols: usize,
    pub n_predators: usize,
    pub n_prey: usize,
    pub horizon: usize,
    pub capture_reward: f64,
    pub punishment: f64,
    pub sight_radius: usize,
    /// Include the predator's own cell in its observation.
    pub observe_position: bool,
    /// Include an occupancy mask of other predators within sight.
    pub observe_predators: bool,
    /// Probability that a prey attempts a random move in a step.
    pub prey_move_prob: f64,
    /// Observe only the nearest prey in sight (id and offset) instead of
    /// every prey.
    pub nearest_prey_only: bool,
    /// With `nearest_prey_only`, report a prey in the Moore neighbourhood by
    /// id alone, without its offset.
    pub merge_adjacent: bool,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        PursuitConfig {
            rows: 10,
            cols: 10,
            n_predators: 10,
            n_prey: 5,
            horizon: 50,
            capture_reward: 1.0,
            punishment: 1.0,
            sight_radius: 2,
            observe_position: true,
            observe_predators: true,
            prey_move_prob: 1.0,
            nearest_prey_only: false,
            merge_adjacent: false,
        }
    }
}

type Cell = (usize, usize);

#[derive(Debug, Clone)]
pub struct Pursuit {
    cfg: PursuitConfig,
    predators: Vec<Option<Cell>>,
    prey: Vec<Option<Cell>>,
    t: usize,
    rng: ChaCha8Rng,
}

impl Pursuit {
    pub fn new(cfg: PursuitConfig) -> Result<Self> {
        if cfg.rows * cfg.cols < cfg.n_predators + cfg.n_prey {
            return Err(invalid("pursuit grid too small for its entities"));
        }
        if cfg.n_predators == 0 || cfg.n_prey == 0 || cfg.horizon == 0 {
            return Err(invalid("pursuit needs predators, prey and a horizon"));
        }
        if !(0.0..=1.0).contains(&cfg.prey_move_prob) {
            return Err(invalid("prey_move_prob outside [0, 1]"));
        }
        let mut env = Pursuit {
            predators: vec![None; cfg.n_predators],
            prey: vec![None; cfg.n_prey],
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            cfg,
        };
        let mask_bits = if env.cfg.observe_predators { env.window_radix() - 1 } else { 0 };
        let fits = env
            .prey_radix()
            .and_then(|v| v.checked_mul((env.cfg.rows * env.cfg.cols) as u64))
            .zip(1u64.checked_shl(mask_bits as u32).filter(|_| mask_bits < 63))
            .and_then(|(a, b)| a.checked_mul(b));
        if fits.is_none() {
            return Err(invalid("pursuit observation space does not fit in 64 bits"));
        }
        env.reset(0);
        Ok(env)
    }

    pub fn predators(&self) -> &[Option<Cell>] {
        &self.predators
    }

    pub fn prey(&self) -> &[Option<Cell>] {
        &self.prey
    }

    /// Places entities explicitly, for tests and scripted scenarios.
    pub fn place(&mut self, predators: Vec<Option<Cell>>, prey: Vec<Option<Cell>>) -> Result<()> {
        if predators.len() != self.cfg.n_predators || prey.len() != self.cfg.n_prey {
            return Err(invalid("placement has the wrong entity counts"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in predators.iter().chain(&prey).flatten() {
            if c.0 >= self.cfg.rows || c.1 >= self.cfg.cols || !seen.insert(*c) {
                return Err(invalid(format!("invalid or shared cell {c:?}")));
            }
        }
        self.predators = predators;
        self.prey = prey;
        Ok(())
    }

    pub fn captured(&self) -> usize {
        self.prey.iter().filter(|p| p.is_none()).count()
    }

    pub fn removed_predators(&self) -> usize {
        self.predators.iter().filter(|p| p.is_none()).count()
    }

    fn window_radix(&self) -> u64 {
        let w = 2 * self.cfg.sight_radius as u64 + 1;
        w * w + 1
    }

    /// Number of distinct prey views, if it fits in 64 bits.
    fn prey_radix(&self) -> Option<u64> {
        if self.cfg.nearest_prey_only {
            Some(1 + self.cfg.n_prey as u64 * self.window_radix())
        } else {
            self.window_radix().checked_pow(self.cfg.n_prey as u32)
        }
    }

    fn prey_view(&self, me: Cell) -> u64 {
        let radix = self.window_radix();
        if !self.cfg.nearest_prey_only {
            return self.prey.iter().fold(0, |code, &p| code * radix + self.relative(me, p));
        }
        let nearest = self
            .prey
            .iter()
            .enumerate()
            .filter_map(|(k, p)| p.map(|p| (me.0.abs_diff(p.0).max(me.1.abs_diff(p.1)), k)))
            .filter(|&(d, _)| d <= self.cfg.sight_radius)
            .min();
        // 0: nothing in sight; 1 + k*radix: prey k adjacent (merged); otherwise offset + 2
        match nearest {
            Some((d, k)) if d <= 1 && self.cfg.merge_adjacent => 1 + k as u64 * radix,
            Some((_, k)) => 2 + k as u64 * radix + self.relative(me, self.prey[k]),
            None => 0,
        }
    }

    fn relative(&self, me: Cell, other: Option<Cell>) -> u64 {
        let r = self.cfg.sight_radius as i64;
        let absent = self.window_radix() - 1;
        match other {
            Some(o) => {
                let dr = o.0 as i64 - me.0 as i64;
                let dc = o.1 as i64 - me.1 as i64;
                if dr.abs() <= r && dc.abs() <= r {
                    ((dr + r) * (2 * r + 1) + (dc + r)) as u64
                } else {
                    absent
                }
            }
            None => absent,
        }
    }

    fn removed_code(&self) -> u64 {
        let mut size = self.prey_radix().expect("checked at construction");
        if self.cfg.observe_predators {
            size <<= self.window_radix() - 1;
        }
        if self.cfg.observe_position {
            size *= (self.cfg.rows * self.cfg.cols) as u64;
        }
        size
    }

    fn observe(&self) -> Vec<u64> {
        let radix = self.window_radix();
        (0..self.cfg.n_predators)
            .map(|i| {
                let Some(me) = self.predators[i] else {
                    return self.removed_code();
                };
                let mut code = 0u64;
                if self.cfg.observe_position {
                    code = (me.0 * self.cfg.cols + me.1) as u64;
                }
                code = code * self.prey_radix().expect("checked at construction") + self.prey_view(me);
                if self.cfg.observe_predators {
                    let mut mask = 0u64;
                    for (j, &q) in self.predators.iter().enumerate() {
                        let cell = self.relative(me, q);
                        if j != i && cell < radix - 1 {
                            mask |= 1 << cell;
                        }
                    }
                    code = (code << (radix - 1)) | mask;
                }
                code
            })
            .collect()
    }

    fn occupied(&self, c: Cell) -> bool {
        self.predators.iter().chain(&self.prey).any(|&o| o == Some(c))
    }
}

fn adjacent(a: Cell, b: Cell) -> bool {
    a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1
}

impl Environment for Pursuit {
    fn name(&self) -> &'static str {
        "pursuit"
    }

    fn n_agents(&self) -> usize {
        self.cfg.n_predators
    }

    fn n_actions(&self) -> usize {
        CATCH + self.cfg.n_prey
    }

    fn obs_space_size(&self) -> u64 {
        self.removed_code() + 1
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reward_bounds(&self) -> (f64, f64) {
        let n = self.cfg.n_predators;
        let lone = n.min(self.cfg.n_prey) as f64;
        let caught = (n / 2).min(self.cfg.n_prey) as f64;
        (-self.cfg.punishment * lone, self.cfg.capture_reward * caught)
    }

    fn aux_keys(&self) -> &'static [&'static str] {
        &["captures", "lone_catches"]
    }

    /// Samples distinct cells for predators then prey.
    fn reset(&mut self, seed: u64) -> Vec<u64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, p) = (self.cfg.n_predators, self.cfg.n_prey);
        let cells = rand::seq::index::sample(&mut self.rng, self.cfg.rows * self.cfg.cols, n + p);
        let at = |k: usize| Some((k / self.cfg.cols, k % self.cfg.cols));
        let cells: Vec<usize> = cells.into_vec();
        self.predators = cells[..n].iter().map(|&k| at(k)).collect();
        self.prey = cells[n..].iter().map(|&k| at(k)).collect();
        self.t = 0;
        self.observe()
    }

    /// Resolves catches on current positions, then moves predators in id
    /// order, then prey in id order; moves into walls or occupied cells fail.
    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        check_actions(actions, self.cfg.n_predators, self.n_actions())?;
        let mut reward = 0.0;
        let (mut captures, mut lone) = (0usize, 0usize);
        let mut catchers: Vec<Vec<usize>> = vec![Vec::new(); self.cfg.n_prey];
        for (i, &a) in actions.iter().enumerate() {
            if a < CATCH {
                continue;
            }
            let k = a - CATCH;
            if let (Some(me), Some(prey)) = (self.predators[i], self.prey[k]) {
                if adjacent(me, prey) {
                    catchers[k].push(i);
                }
            }
        }
        for (k, who) in catchers.iter().enumerate() {
            match who.len() {
                0 => {}
                1 => {
                    reward -= self.cfg.punishment;
                    lone += 1;
                }
                _ => {
                    reward += self.cfg.capture_reward;
                    captures += 1;
                    self.prey[k] = None;
                    self.predators[who[0]] = None;
                    self.predators[who[1]] = None;
                }
            }
        }
        for (i, &a) in actions.iter().enumerate() {
            let Some(me) = self.predators[i] else { continue };
            if a == 0 || a >= CATCH {
                continue;
            }
            if let Some(next) = shifted(me, MOVES[a], self.cfg.rows, self.cfg.cols) {
                if !self.occupied(next) {
                    self.predators[i] = Some(next);
                }
            }
        }
        // prey k consumes one draw for the move decision, plus one for the direction if it moves
        for k in 0..self.cfg.n_prey {
            let Some(at) = self.prey[k] else { continue };
            if !self.rng.gen_bool(self.cfg.prey_move_prob) {
                continue;
            }
            let mv = MOVES[self.rng.gen_range(0..MOVES.len())];
            if let Some(next) = shifted(at, mv, self.cfg.rows, self.cfg.cols) {
                if next != at && !self.occupied(next) {
                    self.prey[k] = Some(next);
                }
            }
        }
        self.t += 1;
        let alive = self.predators.iter().flatten().count();
        let terminal = self.t >= self.cfg.horizon || self.prey.iter().all(Option::is_none) || alive < 2;
        Ok(StepResult {
            observations: self.observe(),
            reward,
            terminal,
            info: info(&[("captures", captures as f64), ("lone_catches", lone as f64)]),
        })
    }

    fn render(&self) -> String {
        let mut grid = vec![vec!['.'; self.cfg.cols]; self.cfg.rows];
        for (i, c) in self.predators.iter().enumerate() {
            if let Some((r, c)) = c {
                grid[*r][*c] = char::from_digit((i % 10) as u32, 10).unwrap_or('P');
            }
        }
        for (r, c) in self.prey.iter().flatten() {
            grid[*r][*c] = '*';
        }
        grid.into_iter().map(|row| row.into_iter().collect::<String>() + "\n").collect()
    }
}
