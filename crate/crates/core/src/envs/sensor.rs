//! Sensor-network target tracking.
//!
//! Sensors sit on a lattice and may scan one of the eight surrounding cells,
//! paying 1 per scan. A target whose cell is scanned by `k >= 2` sensors in
//! the same step yields `1.5 * k`. Targets random-walk after scoring.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_actions, info, shifted, Environment, StepResult, MOVES};
use crate::error::{invalid, Result};

pub const NOOP: usize = 0;

/// Scan offsets for actions `1..=8`.
pub const SCAN_DIRECTIONS: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub rows: usize,
    pub cols: usize,
    pub n_targets: usize,
    pub horizon: usize,
    pub scan_cost: f64,
    pub reward_per_scanner: f64,
    pub min_scanners: usize,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            rows: 3,
            cols: 5,
            n_targets: 3,
            horizon: 20,
            scan_cost: 1.0,
            reward_per_scanner: 1.5,
            min_scanners: 2,
        }
    }
}

type Cell = (usize, usize);

#[derive(Debug, Clone)]
pub struct Sensor {
    cfg: SensorConfig,
    targets: Vec<Cell>,
    t: usize,
    rng: ChaCha8Rng,
}

impl Sensor {
    pub fn new(cfg: SensorConfig) -> Result<Self> {
        if cfg.rows * cfg.cols == 0 || cfg.n_targets == 0 || cfg.horizon == 0 {
            return Err(invalid("sensor needs a lattice, targets and a horizon"));
        }
        if cfg.n_targets > 19 {
            return Err(invalid("sensor observation space does not fit in 64 bits"));
        }
        let mut env = Sensor { targets: Vec::new(), t: 0, rng: ChaCha8Rng::seed_from_u64(0), cfg };
        env.reset(0);
        Ok(env)
    }

    pub fn targets(&self) -> &[Cell] {
        &self.targets
    }

    /// Places targets explicitly, for tests and scripted scenarios.
    pub fn set_targets(&mut self, targets: Vec<Cell>) -> Result<()> {
        if targets.len() != self.cfg.n_targets || targets.iter().any(|c| c.0 >= self.cfg.rows || c.1 >= self.cfg.cols) {
            return Err(invalid("targets have the wrong count or lie off the lattice"));
        }
        self.targets = targets;
        Ok(())
    }

    fn cell(&self, i: usize) -> Cell {
        (i / self.cfg.cols, i % self.cfg.cols)
    }

    fn observe(&self) -> Vec<u64> {
        (0..self.n_agents())
            .map(|i| {
                let me = self.cell(i);
                self.targets.iter().fold(0u64, |code, t| {
                    let (dr, dc) = (t.0 as i64 - me.0 as i64, t.1 as i64 - me.1 as i64);
                    let digit = if dr.abs() <= 1 && dc.abs() <= 1 { ((dr + 1) * 3 + dc + 1) as u64 } else { 9 };
                    code * 10 + digit
                })
            })
            .collect()
    }
}

impl Environment for Sensor {
    fn name(&self) -> &'static str {
        "sensor"
    }

    fn n_agents(&self) -> usize {
        self.cfg.rows * self.cfg.cols
    }

    fn n_actions(&self) -> usize {
        1 + SCAN_DIRECTIONS.len()
    }

    fn obs_space_size(&self) -> u64 {
        10u64.pow(self.cfg.n_targets as u32)
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reward_bounds(&self) -> (f64, f64) {
        let n = self.n_agents() as f64;
        let best = self.cfg.reward_per_scanner * self.cfg.n_targets as f64 - self.cfg.scan_cost;
        (-self.cfg.scan_cost * n, best.max(0.0) * n)
    }

    fn aux_keys(&self) -> &'static [&'static str] {
        &["targets_scanned", "scans"]
    }

    /// Draws each target's cell uniformly, in target order.
    fn reset(&mut self, seed: u64) -> Vec<u64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n_agents();
        let cells: Vec<usize> = (0..self.cfg.n_targets).map(|_| self.rng.gen_range(0..n)).collect();
        self.targets = cells.into_iter().map(|k| self.cell(k)).collect();
        self.t = 0;
        self.observe()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        check_actions(actions, self.n_agents(), self.n_actions())?;
        let mut scanned: Vec<Cell> = Vec::new();
        let mut scans = 0usize;
        for (i, &a) in actions.iter().enumerate() {
            if a == NOOP {
                continue;
            }
            scans += 1;
            if let Some(c) = shifted(self.cell(i), SCAN_DIRECTIONS[a - 1], self.cfg.rows, self.cfg.cols) {
                scanned.push(c);
            }
        }
        let mut reward = -self.cfg.scan_cost * scans as f64;
        let mut hit = 0usize;
        for t in &self.targets {
            let k = scanned.iter().filter(|&c| c == t).count();
            if k >= self.cfg.min_scanners {
                reward += self.cfg.reward_per_scanner * k as f64;
                hit += 1;
            }
        }
        for k in 0..self.targets.len() {
            let mv = MOVES[self.rng.gen_range(0..MOVES.len())];
            if let Some(next) = shifted(self.targets[k], mv, self.cfg.rows, self.cfg.cols) {
                self.targets[k] = next;
            }
        }
        self.t += 1;
        Ok(StepResult {
            observations: self.observe(),
            reward,
            terminal: self.t >= self.cfg.horizon,
            info: info(&[("targets_scanned", hit as f64), ("scans", scans as f64)]),
        })
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for r in 0..self.cfg.rows {
            for c in 0..self.cfg.cols {
                let k = self.targets.iter().filter(|&&t| t == (r, c)).count();
                s.push(if k == 0 { 'o' } else { char::from_digit(k.min(9) as u32, 10).unwrap_or('T') });
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Sensor {
        let mut e = Sensor::new(SensorConfig { rows: 2, cols: 3, n_targets: 1, ..Default::default() }).unwrap();
        e.set_targets(vec![(0, 1)]).unwrap();
        e
    }

    #[test]
    fn pair_scan_scores() {
        let mut e = env();
        // sensor 0 at (0,0) scans east, sensor 2 at (0,2) scans west
        let r = e.step(&[5, 0, 4, 0, 0, 0]).unwrap();
        assert_eq!(r.reward, 1.0);
        assert_eq!(r.info["targets_scanned"], 1.0);
    }

    #[test]
    fn single_scan_costs() {
        let mut e = env();
        assert_eq!(e.step(&[5, 0, 0, 0, 0, 0]).unwrap().reward, -1.0);
        let mut e = env();
        assert_eq!(e.step(&[1, 0, 0, 0, 0, 0]).unwrap().reward, -1.0);
    }

    #[test]
    fn noop_is_free() {
        let mut e = env();
        assert_eq!(e.step(&[NOOP; 6]).unwrap().reward, 0.0);
    }

    #[test]
    fn observation_sees_neighbourhood() {
        let mut e = env();
        e.set_targets(vec![(1, 2)]).unwrap();
        let obs = e.observe();
        assert_eq!(obs[0], 9);
        assert_eq!(obs[4], 5);
        assert_eq!(obs[5], 4);
    }
}
