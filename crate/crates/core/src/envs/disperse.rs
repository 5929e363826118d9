//! Hospital staffing under announced demand.
//!
//! Each step one hospital announces a need `x`; on the next step the team is
//! charged `min(0, y - x)` where `y` is the number of agents that moved there.
//! Agents see their current hospital and its announced need.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_actions, info, Environment, StepResult};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisperseConfig {
    pub n_agents: usize,
    pub n_hospitals: usize,
    pub horizon: usize,
}

impl Default for DisperseConfig {
    fn default() -> Self {
        DisperseConfig { n_agents: 12, n_hospitals: 4, horizon: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct Disperse {
    cfg: DisperseConfig,
    location: Vec<usize>,
    announced: usize,
    need: usize,
    t: usize,
    rng: ChaCha8Rng,
}

impl Disperse {
    pub fn new(cfg: DisperseConfig) -> Result<Self> {
        if cfg.n_agents == 0 || cfg.n_hospitals == 0 || cfg.horizon == 0 {
            return Err(invalid("disperse needs agents, hospitals and a horizon"));
        }
        let mut env = Disperse { location: Vec::new(), announced: 0, need: 0, t: 0, rng: ChaCha8Rng::seed_from_u64(0), cfg };
        env.reset(0);
        Ok(env)
    }

    /// Currently announced `(hospital, need)`.
    pub fn announcement(&self) -> (usize, usize) {
        (self.announced, self.need)
    }

    pub fn set_announcement(&mut self, hospital: usize, need: usize) -> Result<()> {
        if hospital >= self.cfg.n_hospitals || need > self.cfg.n_agents {
            return Err(invalid("announcement out of range"));
        }
        self.announced = hospital;
        self.need = need;
        Ok(())
    }

    pub fn locations(&self) -> &[usize] {
        &self.location
    }

    fn announce(&mut self) {
        self.announced = self.rng.gen_range(0..self.cfg.n_hospitals);
        self.need = self.rng.gen_range(1..=self.cfg.n_agents);
    }

    fn observe(&self) -> Vec<u64> {
        let radix = self.cfg.n_agents as u64 + 1;
        self.location
            .iter()
            .map(|&h| h as u64 * radix + if h == self.announced { self.need as u64 } else { 0 })
            .collect()
    }
}

impl Environment for Disperse {
    fn name(&self) -> &'static str {
        "disperse"
    }

    fn n_agents(&self) -> usize {
        self.cfg.n_agents
    }

    fn n_actions(&self) -> usize {
        self.cfg.n_hospitals
    }

    fn obs_space_size(&self) -> u64 {
        (self.cfg.n_hospitals * (self.cfg.n_agents + 1)) as u64
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reward_bounds(&self) -> (f64, f64) {
        (-(self.cfg.n_agents as f64), 0.0)
    }

    fn aux_keys(&self) -> &'static [&'static str] {
        &["shortfall"]
    }

    /// Draws each agent's hospital, then the first announcement.
    fn reset(&mut self, seed: u64) -> Vec<u64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.cfg.n_hospitals;
        self.location = (0..self.cfg.n_agents).map(|_| self.rng.gen_range(0..h)).collect();
        self.announce();
        self.t = 0;
        self.observe()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        check_actions(actions, self.cfg.n_agents, self.cfg.n_hospitals)?;
        self.location.copy_from_slice(actions);
        let present = self.location.iter().filter(|&&h| h == self.announced).count();
        let shortfall = self.need.saturating_sub(present);
        self.announce();
        self.t += 1;
        Ok(StepResult {
            observations: self.observe(),
            reward: -(shortfall as f64),
            terminal: self.t >= self.cfg.horizon,
            info: info(&[("shortfall", shortfall as f64)]),
        })
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for h in 0..self.cfg.n_hospitals {
            let here = self.location.iter().filter(|&&l| l == h).count();
            let need = if h == self.announced { self.need } else { 0 };
            s.push_str(&format!("h{h} agents={here} need={need}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Disperse {
        let mut e = Disperse::new(DisperseConfig::default()).unwrap();
        e.set_announcement(2, 4).unwrap();
        e
    }

    #[test]
    fn enough_staff_costs_nothing() {
        let mut e = env();
        let mut a = vec![0; 12];
        a[..5].fill(2);
        assert_eq!(e.step(&a).unwrap().reward, 0.0);
    }

    #[test]
    fn shortfall_is_charged() {
        let mut e = env();
        let mut a = vec![0; 12];
        a[0] = 2;
        assert_eq!(e.step(&a).unwrap().reward, -3.0);
    }

    #[test]
    fn zero_need_is_free() {
        let mut e = env();
        e.set_announcement(1, 0).unwrap();
        assert_eq!(e.step(&[3; 12]).unwrap().reward, 0.0);
    }

    #[test]
    fn observation_shows_local_need() {
        let mut e = env();
        e.location = vec![2; 12];
        e.location[1] = 0;
        let obs = e.observe();
        assert_eq!(obs[0], 2 * 13 + 4);
        assert_eq!(obs[1], 0);
    }
}
