//! Cooperative benchmark environments behind one interface.
//!
//! Every environment owns a ChaCha8 generator seeded by [`Environment::reset`],
//! so a seed plus an action sequence fully determines the trajectory.
//! Observations are integer codes below [`Environment::obs_space_size`],
//! produced by an injective mixed-radix encoding of the agent's local view.

pub mod aloha;
pub mod disperse;
pub mod gather;
pub mod hallway;
pub mod pursuit;
pub mod sensor;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use aloha::{Aloha, AlohaConfig};
pub use disperse::{Disperse, DisperseConfig};
pub use gather::{Gather, GatherConfig};
pub use hallway::{Hallway, HallwayConfig};
pub use pursuit::{Pursuit, PursuitConfig};
pub use sensor::{Sensor, SensorConfig};

/// Outcome of one joint step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observations: Vec<u64>,
    pub reward: f64,
    pub terminal: bool,
    /// Per-step auxiliary counters, keyed by [`Environment::aux_keys`].
    pub info: BTreeMap<&'static str, f64>,
}

pub trait Environment: Send {
    fn name(&self) -> &'static str;
    fn n_agents(&self) -> usize;
    /// Size of every agent's action set.
    fn n_actions(&self) -> usize;
    /// Every observation code is strictly below this value.
    fn obs_space_size(&self) -> u64;
    fn horizon(&self) -> usize;
    /// Inclusive bounds on any single step's reward.
    fn reward_bounds(&self) -> (f64, f64);
    /// Names of the counters reported in [`StepResult::info`].
    fn aux_keys(&self) -> &'static [&'static str];
    /// Starts a new episode and returns the initial observations.
    fn reset(&mut self, seed: u64) -> Vec<u64>;
    fn step(&mut self, actions: &[usize]) -> Result<StepResult>;
    /// ASCII dump of the current state.
    fn render(&self) -> String;
}

/// Environment selection and parameters, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EnvConfig {
    Aloha(AlohaConfig),
    Pursuit(PursuitConfig),
    Hallway(HallwayConfig),
    Sensor(SensorConfig),
    Gather(GatherConfig),
    Disperse(DisperseConfig),
}

impl EnvConfig {
    pub const NAMES: [&'static str; 6] = ["aloha", "pursuit", "hallway", "sensor", "gather", "disperse"];

    /// Default configuration for a registered name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "aloha" => EnvConfig::Aloha(AlohaConfig::default()),
            "pursuit" => EnvConfig::Pursuit(PursuitConfig::default()),
            "hallway" => EnvConfig::Hallway(HallwayConfig::default()),
            "sensor" => EnvConfig::Sensor(SensorConfig::default()),
            "gather" => EnvConfig::Gather(GatherConfig::default()),
            "disperse" => EnvConfig::Disperse(DisperseConfig::default()),
            other => return Err(invalid(format!("unknown environment {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::Aloha(_) => "aloha",
            EnvConfig::Pursuit(_) => "pursuit",
            EnvConfig::Hallway(_) => "hallway",
            EnvConfig::Sensor(_) => "sensor",
            EnvConfig::Gather(_) => "gather",
            EnvConfig::Disperse(_) => "disperse",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment>> {
        Ok(match self {
            EnvConfig::Aloha(c) => Box::new(Aloha::new(c.clone())?),
            EnvConfig::Pursuit(c) => Box::new(Pursuit::new(c.clone())?),
            EnvConfig::Hallway(c) => Box::new(Hallway::new(c.clone())?),
            EnvConfig::Sensor(c) => Box::new(Sensor::new(c.clone())?),
            EnvConfig::Gather(c) => Box::new(Gather::new(c.clone())?),
            EnvConfig::Disperse(c) => Box::new(Disperse::new(c.clone())?),
        })
    }
}

pub(crate) fn check_actions(actions: &[usize], n_agents: usize, n_actions: usize) -> Result<()> {
    if actions.len() != n_agents {
        return Err(invalid(format!("{} actions for {} agents", actions.len(), n_agents)));
    }
    if let Some(a) = actions.iter().find(|&&a| a >= n_actions) {
        return Err(invalid(format!("action {a} outside 0..{n_actions}")));
    }
    Ok(())
}

/// Grid moves shared by the gridworlds: stay, up, down, left, right.
pub(crate) const MOVES: [(i64, i64); 5] = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)];

pub(crate) fn shifted(pos: (usize, usize), mv: (i64, i64), h: usize, w: usize) -> Option<(usize, usize)> {
    let r = pos.0 as i64 + mv.0;
    let c = pos.1 as i64 + mv.1;
    (r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w).then_some((r as usize, c as usize))
}

pub(crate) fn info(pairs: &[(&'static str, f64)]) -> BTreeMap<&'static str, f64> {
    pairs.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trip() {
        for name in EnvConfig::NAMES {
            let cfg = EnvConfig::by_name(name).unwrap();
            assert_eq!(cfg.name(), name);
            let env = cfg.build().unwrap();
            assert_eq!(env.name(), name);
        }
        assert!(EnvConfig::by_name("smac").is_err());
    }

    #[test]
    fn config_is_tagged_by_name() {
        let cfg: EnvConfig = toml::from_str("name = \"disperse\"\nn_agents = 4\nn_hospitals = 2\nhorizon = 10\n").unwrap();
        match cfg {
            EnvConfig::Disperse(c) => {
                assert_eq!((c.n_agents, c.n_hospitals, c.horizon), (4, 2, 10));
            }
            other => panic!("wrong variant {other:?}"),
        }
        assert!(toml::from_str::<EnvConfig>("name = \"disperse\"\nbogus = 1\n").is_err());
    }
}
