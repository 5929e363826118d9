//! Experiment orchestration: configuration files, multi-seed training runs,
//! sparsity sweeps, evaluation of saved tables and the edge-removal study.
//!
//! All results are CSV. Floats are written in shortest round-trip form, so
//! re-parsing a file recovers the exact values.

mod records;
mod sweep;

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::learner::{train, TrainConfig};
use crate::metrics::{Prop1Config, SmoothingParams};
use crate::sparsify::{EdgeOrder, TopologyCriterion};
use crate::values::{read_checkpoint, write_checkpoint, ValueTables};

pub use records::{aggregate, read_curve_csv, AggregatePoint, CommSummary, RunRecord};
pub use sweep::{evaluate_checkpoints, prop1, sweep_sparsity, EvalRow, SweepRow};

/// Environment variable holding the number of worker threads for seeds.
pub const WORKERS_ENV: &str = "SPARSECG_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Where saved tables are looked up; defaults to `output_dir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_dir: Option<PathBuf>,
    pub env: EnvConfig,
    #[serde(default)]
    pub criterion: TopologyCriterion,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub prop1: Prop1Config,
    #[serde(default)]
    pub smoothing: SmoothingParams,
}

fn default_seeds() -> usize {
    8
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub orders: Vec<EdgeOrder>,
    /// Train from scratch when no saved tables are found.
    pub train: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambdas: (0..=10).map(|k| k as f64 / 10.0).collect(),
            orders: vec![EdgeOrder::Descending],
            train: true,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical text form: every field written out, in declaration order.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    /// SHA-256 of the canonical form with the output locations cleared.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.checkpoint_dir = None;
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_seeds == 0 {
            return Err(config_err("n_seeds must be positive"));
        }
        self.train_config(self.train.seed).validate().map_err(config_err)?;
        self.env.build().map_err(config_err)?;
        if self.sweep.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(config_err("sweep lambdas must lie in [0, 1]"));
        }
        if self.sweep.orders.is_empty() {
            return Err(config_err("sweep orders must not be empty"));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|i| self.train.seed + i).collect()
    }

    /// Training settings for one seed, carrying the top-level criterion.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig { criterion: self.criterion, seed, ..self.train.clone() }
    }

    pub fn checkpoint_dir(&self) -> &Path {
        self.checkpoint_dir.as_deref().unwrap_or(&self.output_dir)
    }
}

pub fn curve_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("curve_seed_{seed}.csv"))
}

pub fn checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("tables_seed_{seed}.ckpt"))
}

pub fn save_tables(tables: &ValueTables, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_checkpoint(tables, &mut out)?;
    Ok(())
}

pub fn load_tables(path: &Path) -> Result<ValueTables> {
    read_checkpoint(BufReader::new(fs::File::open(path)?))
}

/// Runs `f` on a pool sized by [`WORKERS_ENV`], or rayon's default.
pub(crate) fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| config_err(format!("{WORKERS_ENV}={v} is not a count")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Seeds that finished and seeds that failed.
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<(u64, Error)>,
}

/// Trains every seed and writes, under `output_dir`:
/// `config.toml`, `curve_seed_<s>.csv` and `tables_seed_<s>.ckpt` per seed,
/// `aggregate.csv` over the completed seeds and `summary.csv`.
///
/// A failing seed does not stop the others; it is reported in
/// [`RunOutcome::failures`] and left out of the merged files.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let hash = cfg.hash()?;
    let results: Vec<(u64, Result<RunRecord>)> =
        with_workers(|| cfg.seeds().into_par_iter().map(|seed| (seed, run_seed(cfg, &hash, seed))).collect())?;
    let mut outcome = RunOutcome { records: Vec::new(), failures: Vec::new() };
    for (seed, r) in results {
        match r {
            Ok(rec) => outcome.records.push(rec),
            Err(e) => outcome.failures.push((seed, e)),
        }
    }
    let curves: Vec<_> = outcome.records.iter().map(|r| &r.curve).collect();
    records::write_aggregate(&dir.join("aggregate.csv"), &aggregate(&curves)?, &cfg.env.build()?.aux_keys())?;
    records::write_summary(&dir.join("summary.csv"), &outcome.records)?;
    Ok(outcome)
}

fn run_seed(cfg: &ExperimentConfig, hash: &str, seed: u64) -> Result<RunRecord> {
    let mut env = cfg.env.build()?;
    let trained = train(env.as_mut(), &cfg.train_config(seed))?;
    records::write_curve(&curve_path(&cfg.output_dir, seed), &trained.curve)?;
    save_tables(&trained.tables, &checkpoint_path(&cfg.output_dir, seed))?;
    RunRecord::new(hash, seed, env.n_agents(), trained.curve, &cfg.smoothing)
}
