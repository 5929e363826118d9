use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsecg::experiment::{self, ExperimentConfig};
use sparsecg::sparsify::CriterionKind;
use sparsecg::Error;

/// Sparse coordination graph experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed and write curves, tables, aggregate and summary CSVs.
    Run(Common),
    /// Evaluate trained tables over a range of edge budgets.
    SweepSparsity(Common),
    /// Monte-Carlo edge-removal study.
    Prop1(Common),
    /// Evaluate saved tables under a topology criterion.
    Eval(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Base seed; seeds are base, base+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// One of qvar, delta_max, delta_var, random, full, none.
    #[arg(long)]
    criterion: Option<CriterionKind>,
    /// Edge budget. sweep-sparsity accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self, lambda_list: bool) -> sparsecg::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.train.seed = s;
            cfg.prop1.seed = s;
        }
        if let Some(k) = self.criterion {
            cfg.criterion.kind = k;
        }
        match (lambda_list, self.lambda.as_slice()) {
            (true, l) if !l.is_empty() => cfg.sweep.lambdas = l.to_vec(),
            (false, [l]) => cfg.criterion.lambda = *l,
            (false, l) if l.len() > 1 => return Err(Error::Config("--lambda takes one value here".into())),
            _ => {}
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exec(cmd: &Command) -> sparsecg::Result<bool> {
    match cmd {
        Command::Run(c) => {
            let cfg = c.load(false)?;
            let out = experiment::run(&cfg)?;
            for r in &out.records {
                println!("seed {}: final {} temporal {}", r.seed, r.final_performance, r.temporal_average);
            }
            for (seed, e) in &out.failures {
                eprintln!("seed {seed} failed: {e}");
            }
            Ok(out.failures.is_empty())
        }
        Command::SweepSparsity(c) => {
            let cfg = c.load(true)?;
            let rows = experiment::sweep_sparsity(&cfg, &cfg.sweep.lambdas)?;
            println!("{} rows written to {}", rows.len(), cfg.output_dir.join("sweep.csv").display());
            Ok(true)
        }
        Command::Prop1(c) => {
            let cfg = c.load(false)?;
            let rep = experiment::prop1(&cfg)?;
            for b in &rep.bins {
                println!(
                    "zeta [{:.4}, {:.4}]: unchanged {:.3} ci [{:.3}, {:.3}] mean bound {:.3}",
                    b.zeta_lo, b.zeta_hi, b.unchanged_freq, b.ci_lo, b.ci_hi, b.mean_bound
                );
            }
            if let Some(b) = &rep.positive {
                println!(
                    "{} edges with a positive bound: unchanged {:.3} ci [{:.3}, {:.3}] mean bound {:.3}",
                    b.count, b.unchanged_freq, b.ci_lo, b.ci_hi, b.mean_bound
                );
            }
            Ok(true)
        }
        Command::Eval(c) => {
            let cfg = c.load(false)?;
            for r in experiment::evaluate_checkpoints(&cfg)? {
                println!("seed {}: return median {} mean {} edges {}", r.seed, r.return_median, r.return_mean, r.edges_used_mean);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match exec(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
