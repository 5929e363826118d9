use std::fs;

use rayon::prelude::*;

use super::records::{num, write_rows};
use super::{checkpoint_path, config_err, load_tables, with_workers, ExperimentConfig};
use crate::envs::Environment;
use crate::error::Result;
use crate::learner::{evaluate, train, EvalReport, Selection};
use crate::metrics::{median_iqr, prop1_experiment, Prop1Report};
use crate::sparsify::{CriterionKind, EdgeOrder, TopologyCriterion};
use crate::values::ValueTables;

/// Greedy evaluation of one seed's tables under one topology rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub seed: u64,
    pub criterion: TopologyCriterion,
    pub order: EdgeOrder,
    pub return_mean: f64,
    pub return_median: f64,
    pub return_p25: f64,
    pub return_p75: f64,
    pub aux_means: Vec<f64>,
    pub edges_used_mean: f64,
    pub messages_per_selection: f64,
}

pub type SweepRow = EvalRow;

impl EvalRow {
    fn new(seed: u64, sel: &Selection, rep: &EvalReport) -> Self {
        let mut sorted = rep.returns.clone();
        sorted.sort_by(f64::total_cmp);
        let (return_median, return_p25, return_p75) = median_iqr(&sorted);
        EvalRow {
            seed,
            criterion: sel.criterion,
            order: sel.order,
            return_mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            return_median,
            return_p25,
            return_p75,
            aux_means: rep.aux_means(),
            edges_used_mean: rep.edges_used_mean,
            messages_per_selection: rep.messages_per_selection,
        }
    }
}

fn order_name(o: EdgeOrder) -> &'static str {
    match o {
        EdgeOrder::Descending => "descending",
        EdgeOrder::Ascending => "ascending",
    }
}

fn write_eval_rows(path: &std::path::Path, rows: &[EvalRow], aux_keys: &[&str]) -> Result<()> {
    let mut header: Vec<String> = [
        "seed",
        "criterion",
        "order",
        "lambda",
        "return_mean",
        "return_median",
        "return_p25",
        "return_p75",
        "edges_used_mean",
        "messages_per_selection",
    ]
    .map(String::from)
    .to_vec();
    header.extend(aux_keys.iter().map(|k| k.to_string()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.seed.to_string(), r.criterion.kind.to_string(), order_name(r.order).to_string()];
            v.extend(
                [
                    r.criterion.lambda,
                    r.return_mean,
                    r.return_median,
                    r.return_p25,
                    r.return_p75,
                    r.edges_used_mean,
                    r.messages_per_selection,
                ]
                .map(num),
            );
            v.extend(r.aux_means.iter().copied().map(num));
            v
        })
        .collect();
    write_rows(path, &header, &body)
}

fn tables_for(cfg: &ExperimentConfig, env: &mut dyn Environment, seed: u64, allow_train: bool) -> Result<ValueTables> {
    let path = checkpoint_path(cfg.checkpoint_dir(), seed);
    let tables = if path.exists() {
        load_tables(&path)?
    } else if allow_train {
        train(env, &cfg.train_config(seed))?.tables
    } else {
        return Err(config_err(format!("missing checkpoint {}", path.display())));
    };
    if tables.n_actions() != env.n_actions() {
        return Err(config_err(format!("{} holds {} actions, environment has {}", path.display(), tables.n_actions(), env.n_actions())));
    }
    Ok(tables)
}

fn selection(cfg: &ExperimentConfig, lambda: f64, order: EdgeOrder) -> Selection {
    Selection {
        criterion: TopologyCriterion { lambda, ..cfg.criterion },
        order,
        maxsum: cfg.train.maxsum(),
    }
}

/// Evaluates each seed's tables at every budget in `lambdas` (sorted
/// ascending) and every configured edge order, and writes `sweep.csv`.
///
/// Tables come from the checkpoint directory; seeds without saved tables
/// are trained first when `sweep.train` is set and are an error otherwise.
/// Every row of a seed replays the same evaluation episodes.
pub fn sweep_sparsity(cfg: &ExperimentConfig, lambdas: &[f64]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if !(cfg.criterion.kind.is_scored() || cfg.criterion.kind == CriterionKind::Random) {
        return Err(config_err(format!("criterion {} has no edge budget to sweep", cfg.criterion.kind)));
    }
    if lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(config_err("lambdas must lie in [0, 1]"));
    }
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let per_seed: Vec<Result<Vec<SweepRow>>> = with_workers(|| {
        cfg.seeds()
            .into_par_iter()
            .map(|seed| {
                let mut env = cfg.env.build()?;
                let tables = tables_for(cfg, env.as_mut(), seed, cfg.sweep.train)?;
                let mut rows = Vec::new();
                for &order in &cfg.sweep.orders {
                    for &lambda in &lambdas {
                        let sel = selection(cfg, lambda, order);
                        let rep = evaluate(env.as_mut(), &tables, &tables, &sel, cfg.train.history, cfg.train.eval_episodes, seed)?;
                        rows.push(EvalRow::new(seed, &sel, &rep));
                    }
                }
                Ok(rows)
            })
            .collect()
    })?;
    let rows: Vec<SweepRow> = per_seed.into_iter().collect::<Result<Vec<_>>>()?.concat();
    fs::create_dir_all(&cfg.output_dir)?;
    write_eval_rows(&cfg.output_dir.join("sweep.csv"), &rows, &cfg.env.build()?.aux_keys())?;
    Ok(rows)
}

/// Greedy evaluation of every seed's saved tables under the configured
/// criterion; writes `eval.csv`.
pub fn evaluate_checkpoints(cfg: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    cfg.validate()?;
    let per_seed: Vec<Result<EvalRow>> = with_workers(|| {
        cfg.seeds()
            .into_par_iter()
            .map(|seed| {
                let mut env = cfg.env.build()?;
                let tables = tables_for(cfg, env.as_mut(), seed, false)?;
                let sel = selection(cfg, cfg.criterion.lambda, EdgeOrder::Descending);
                let rep = evaluate(env.as_mut(), &tables, &tables, &sel, cfg.train.history, cfg.train.eval_episodes, seed)?;
                Ok(EvalRow::new(seed, &sel, &rep))
            })
            .collect()
    })?;
    let rows = per_seed.into_iter().collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_eval_rows(&cfg.output_dir.join("eval.csv"), &rows, &cfg.env.build()?.aux_keys())?;
    Ok(rows)
}

/// Runs the edge-removal study of `cfg.prop1`; writes `prop1_rows.csv` and
/// `prop1_bins.csv`.
pub fn prop1(cfg: &ExperimentConfig) -> Result<Prop1Report> {
    let report = prop1_experiment(&cfg.prop1)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.instance.to_string(),
                r.edge.lo().to_string(),
                r.edge.hi().to_string(),
                num(r.zeta),
                u8::from(r.changed).to_string(),
                num(r.bound),
            ]
        })
        .collect();
    let header = ["instance", "agent_i", "agent_j", "zeta", "changed", "bound"].map(String::from);
    write_rows(&cfg.output_dir.join("prop1_rows.csv"), &header, &rows)?;
    let groups = report.bins.iter().map(|b| ("zeta_bin", b)).chain(report.positive.iter().map(|b| ("positive_bound", b)));
    let bins: Vec<Vec<String>> = groups
        .map(|(group, b)| {
            let mut v = vec![group.to_string(), num(b.zeta_lo), num(b.zeta_hi), b.count.to_string()];
            v.extend([b.unchanged_freq, b.ci_lo, b.ci_hi].map(num));
            v.push(b.positive_bounds.to_string());
            v.extend([b.max_bound, b.mean_bound].map(num));
            v
        })
        .collect();
    let header = [
        "group",
        "zeta_lo",
        "zeta_hi",
        "count",
        "unchanged_freq",
        "ci_lo",
        "ci_hi",
        "positive_bounds",
        "max_bound",
        "mean_bound",
    ]
    .map(String::from);
    write_rows(&cfg.output_dir.join("prop1_bins.csv"), &header, &bins)?;
    Ok(report)
}
