use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::graph::complete_edge_count;
use crate::learner::{CurvePoint, LearningCurve};
use crate::metrics::{median_iqr, stability_distance, SmoothingMethod, SmoothingParams, StabilityReport};

pub(crate) const CURVE_COLUMNS: [&str; 6] =
    ["env_steps", "eval_return_median", "eval_return_p25", "eval_return_p75", "edges_used_mean", "messages_per_selection"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub(crate) fn num(v: f64) -> String {
    v.to_string()
}

pub(crate) fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Averages of the communication columns over a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommSummary {
    pub edges_used_mean: f64,
    pub messages_per_selection: f64,
    /// One minus used edges over the complete graph's edge count.
    pub saved_fraction: f64,
}

/// Per-seed outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub curve: LearningCurve,
    pub comm: CommSummary,
    /// One entry per smoother; NaN distances for curves shorter than two points.
    pub stability: Vec<StabilityReport>,
    /// Mean of the last 10% of curve points (at least one).
    pub final_performance: f64,
    /// Area under the piecewise-linear curve, held constant back to step 0,
    /// divided by the last checkpoint's step count.
    pub temporal_average: f64,
}

impl RunRecord {
    pub fn new(hash: &str, seed: u64, n_agents: usize, curve: LearningCurve, smoothing: &SmoothingParams) -> Result<Self> {
        let returns = curve.returns();
        let n = curve.points.len();
        let mean_of = |f: fn(&CurvePoint) -> f64| curve.points.iter().map(f).sum::<f64>() / n as f64;
        let edges_used_mean = mean_of(|p| p.edges_used_mean);
        let full = complete_edge_count(n_agents);
        let comm = CommSummary {
            edges_used_mean,
            messages_per_selection: mean_of(|p| p.messages_per_selection),
            saved_fraction: if full == 0 { 0.0 } else { 1.0 - edges_used_mean / full as f64 },
        };
        let stability = SmoothingMethod::ALL
            .iter()
            .map(|&m| {
                if n < 2 {
                    Ok(StabilityReport { method: m, distance: f64::NAN })
                } else {
                    stability_distance(&returns, m, smoothing)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = n.div_ceil(10).max(1);
        let final_performance = returns[n.saturating_sub(tail)..].iter().sum::<f64>() / tail.min(n) as f64;
        Ok(RunRecord {
            config_hash: hash.to_string(),
            seed,
            comm,
            stability,
            final_performance,
            temporal_average: temporal_average(&curve),
            curve,
        })
    }
}

fn temporal_average(curve: &LearningCurve) -> f64 {
    let (Some(first), Some(last)) = (curve.points.first(), curve.points.last()) else {
        return f64::NAN;
    };
    if last.env_steps == 0 {
        return last.eval_return_median;
    }
    let mut area = first.eval_return_median * first.env_steps as f64;
    for w in curve.points.windows(2) {
        let dx = (w[1].env_steps - w[0].env_steps) as f64;
        area += dx * (w[0].eval_return_median + w[1].eval_return_median) / 2.0;
    }
    area / last.env_steps as f64
}

pub(crate) fn write_curve(path: &Path, curve: &LearningCurve) -> Result<()> {
    let header: Vec<String> = CURVE_COLUMNS.iter().map(|s| s.to_string()).chain(curve.aux_keys.iter().cloned()).collect();
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| {
            let mut r = vec![p.env_steps.to_string()];
            r.extend(
                [p.eval_return_median, p.eval_return_p25, p.eval_return_p75, p.edges_used_mean, p.messages_per_selection]
                    .map(num),
            );
            r.extend(p.aux.iter().copied().map(num));
            r
        })
        .collect();
    write_rows(path, &header, &rows)
}

/// Reads a per-seed curve file written by a run.
pub fn read_curve_csv(path: &Path) -> Result<LearningCurve> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < CURVE_COLUMNS.len() || header.iter().zip(CURVE_COLUMNS).any(|(a, b)| a != b) {
        return Err(Error::Format(format!("{}: unexpected curve header", path.display())));
    }
    let aux_keys = header.iter().skip(CURVE_COLUMNS.len()).map(str::to_string).collect();
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let bad = |f: &str| Error::Format(format!("{}: bad field {f:?}", path.display()));
        let env_steps = rec[0].parse().map_err(|_| bad(&rec[0]))?;
        let vals = rec.iter().skip(1).map(|f| f.parse::<f64>().map_err(|_| bad(f))).collect::<Result<Vec<_>>>()?;
        points.push(CurvePoint {
            env_steps,
            eval_return_median: vals[0],
            eval_return_p25: vals[1],
            eval_return_p75: vals[2],
            edges_used_mean: vals[3],
            messages_per_selection: vals[4],
            aux: vals[5..].to_vec(),
        });
    }
    Ok(LearningCurve { aux_keys, points })
}

/// Across-seed statistics at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePoint {
    pub env_steps: u64,
    pub n_seeds: usize,
    pub return_median: f64,
    pub return_p25: f64,
    pub return_p75: f64,
    pub edges_used_median: f64,
    pub messages_per_selection_median: f64,
    pub aux_median: Vec<f64>,
}

/// Median and quartiles of each seed's median return, checkpoint by
/// checkpoint. Curves must share their checkpoint steps.
pub fn aggregate(curves: &[&LearningCurve]) -> Result<Vec<AggregatePoint>> {
    let Some(first) = curves.first() else {
        return Ok(Vec::new());
    };
    let steps: Vec<u64> = first.points.iter().map(|p| p.env_steps).collect();
    if curves.iter().any(|c| c.points.iter().map(|p| p.env_steps).ne(steps.iter().copied())) {
        return Err(invalid("curves have different checkpoints"));
    }
    let n_aux = first.aux_keys.len();
    Ok(steps
        .iter()
        .enumerate()
        .map(|(k, &env_steps)| {
            let col = |f: &dyn Fn(&CurvePoint) -> f64| {
                let mut v: Vec<f64> = curves.iter().map(|c| f(&c.points[k])).collect();
                v.sort_by(f64::total_cmp);
                v
            };
            let (return_median, return_p25, return_p75) = median_iqr(&col(&|p| p.eval_return_median));
            AggregatePoint {
                env_steps,
                n_seeds: curves.len(),
                return_median,
                return_p25,
                return_p75,
                edges_used_median: median_iqr(&col(&|p| p.edges_used_mean)).0,
                messages_per_selection_median: median_iqr(&col(&|p| p.messages_per_selection)).0,
                aux_median: (0..n_aux).map(|j| median_iqr(&col(&|p| p.aux[j])).0).collect(),
            }
        })
        .collect())
}

pub(crate) fn write_aggregate(path: &Path, points: &[AggregatePoint], aux_keys: &[&str]) -> Result<()> {
    let mut header: Vec<String> = [
        "env_steps",
        "n_seeds",
        "return_median",
        "return_p25",
        "return_p75",
        "edges_used_median",
        "messages_per_selection_median",
    ]
    .map(String::from)
    .to_vec();
    header.extend(aux_keys.iter().map(|k| format!("{k}_median")));
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let mut r = vec![p.env_steps.to_string(), p.n_seeds.to_string()];
            r.extend(
                [p.return_median, p.return_p25, p.return_p75, p.edges_used_median, p.messages_per_selection_median]
                    .map(num),
            );
            r.extend(p.aux_median.iter().copied().map(num));
            r
        })
        .collect();
    write_rows(path, &header, &rows)
}

pub(crate) fn write_summary(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut header: Vec<String> = [
        "config_hash",
        "seed",
        "n_points",
        "final_performance",
        "temporal_average",
        "edges_used_mean",
        "messages_per_selection",
        "saved_fraction",
    ]
    .map(String::from)
    .to_vec();
    header.extend(SmoothingMethod::ALL.iter().map(|m| format!("stability_{m}")));
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.seed);
    let rows: Vec<Vec<String>> = sorted
        .iter()
        .map(|r| {
            let mut row = vec![r.config_hash.clone(), r.seed.to_string(), r.curve.points.len().to_string()];
            row.extend(
                [
                    r.final_performance,
                    r.temporal_average,
                    r.comm.edges_used_mean,
                    r.comm.messages_per_selection,
                    r.comm.saved_fraction,
                ]
                .map(num),
            );
            row.extend(r.stability.iter().map(|s| num(s.distance)));
            row
        })
        .collect();
    write_rows(path, &header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(vals: &[(u64, f64)]) -> LearningCurve {
        LearningCurve {
            aux_keys: vec!["x".into()],
            points: vals
                .iter()
                .map(|&(s, v)| CurvePoint {
                    env_steps: s,
                    eval_return_median: v,
                    eval_return_p25: v - 1.0,
                    eval_return_p75: v + 1.0,
                    edges_used_mean: 2.0,
                    messages_per_selection: 40.0,
                    aux: vec![v * 2.0],
                })
                .collect(),
        }
    }

    #[test]
    fn temporal_average_of_ramp() {
        let c = curve(&[(10, 1.0), (20, 3.0)]);
        // 10*1 + 10*2 over 20 steps
        assert_eq!(temporal_average(&c), 1.5);
        assert!(temporal_average(&curve(&[])).is_nan());
    }

    #[test]
    fn final_performance_uses_last_tenth() {
        let vals: Vec<(u64, f64)> = (1..=20).map(|k| (k * 10, k as f64)).collect();
        let r = RunRecord::new("h", 0, 4, curve(&vals), &SmoothingParams::default()).unwrap();
        assert_eq!(r.final_performance, 19.5);
        assert_eq!(r.comm.saved_fraction, 1.0 - 2.0 / 6.0);
        let one = RunRecord::new("h", 0, 4, curve(&[(5, 7.0)]), &SmoothingParams::default()).unwrap();
        assert_eq!(one.final_performance, 7.0);
        assert!(one.stability.iter().all(|s| s.distance.is_nan()));
    }

    #[test]
    fn aggregate_quartiles() {
        let cs: Vec<LearningCurve> = [1.0, 2.0, 3.0, 4.0, 5.0].iter().map(|&v| curve(&[(10, v)])).collect();
        let refs: Vec<&LearningCurve> = cs.iter().collect();
        let a = aggregate(&refs).unwrap();
        assert_eq!((a[0].return_median, a[0].return_p25, a[0].return_p75), (3.0, 2.0, 4.0));
        assert_eq!(a[0].aux_median, vec![6.0]);
        let odd = curve(&[(11, 1.0)]);
        assert!(aggregate(&[&cs[0], &odd]).is_err());
    }

    #[test]
    fn curve_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let c = curve(&[(10, 0.1 + 0.2), (20, -1e-300), (30, 12345.678)]);
        write_curve(&p, &c).unwrap();
        assert_eq!(read_curve_csv(&p).unwrap(), c);
    }
}
