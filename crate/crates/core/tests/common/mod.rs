#![allow(dead_code)]

pub mod oracle;

use rand::Rng;
use sparsecg::graph::{CoordinationGraph, Edge};
use sparsecg::matrix::ActionMatrix;
use sparsecg::maxsum::{CoordinationProblem, PayoffSet};

/// Random forest: each agent after the first attaches to an earlier one with
/// probability `p_attach`.
pub fn random_forest<R: Rng>(rng: &mut R, n: usize, p_attach: f64) -> CoordinationGraph {
    let mut g = CoordinationGraph::empty(n).unwrap();
    for i in 1..n {
        if rng.gen_bool(p_attach) {
            let j = rng.gen_range(0..i);
            g.add_edge(j, i).unwrap();
        }
    }
    g
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p_edge: f64) -> CoordinationGraph {
    let mut g = CoordinationGraph::empty(n).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p_edge) {
                g.add_edge(i, j).unwrap();
            }
        }
    }
    g
}

/// Tables uniform in `[-1, 1)` on `g`; action counts drawn from `1..=max_actions`.
pub fn random_problem<R: Rng>(rng: &mut R, g: &CoordinationGraph, max_actions: usize) -> CoordinationProblem {
    let n = g.n_agents();
    let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_actions)).collect();
    let utilities: Vec<Vec<f64>> = sizes.iter().map(|&k| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut payoffs = PayoffSet::new();
    for e in g.edges() {
        let (r, c) = (sizes[e.lo()], sizes[e.hi()]);
        let data = (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        payoffs.insert(*e, ActionMatrix::from_vec(r, c, data).unwrap());
    }
    CoordinationProblem::new(g, utilities, payoffs).unwrap()
}

/// Global value computed directly from the tables: utilities weighted 1/n,
/// payoffs weighted 1/|E|.
pub fn oracle_value(p: &CoordinationProblem, a: &[usize]) -> f64 {
    let n = p.utilities().len();
    let u: f64 = p.utilities().iter().zip(a).map(|(u, &ai)| u[ai]).sum();
    let edges: Vec<&Edge> = p.graph().edges().collect();
    let pay: f64 = edges.iter().map(|e| p.payoff(e).unwrap().get(a[e.lo()], a[e.hi()])).sum();
    u / n as f64 + if edges.is_empty() { 0.0 } else { pay / edges.len() as f64 }
}

/// Best value over every joint action, by odometer enumeration.
pub fn oracle_best(p: &CoordinationProblem) -> f64 {
    let sizes: Vec<usize> = p.utilities().iter().map(Vec::len).collect();
    let mut a = vec![0usize; sizes.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        best = best.max(oracle_value(p, &a));
        let mut k = 0;
        loop {
            if k == a.len() {
                return best;
            }
            a[k] += 1;
            if a[k] < sizes[k] {
                break;
            }
            a[k] = 0;
            k += 1;
        }
    }
}

/// Per-agent argmax of the utilities alone, lowest index on ties.
pub fn utility_only(p: &CoordinationProblem) -> Vec<usize> {
    p.utilities()
        .iter()
        .map(|u| {
            let mut best = 0;
            for (k, &v) in u.iter().enumerate() {
                if v > u[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
