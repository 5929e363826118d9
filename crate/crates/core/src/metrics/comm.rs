use crate::error::{invalid, Result};
use crate::graph::{complete_edge_count, CoordinationGraph};

/// Message traffic of one action selection on a topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommReport {
    pub edges_used: usize,
    pub messages_per_selection: u64,
    /// `1 - edges_used / complete_edge_count`; 0 when no pair exists.
    pub saved_fraction: f64,
}

/// Wire messages for `iterations` Max-Sum rounds, with unary factors
/// co-located on their agents.
pub fn comm_cost(g: &CoordinationGraph, iterations: usize) -> Result<CommReport> {
    comm_cost_with(g, iterations, true)
}

/// Every round sends one message each way over every factor-graph link. With
/// `local_unary` the `n` agent/unary links stay on-device and are not counted.
pub fn comm_cost_with(g: &CoordinationGraph, iterations: usize, local_unary: bool) -> Result<CommReport> {
    if iterations == 0 {
        return Err(invalid("iterations must be positive"));
    }
    let e = g.n_edges() as u64;
    let links = if local_unary { 2 * e } else { g.n_agents() as u64 + 2 * e };
    let complete = complete_edge_count(g.n_agents());
    let saved_fraction = if complete == 0 { 0.0 } else { 1.0 - g.n_edges() as f64 / complete as f64 };
    Ok(CommReport {
        edges_used: g.n_edges(),
        messages_per_selection: iterations as u64 * 2 * links,
        saved_fraction,
    })
}
