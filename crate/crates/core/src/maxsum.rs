//! Max-Sum action selection on a coordination graph.
//!
//! Each agent i owns a unary factor holding its utility and every edge {i,j}
//! owns a pairwise factor holding its payoff. Factor values are weighted the
//! same way the global value is factored, `1/|V|` for utilities and `1/|E|`
//! for payoffs, so maximizing the message-passing objective maximizes
//! [`CoordinationProblem::q_tot`].
//!
//! Messages flow on the bipartite graph in synchronous rounds. In round t every
//! agent-to-factor message is the sum of the round t-1 messages the agent
//! received from its other factors (mean-subtracted when normalization is on),
//! and every factor-to-agent message maximizes the factor value plus the round
//! t-1 message from the factor's other agent. After each round an agent picks
//! the argmax of the sum of its incoming factor messages, ties going to the
//! lowest action index.

use std::collections::BTreeMap;
use std::ops::Deref;

use crate::error::{invalid, Error, Result};
use crate::graph::{CoordinationGraph, Edge, Factor, FactorGraph};
use crate::matrix::{argmax, ActionMatrix};

/// Default cap on joint actions enumerated by [`exact_joint_argmax`].
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// One action index per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointAction(pub Vec<usize>);

impl Deref for JointAction {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for JointAction {
    fn from(v: Vec<usize>) -> Self {
        JointAction(v)
    }
}

/// Payoff matrices keyed by edge, rows indexed by the lower agent's action.
pub type PayoffSet = BTreeMap<Edge, ActionMatrix>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxSumConfig {
    pub iterations: usize,
    /// Subtract the mean from every agent-to-factor message.
    pub normalize: bool,
    /// Return the best extraction over all rounds instead of the last one.
    pub anytime: bool,
}

impl Default for MaxSumConfig {
    fn default() -> Self {
        MaxSumConfig {
            iterations: 5,
            normalize: true,
            anytime: true,
        }
    }
}

/// A coordination graph together with the utilities and payoffs on it.
#[derive(Debug, Clone)]
pub struct CoordinationProblem {
    fg: FactorGraph,
    utilities: Vec<Vec<f64>>,
    payoffs: PayoffSet,
}

impl CoordinationProblem {
    /// Validates shapes. Every edge of `graph` needs a payoff of shape
    /// `|A_lo| x |A_hi|`; payoffs for edges outside the graph are ignored.
    pub fn new(graph: &CoordinationGraph, utilities: Vec<Vec<f64>>, payoffs: PayoffSet) -> Result<Self> {
        if utilities.len() != graph.n_agents() {
            return Err(invalid(format!(
                "{} utility vectors for {} agents",
                utilities.len(),
                graph.n_agents()
            )));
        }
        if let Some(i) = utilities.iter().position(|u| u.is_empty()) {
            return Err(invalid(format!("agent {i} has an empty action set")));
        }
        for e in graph.edges() {
            let m = payoffs
                .get(e)
                .ok_or_else(|| invalid(format!("missing payoff for edge ({e})")))?;
            if m.rows() != utilities[e.lo()].len() || m.cols() != utilities[e.hi()].len() {
                return Err(invalid(format!(
                    "payoff for edge ({e}) is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    utilities[e.lo()].len(),
                    utilities[e.hi()].len()
                )));
            }
        }
        Ok(CoordinationProblem {
            fg: graph.to_factor_graph(),
            utilities,
            payoffs,
        })
    }

    pub fn graph(&self) -> &CoordinationGraph {
        self.fg.graph()
    }

    pub fn factor_graph(&self) -> &FactorGraph {
        &self.fg
    }

    pub fn utilities(&self) -> &[Vec<f64>] {
        &self.utilities
    }

    pub fn payoff(&self, e: &Edge) -> Option<&ActionMatrix> {
        self.payoffs.get(e)
    }

    pub fn payoffs(&self) -> &PayoffSet {
        &self.payoffs
    }

    pub fn n_actions(&self, agent: usize) -> usize {
        self.utilities[agent].len()
    }

    /// Same utilities and payoffs on a different topology.
    pub fn with_graph(&self, graph: &CoordinationGraph) -> Result<Self> {
        Self::new(graph, self.utilities.clone(), self.payoffs.clone())
    }

    fn unary_weight(&self) -> f64 {
        1.0 / self.graph().n_agents() as f64
    }

    fn pairwise_weight(&self) -> f64 {
        match self.graph().n_edges() {
            0 => 0.0,
            m => 1.0 / m as f64,
        }
    }

    /// Factored global value: mean utility plus mean payoff over the edges
    /// (the payoff term is 0 on an edgeless graph).
    pub fn q_tot(&self, a: &[usize]) -> f64 {
        let g = self.graph();
        let mut unary = 0.0;
        for (i, u) in self.utilities.iter().enumerate() {
            unary += u[a[i]];
        }
        let mut pairwise = 0.0;
        for e in g.edges() {
            pairwise += self.payoffs[e].get(a[e.lo()], a[e.hi()]);
        }
        let mut q = unary / g.n_agents() as f64;
        if g.n_edges() > 0 {
            q += pairwise / g.n_edges() as f64;
        }
        q
    }

    fn check_action(&self, a: &[usize]) -> Result<()> {
        if a.len() != self.utilities.len() {
            return Err(invalid("joint action length differs from agent count"));
        }
        for (i, &ai) in a.iter().enumerate() {
            if ai >= self.utilities[i].len() {
                return Err(invalid(format!("action {ai} out of range for agent {i}")));
            }
        }
        Ok(())
    }
}

/// Evaluates the factored global value of `a`.
pub fn evaluate_q_tot(problem: &CoordinationProblem, a: &JointAction) -> Result<f64> {
    problem.check_action(a)?;
    Ok(problem.q_tot(a))
}

/// Per-link message vectors after a Max-Sum run.
#[derive(Debug, Clone)]
pub struct MessageState {
    fg: FactorGraph,
    agent_to_factor: Vec<Vec<f64>>,
    factor_to_agent: Vec<Vec<f64>>,
    iteration: usize,
}

impl MessageState {
    fn zeros(problem: &CoordinationProblem) -> Self {
        let fg = problem.factor_graph().clone();
        let init: Vec<Vec<f64>> = fg
            .links()
            .iter()
            .map(|l| vec![0.0; problem.n_actions(l.agent)])
            .collect();
        MessageState {
            fg,
            agent_to_factor: init.clone(),
            factor_to_agent: init,
            iteration: 0,
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn factor_graph(&self) -> &FactorGraph {
        &self.fg
    }

    /// Message from `agent` to factor index `factor`.
    pub fn agent_to_factor(&self, agent: usize, factor: usize) -> Option<&[f64]> {
        let l = self.fg.link_between(factor, agent)?;
        Some(&self.agent_to_factor[l])
    }

    /// Message from factor index `factor` to `agent`.
    pub fn factor_to_agent(&self, factor: usize, agent: usize) -> Option<&[f64]> {
        let l = self.fg.link_between(factor, agent)?;
        Some(&self.factor_to_agent[l])
    }

    pub fn agent_to_factor_by_link(&self) -> &[Vec<f64>] {
        &self.agent_to_factor
    }

    pub fn factor_to_agent_by_link(&self) -> &[Vec<f64>] {
        &self.factor_to_agent
    }

    /// Sum of all factor messages arriving at `agent`.
    pub fn belief(&self, agent: usize) -> Vec<f64> {
        let links = self.fg.agent_links(agent);
        let mut total = vec![0.0; self.factor_to_agent[links[0]].len()];
        for &l in links {
            for (t, v) in total.iter_mut().zip(&self.factor_to_agent[l]) {
                *t += v;
            }
        }
        total
    }

    fn extract(&self) -> JointAction {
        JointAction((0..self.fg.n_agents()).map(|i| argmax(&self.belief(i))).collect())
    }
}

/// Per-agent utility argmax, ignoring every payoff.
pub fn utility_argmax(problem: &CoordinationProblem) -> JointAction {
    JointAction(problem.utilities.iter().map(|u| argmax(u)).collect())
}

fn round(problem: &CoordinationProblem, prev: &MessageState, normalize: bool) -> Result<MessageState> {
    let fg = problem.factor_graph();
    let wu = problem.unary_weight();
    let wp = problem.pairwise_weight();
    let mut next = prev.clone();
    for (l, link) in fg.links().iter().enumerate() {
        let msg = &mut next.agent_to_factor[l];
        msg.iter_mut().for_each(|v| *v = 0.0);
        for &other in fg.agent_links(link.agent) {
            if other != l {
                for (m, v) in msg.iter_mut().zip(&prev.factor_to_agent[other]) {
                    *m += v;
                }
            }
        }
        if normalize && !msg.is_empty() {
            let mean = msg.iter().sum::<f64>() / msg.len() as f64;
            msg.iter_mut().for_each(|v| *v -= mean);
        }
    }
    for (l, link) in fg.links().iter().enumerate() {
        let msg = &mut next.factor_to_agent[l];
        match fg.factors()[link.factor] {
            Factor::Unary(i) => {
                for (m, u) in msg.iter_mut().zip(&problem.utilities[i]) {
                    *m = wu * u;
                }
            }
            Factor::Pairwise(e) => {
                let payoff = &problem.payoffs[&e];
                let other_link = fg
                    .factor_links(link.factor)
                    .iter()
                    .copied()
                    .find(|&k| k != l)
                    .expect("pairwise factor has two links");
                let incoming = &prev.agent_to_factor[other_link];
                let receiver_is_lo = link.agent == e.lo();
                for (a, m) in msg.iter_mut().enumerate() {
                    let mut best = f64::NEG_INFINITY;
                    for (b, inc) in incoming.iter().enumerate() {
                        let q = if receiver_is_lo { payoff.get(a, b) } else { payoff.get(b, a) };
                        let v = wp * q + inc;
                        if v > best {
                            best = v;
                        }
                    }
                    *m = best;
                }
            }
        }
    }
    next.iteration = prev.iteration + 1;
    let finite = next
        .agent_to_factor
        .iter()
        .chain(&next.factor_to_agent)
        .all(|m| m.iter().all(|v| v.is_finite()));
    if !finite {
        return Err(Error::NumericFailure(format!(
            "non-finite Max-Sum message in round {}",
            next.iteration
        )));
    }
    Ok(next)
}

/// Runs synchronous Max-Sum and extracts a joint action.
///
/// With `anytime` set, the utility-only argmax and the extraction of every
/// round form a pool and the candidate with the highest global value wins,
/// earliest candidate first on ties.
pub fn run_max_sum(problem: &CoordinationProblem, cfg: &MaxSumConfig) -> Result<(JointAction, MessageState)> {
    if cfg.iterations == 0 {
        return Err(invalid("Max-Sum needs at least one iteration"));
    }
    let mut state = MessageState::zeros(problem);
    let mut best = utility_argmax(problem);
    let mut best_q = problem.q_tot(&best);
    let mut last = best.clone();
    for _ in 0..cfg.iterations {
        state = round(problem, &state, cfg.normalize)?;
        last = state.extract();
        if cfg.anytime {
            let q = problem.q_tot(&last);
            if q > best_q {
                best_q = q;
                best = last.clone();
            }
        }
    }
    Ok((if cfg.anytime { best } else { last }, state))
}

/// Brute-force maximizer of the global value over all joint actions.
///
/// Joint actions are enumerated lexicographically (agent 0 most significant)
/// and only a strict improvement replaces the incumbent, so ties resolve to the
/// lexicographically smallest maximizer.
pub fn exact_joint_argmax(problem: &CoordinationProblem, cap: u64) -> Result<(JointAction, f64)> {
    let sizes: Vec<usize> = problem.utilities.iter().map(Vec::len).collect();
    let total = sizes
        .iter()
        .try_fold(1u64, |acc, &s| acc.checked_mul(s as u64))
        .filter(|&t| t <= cap)
        .ok_or_else(|| Error::Capacity(format!("joint action space {sizes:?} exceeds cap {cap}")))?;
    let mut a = vec![0usize; sizes.len()];
    let mut best = a.clone();
    let mut best_q = problem.q_tot(&a);
    for _ in 1..total {
        for k in (0..a.len()).rev() {
            a[k] += 1;
            if a[k] < sizes[k] {
                break;
            }
            a[k] = 0;
        }
        let q = problem.q_tot(&a);
        if q > best_q {
            best_q = q;
            best.copy_from_slice(&a);
        }
    }
    Ok((JointAction(best), best_q))
}
