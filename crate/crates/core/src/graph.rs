//! Coordination topologies and their bipartite factor-graph form.
//!
//! A [`CoordinationGraph`] holds agents and undirected pairwise edges. Edges are
//! stored canonically (lower id first) in a sorted set, so iteration order is
//! lexicographic everywhere and downstream tie-breaking is reproducible.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{invalid, Error, Result};

/// An undirected agent pair, always stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    /// Canonical edge between `a` and `b`. Fails on self-loops.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(invalid(format!("self-loop on agent {a}")));
        }
        Ok(Edge {
            lo: a.min(b),
            hi: a.max(b),
        })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    /// The endpoint opposite `agent`, if `agent` is an endpoint.
    pub fn other(&self, agent: usize) -> Option<usize> {
        if agent == self.lo {
            Some(self.hi)
        } else if agent == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.lo, self.hi)
    }
}

/// Number of edges in the complete graph on `n` agents.
pub fn complete_edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Agents plus a set of undirected coordination edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinationGraph {
    n_agents: usize,
    edges: BTreeSet<Edge>,
}

impl CoordinationGraph {
    /// Edgeless graph on `n_agents` agents.
    pub fn empty(n_agents: usize) -> Result<Self> {
        if n_agents == 0 {
            return Err(invalid("a coordination graph needs at least one agent"));
        }
        Ok(CoordinationGraph {
            n_agents,
            edges: BTreeSet::new(),
        })
    }

    /// Complete graph with all n(n-1)/2 edges.
    pub fn complete(n_agents: usize) -> Result<Self> {
        let mut g = Self::empty(n_agents)?;
        for i in 0..n_agents {
            for j in i + 1..n_agents {
                g.edges.insert(Edge { lo: i, hi: j });
            }
        }
        Ok(g)
    }

    pub fn from_edges<I>(n_agents: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(n_agents)?;
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// Inserts an edge; returns `false` if it was already present.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<bool> {
        if a >= self.n_agents || b >= self.n_agents {
            return Err(invalid(format!(
                "edge ({a},{b}) out of range for {} agents",
                self.n_agents
            )));
        }
        Ok(self.edges.insert(Edge::new(a, b)?))
    }

    pub fn remove_edge(&mut self, edge: &Edge) -> bool {
        self.edges.remove(edge)
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        Edge::new(a, b).map_or(false, |e| self.edges.contains(&e))
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = &Edge> + '_ {
        self.edges.iter()
    }

    pub fn neighbors(&self, agent: usize) -> Vec<usize> {
        self.edges.iter().filter_map(|e| e.other(agent)).collect()
    }

    /// True iff the undirected edge set contains no cycle.
    pub fn is_acyclic(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n_agents).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let (ra, rb) = (find(&mut parent, e.lo), find(&mut parent, e.hi));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    /// Plain-text edge list: a `n=<agents>` header, then one `i j` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n_agents);
        for e in &self.edges {
            out.push_str(&format!("{e}\n"));
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty edge list".into()))?;
        let n = header
            .strip_prefix("n=")
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| Error::Format(format!("bad edge list header {header:?}")))?;
        let mut g = Self::empty(n)?;
        for line in lines {
            let mut parts = line.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => {
                    g.add_edge(a, b)?;
                }
                _ => return Err(Error::Format(format!("bad edge line {line:?}"))),
            }
        }
        Ok(g)
    }

    pub fn to_factor_graph(&self) -> FactorGraph {
        FactorGraph::new(self)
    }
}

/// A function node of the bipartite Max-Sum graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// Utility of one agent.
    Unary(usize),
    /// Payoff of an edge.
    Pairwise(Edge),
}

impl Factor {
    pub fn agents(&self) -> ([usize; 2], usize) {
        match *self {
            Factor::Unary(i) => ([i, i], 1),
            Factor::Pairwise(e) => ([e.lo, e.hi], 2),
        }
    }
}

/// One agent-factor link of the bipartite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub factor: usize,
    pub agent: usize,
}

/// Bipartite agent/factor structure Max-Sum iterates over.
///
/// Factor order: unary factors for agents `0..n`, then one pairwise factor per
/// edge in lexicographic edge order. Links are listed factor by factor, and
/// within a pairwise factor the lower agent comes first.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    graph: CoordinationGraph,
    factors: Vec<Factor>,
    links: Vec<Link>,
    factor_links: Vec<Vec<usize>>,
    agent_links: Vec<Vec<usize>>,
}

impl FactorGraph {
    fn new(g: &CoordinationGraph) -> Self {
        let n = g.n_agents();
        let mut factors: Vec<Factor> = (0..n).map(Factor::Unary).collect();
        factors.extend(g.edges().map(|e| Factor::Pairwise(*e)));
        let mut links = Vec::new();
        let mut factor_links = Vec::with_capacity(factors.len());
        let mut agent_links = vec![Vec::new(); n];
        for (fi, f) in factors.iter().enumerate() {
            let (agents, k) = f.agents();
            let mut ids = Vec::with_capacity(k);
            for &agent in &agents[..k] {
                agent_links[agent].push(links.len());
                ids.push(links.len());
                links.push(Link { factor: fi, agent });
            }
            factor_links.push(ids);
        }
        FactorGraph {
            graph: g.clone(),
            factors,
            links,
            factor_links,
            agent_links,
        }
    }

    pub fn graph(&self) -> &CoordinationGraph {
        &self.graph
    }

    pub fn n_agents(&self) -> usize {
        self.graph.n_agents()
    }

    pub fn agent_nodes(&self) -> impl Iterator<Item = usize> {
        0..self.graph.n_agents()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Link ids touching factor `f`.
    pub fn factor_links(&self, f: usize) -> &[usize] {
        &self.factor_links[f]
    }

    /// Link ids touching agent `i`.
    pub fn agent_links(&self, i: usize) -> &[usize] {
        &self.agent_links[i]
    }

    pub fn unary_count(&self) -> usize {
        self.graph.n_agents()
    }

    pub fn pairwise_count(&self) -> usize {
        self.graph.n_edges()
    }

    /// Link id joining `factor` and `agent`, if any.
    pub fn link_between(&self, factor: usize, agent: usize) -> Option<usize> {
        self.factor_links
            .get(factor)?
            .iter()
            .copied()
            .find(|&l| self.links[l].agent == agent)
    }

    /// Factor id of the pairwise factor for `edge`.
    pub fn pairwise_factor(&self, edge: &Edge) -> Option<usize> {
        let offset = self.graph.n_agents();
        self.factors[offset..]
            .binary_search_by(|f| match f {
                Factor::Pairwise(e) => e.cmp(edge),
                Factor::Unary(_) => std::cmp::Ordering::Less,
            })
            .ok()
            .map(|k| k + offset)
    }
}
