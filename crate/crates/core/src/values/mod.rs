//! Tabular utility and payoff estimators keyed by discretized observation
//! histories, the factored global value over them, edge statistics, sparseness
//! losses and the edge-removal bound.

mod bound;
mod checkpoint;
mod keys;
mod stats;

use std::collections::HashMap;

pub use bound::{prop1_lower_bound, Prop1Inputs};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use keys::{HistoryEncoder, ObsKey};
pub use stats::{
    delta_ij, sparse_loss, sparse_loss_grad, zeta_delta_max, zeta_delta_var, zeta_qvar, LossVariant,
    TableGradient,
};

use crate::error::{invalid, Error, Result};
use crate::graph::CoordinationGraph;
use crate::matrix::ActionMatrix;
use crate::maxsum::{CoordinationProblem, PayoffSet};

/// Default hard limit on allocated table entries.
pub const DEFAULT_ENTRY_CAP: usize = 5_000_000;

/// Storage key of one agent's observation inside a table.
///
/// With shared tables the agent tag is 0, so every agent reads and writes the
/// same rows; otherwise the tag is the agent id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TableKey {
    pub tag: u64,
    pub code: u64,
}

type PairKey = (TableKey, TableKey);

/// Lazily allocated utility and payoff tables.
///
/// Unseen entries read as 0. A payoff block is stored once per unordered key
/// pair; querying it in the other order transposes, so
/// `q_ij(k_i,k_j,a_i,a_j) == q_ji(k_j,k_i,a_j,a_i)` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    n_actions: usize,
    shared: bool,
    entry_cap: usize,
    allocated: usize,
    utility: HashMap<TableKey, Vec<f64>>,
    payoff: HashMap<PairKey, Vec<f64>>,
}

impl ValueTables {
    pub fn new(n_actions: usize, shared: bool) -> Result<Self> {
        Self::with_cap(n_actions, shared, DEFAULT_ENTRY_CAP)
    }

    pub fn with_cap(n_actions: usize, shared: bool, entry_cap: usize) -> Result<Self> {
        if n_actions == 0 {
            return Err(invalid("tables need at least one action"));
        }
        Ok(ValueTables {
            n_actions,
            shared,
            entry_cap,
            allocated: 0,
            utility: HashMap::new(),
            payoff: HashMap::new(),
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn shared(&self) -> bool {
        self.shared
    }

    pub fn entry_cap(&self) -> usize {
        self.entry_cap
    }

    /// Number of allocated scalar entries.
    pub fn allocated_entries(&self) -> usize {
        self.allocated
    }

    pub fn table_key(&self, k: &ObsKey) -> TableKey {
        TableKey {
            tag: if self.shared { 0 } else { k.agent as u64 },
            code: k.code,
        }
    }

    /// Canonical storage key for the pair and whether `(ki, kj)` is stored
    /// transposed.
    fn pair_key(&self, ki: &ObsKey, kj: &ObsKey) -> (PairKey, bool) {
        let (ti, tj) = (self.table_key(ki), self.table_key(kj));
        if (ti, ki.agent) <= (tj, kj.agent) {
            ((ti, tj), false)
        } else {
            ((tj, ti), true)
        }
    }

    fn reserve(&mut self, block: usize) -> Result<()> {
        if self.allocated + block > self.entry_cap {
            return Err(Error::Capacity(format!(
                "value tables would exceed {} entries",
                self.entry_cap
            )));
        }
        self.allocated += block;
        Ok(())
    }

    pub fn utility(&self, k: &ObsKey) -> Vec<f64> {
        self.utility
            .get(&self.table_key(k))
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n_actions])
    }

    pub fn utility_at(&self, k: &ObsKey, a: usize) -> f64 {
        self.utility.get(&self.table_key(k)).map_or(0.0, |v| v[a])
    }

    /// Payoff block with rows indexed by `ki`'s actions.
    pub fn payoff(&self, ki: &ObsKey, kj: &ObsKey) -> ActionMatrix {
        let n = self.n_actions;
        let (key, transposed) = self.pair_key(ki, kj);
        match self.payoff.get(&key) {
            None => ActionMatrix::zeros(n, n),
            Some(block) => {
                let m = ActionMatrix::from_vec(n, n, block.clone()).expect("block shape");
                if transposed {
                    m.transpose()
                } else {
                    m
                }
            }
        }
    }

    pub fn payoff_at(&self, ki: &ObsKey, kj: &ObsKey, ai: usize, aj: usize) -> f64 {
        let (key, transposed) = self.pair_key(ki, kj);
        self.payoff.get(&key).map_or(0.0, |b| {
            if transposed {
                b[aj * self.n_actions + ai]
            } else {
                b[ai * self.n_actions + aj]
            }
        })
    }

    fn utility_mut(&mut self, k: &ObsKey) -> Result<&mut Vec<f64>> {
        let key = self.table_key(k);
        if !self.utility.contains_key(&key) {
            self.reserve(self.n_actions)?;
            self.utility.insert(key, vec![0.0; self.n_actions]);
        }
        Ok(self.utility.get_mut(&key).expect("just inserted"))
    }

    fn payoff_index(&mut self, ki: &ObsKey, kj: &ObsKey, ai: usize, aj: usize) -> Result<(&mut Vec<f64>, usize)> {
        let n = self.n_actions;
        let (key, transposed) = self.pair_key(ki, kj);
        if !self.payoff.contains_key(&key) {
            self.reserve(n * n)?;
            self.payoff.insert(key, vec![0.0; n * n]);
        }
        let idx = if transposed { aj * n + ai } else { ai * n + aj };
        Ok((self.payoff.get_mut(&key).expect("just inserted"), idx))
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.n_actions {
            return Err(invalid(format!("action {a} out of range ({} actions)", self.n_actions)));
        }
        Ok(())
    }

    pub fn add_utility(&mut self, k: &ObsKey, a: usize, delta: f64) -> Result<()> {
        self.check_action(a)?;
        self.utility_mut(k)?[a] += delta;
        Ok(())
    }

    pub fn set_utility(&mut self, k: &ObsKey, a: usize, value: f64) -> Result<()> {
        self.check_action(a)?;
        self.utility_mut(k)?[a] = value;
        Ok(())
    }

    pub fn add_payoff(&mut self, ki: &ObsKey, kj: &ObsKey, ai: usize, aj: usize, delta: f64) -> Result<()> {
        self.check_action(ai)?;
        self.check_action(aj)?;
        let (block, idx) = self.payoff_index(ki, kj, ai, aj)?;
        block[idx] += delta;
        Ok(())
    }

    pub fn set_payoff(&mut self, ki: &ObsKey, kj: &ObsKey, ai: usize, aj: usize, value: f64) -> Result<()> {
        self.check_action(ai)?;
        self.check_action(aj)?;
        let (block, idx) = self.payoff_index(ki, kj, ai, aj)?;
        block[idx] = value;
        Ok(())
    }

    /// Sets a whole payoff block, rows indexed by `ki`'s actions.
    pub fn set_payoff_matrix(&mut self, ki: &ObsKey, kj: &ObsKey, m: &ActionMatrix) -> Result<()> {
        if m.rows() != self.n_actions || m.cols() != self.n_actions {
            return Err(invalid("payoff block has the wrong shape"));
        }
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                self.set_payoff(ki, kj, r, c, m.get(r, c))?;
            }
        }
        Ok(())
    }

    /// Coordination problem for one joint observation on topology `g`.
    pub fn problem(&self, g: &CoordinationGraph, keys: &[ObsKey]) -> Result<CoordinationProblem> {
        if keys.len() != g.n_agents() {
            return Err(invalid(format!("{} keys for {} agents", keys.len(), g.n_agents())));
        }
        let utilities = keys.iter().map(|k| self.utility(k)).collect();
        let payoffs: PayoffSet = g
            .edges()
            .map(|e| (*e, self.payoff(&keys[e.lo()], &keys[e.hi()])))
            .collect();
        CoordinationProblem::new(g, utilities, payoffs)
    }

    pub(crate) fn utility_entries(&self) -> impl Iterator<Item = (&TableKey, &Vec<f64>)> {
        self.utility.iter()
    }

    pub(crate) fn payoff_entries(&self) -> impl Iterator<Item = (&PairKey, &Vec<f64>)> {
        self.payoff.iter()
    }

    pub(crate) fn insert_utility_block(&mut self, key: TableKey, block: Vec<f64>) -> Result<()> {
        if block.len() != self.n_actions {
            return Err(Error::Format("utility block has the wrong length".into()));
        }
        self.reserve(block.len())?;
        if self.utility.insert(key, block).is_some() {
            return Err(Error::Format(format!("duplicate utility key {key:?}")));
        }
        Ok(())
    }

    pub(crate) fn insert_payoff_block(&mut self, key: PairKey, block: Vec<f64>) -> Result<()> {
        if block.len() != self.n_actions * self.n_actions {
            return Err(Error::Format("payoff block has the wrong length".into()));
        }
        self.reserve(block.len())?;
        if self.payoff.insert(key, block).is_some() {
            return Err(Error::Format(format!("duplicate payoff key {key:?}")));
        }
        Ok(())
    }

    pub(crate) fn add_to_utility_block(&mut self, key: TableKey, delta: &[f64], scale: f64) -> Result<()> {
        if !self.utility.contains_key(&key) {
            self.reserve(self.n_actions)?;
            self.utility.insert(key, vec![0.0; self.n_actions]);
        }
        let block = self.utility.get_mut(&key).expect("present");
        for (b, d) in block.iter_mut().zip(delta) {
            *b += scale * d;
        }
        Ok(())
    }

    pub(crate) fn add_to_payoff_block(&mut self, key: PairKey, delta: &[f64], scale: f64) -> Result<()> {
        let n = self.n_actions;
        if !self.payoff.contains_key(&key) {
            self.reserve(n * n)?;
            self.payoff.insert(key, vec![0.0; n * n]);
        }
        let block = self.payoff.get_mut(&key).expect("present");
        for (b, d) in block.iter_mut().zip(delta) {
            *b += scale * d;
        }
        Ok(())
    }
}

/// Factored global value on topology `g`: mean utility plus the payoff sum
/// normalized by `1/|E|` (zero pairwise term when `g` is edgeless).
pub fn q_tot(tables: &ValueTables, g: &CoordinationGraph, keys: &[ObsKey], a: &[usize]) -> f64 {
    let n = g.n_agents();
    let mut unary = 0.0;
    for i in 0..n {
        unary += tables.utility_at(&keys[i], a[i]);
    }
    let mut q = unary / n as f64;
    if g.n_edges() > 0 {
        let mut pairwise = 0.0;
        for e in g.edges() {
            let (i, j) = (e.lo(), e.hi());
            pairwise += tables.payoff_at(&keys[i], &keys[j], a[i], a[j]);
        }
        q += pairwise / g.n_edges() as f64;
    }
    q
}

/// Global value summed over all ordered pairs with the `1/(n(n-1))` normalizer.
///
/// Symmetric storage makes both orders of a pair equal, so this coincides with
/// [`q_tot`] on the complete graph.
pub fn q_tot_all_pairs(tables: &ValueTables, keys: &[ObsKey], a: &[usize]) -> f64 {
    let n = keys.len();
    let mut unary = 0.0;
    for i in 0..n {
        unary += tables.utility_at(&keys[i], a[i]);
    }
    let mut q = unary / n as f64;
    if n > 1 {
        let mut pairwise = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pairwise += tables.payoff_at(&keys[i], &keys[j], a[i], a[j]);
                }
            }
        }
        q += pairwise / (n * (n - 1)) as f64;
    }
    q
}
