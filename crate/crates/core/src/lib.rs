//! Sparse coordination graphs for cooperative multi-agent Q-learning.
//!
//! Agents act greedily through Max-Sum message passing on a coordination graph
//! that is rebuilt for every joint observation from the variance of learned
//! pairwise payoffs. Values are tabular; the crate also ships six cooperative
//! grid and chain benchmarks, metrics for communication and learning-curve
//! stability, and an experiment runner that writes CSV.

pub mod envs;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod learner;
pub mod matrix;
pub mod maxsum;
pub mod metrics;
pub mod sparsify;
pub mod values;

pub use error::{Error, Result};
