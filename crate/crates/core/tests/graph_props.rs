mod common;

use common::random_graph;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparsecg::graph::{complete_edge_count, CoordinationGraph};

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// A graph is a forest iff no edge joins two vertices already connected.
fn union_find_acyclic(g: &CoordinationGraph) -> bool {
    let mut parent: Vec<usize> = (0..g.n_agents()).collect();
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.lo()), find(&mut parent, e.hi()));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

proptest! {
    #[test]
    fn complete_factor_graph_size(n in 1usize..=20) {
        let fg = CoordinationGraph::complete(n).unwrap().to_factor_graph();
        prop_assert_eq!(fg.factors().len(), n + n * (n - 1) / 2);
        prop_assert_eq!(fg.pairwise_count(), complete_edge_count(n));
        prop_assert_eq!(fg.links().len(), n + n * (n - 1));
    }

    #[test]
    fn acyclicity_matches_union_find(seed in any::<u64>(), n in 1usize..=12, p in 0.0f64..0.6) {
        let g = random_graph(&mut ChaCha8Rng::seed_from_u64(seed), n, p);
        prop_assert_eq!(g.is_acyclic(), union_find_acyclic(&g));
        if g.is_acyclic() {
            prop_assert!(g.n_edges() < n);
        }
    }

    #[test]
    fn edge_list_round_trip(seed in any::<u64>(), n in 1usize..=12) {
        let g = random_graph(&mut ChaCha8Rng::seed_from_u64(seed), n, 0.4);
        prop_assert_eq!(CoordinationGraph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }
}
