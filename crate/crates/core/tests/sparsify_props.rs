use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsecg::graph::{complete_edge_count, CoordinationGraph, Edge};
use sparsecg::sparsify::{edge_budget, select_topology, select_topology_with, CriterionKind, EdgeOrder, TopologyCriterion};
use sparsecg::values::{ObsKey, ValueTables};

const SCORED: [CriterionKind; 3] = [CriterionKind::Qvar, CriterionKind::DeltaMax, CriterionKind::DeltaVar];

/// Tables with utilities and payoffs for `n` agents observing distinct codes.
fn instance(seed: u64, n: usize, k: usize, scale_u: f64, scale_p: f64) -> (ValueTables, Vec<ObsKey>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<ObsKey> = (0..n).map(|i| ObsKey::new(i, i as u64)).collect();
    let mut t = ValueTables::new(k, false).unwrap();
    for ki in &keys {
        for a in 0..k {
            t.set_utility(ki, a, scale_u * rng.gen_range(-1.0..1.0)).unwrap();
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for a in 0..k {
                for b in 0..k {
                    t.set_payoff(&keys[i], &keys[j], a, b, scale_p * rng.gen_range(-1.0..1.0)).unwrap();
                }
            }
        }
    }
    (t, keys)
}

fn edge_set(g: &CoordinationGraph) -> Vec<Edge> {
    g.edges().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn topologies_are_nested(seed in any::<u64>(), n in 2usize..=7, k in 1usize..=3, v in 0usize..3, l1 in 0.0f64..=1.0, l2 in 0.0f64..=1.0) {
        let (t, keys) = instance(seed, n, k, 1.0, 1.0);
        let (lo, hi) = (l1.min(l2), l1.max(l2));
        for order in [EdgeOrder::Descending, EdgeOrder::Ascending] {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let small = select_topology_with(&t, &keys, &TopologyCriterion::new(SCORED[v], lo), order, &mut rng).unwrap();
            let large = select_topology_with(&t, &keys, &TopologyCriterion::new(SCORED[v], hi), order, &mut rng).unwrap();
            for e in small.edges() {
                prop_assert!(large.contains(e.lo(), e.hi()));
            }
        }
    }

    #[test]
    fn budget_is_exact(seed in any::<u64>(), n in 1usize..=8, lambda in 0.0f64..=1.0, v in 0usize..4) {
        let kinds = [CriterionKind::Qvar, CriterionKind::DeltaMax, CriterionKind::DeltaVar, CriterionKind::Random];
        let (t, keys) = instance(seed, n, 2, 1.0, 1.0);
        let crit = TopologyCriterion { kind: kinds[v], lambda, seed };
        let g = select_topology(&t, &keys, &crit).unwrap();
        prop_assert_eq!(g.n_edges(), edge_budget(n, lambda));
        prop_assert!(g.n_edges() <= complete_edge_count(n));
    }

    #[test]
    fn selection_is_scale_covariant(seed in any::<u64>(), n in 2usize..=6, k in 2usize..=3, c in 0.1f64..10.0, lambda in 0.0f64..=1.0) {
        let (t, keys) = instance(seed, n, k, 1.0, 1.0);
        let (payoffs_scaled, _) = instance(seed, n, k, 1.0, c);
        let (all_scaled, _) = instance(seed, n, k, c, c);
        let qvar = TopologyCriterion::new(CriterionKind::Qvar, lambda);
        prop_assert_eq!(edge_set(&select_topology(&t, &keys, &qvar).unwrap()), edge_set(&select_topology(&payoffs_scaled, &keys, &qvar).unwrap()));
        let dvar = TopologyCriterion::new(CriterionKind::DeltaVar, lambda);
        prop_assert_eq!(edge_set(&select_topology(&t, &keys, &dvar).unwrap()), edge_set(&select_topology(&all_scaled, &keys, &dvar).unwrap()));
    }

    #[test]
    fn random_kind_is_reproducible(seed in any::<u64>(), n in 2usize..=8, lambda in 0.0f64..=1.0) {
        let (t, keys) = instance(seed, n, 2, 1.0, 1.0);
        let crit = TopologyCriterion { kind: CriterionKind::Random, lambda, seed };
        prop_assert_eq!(edge_set(&select_topology(&t, &keys, &crit).unwrap()), edge_set(&select_topology(&t, &keys, &crit).unwrap()));
    }

    #[test]
    fn full_budget_gives_complete_graph(seed in any::<u64>(), n in 1usize..=8) {
        let (t, keys) = instance(seed, n, 2, 1.0, 1.0);
        let complete = edge_set(&CoordinationGraph::complete(n).unwrap());
        for kind in [CriterionKind::Qvar, CriterionKind::DeltaMax, CriterionKind::DeltaVar, CriterionKind::Random, CriterionKind::Full] {
            let g = select_topology(&t, &keys, &TopologyCriterion { kind, lambda: 1.0, seed }).unwrap();
            prop_assert_eq!(edge_set(&g), complete.clone());
        }
        let none = select_topology(&t, &keys, &TopologyCriterion::new(CriterionKind::None, 1.0)).unwrap();
        prop_assert_eq!(none.n_edges(), 0);
    }
}
