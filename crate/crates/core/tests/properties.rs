//! Structural invariants checked over randomly generated graphs, models and
//! vote matrices.

mod common;

use proptest::prelude::*;
use weaklabel::moments::{estimate_accuracies, AccuracyConfig};
use weaklabel::online::{RollingState, Window};
use weaklabel::oracle::{enumerate_joint, exact_statistics, CanonicalParameters};
use weaklabel::{
    augment_graph, augment_matrix, build_junction_tree, validate_graph, AbstainPolicy, ClassPrior, ErrorKind, DependencyGraph,
    LabelMatrix, LabelModel, SufficientStats, Vertex,
};

/// Tree-shaped task graph, random assignment and a matching of same-task
/// sources as dependency edges.
fn graph_strategy() -> impl Strategy<Value = DependencyGraph> {
    (1usize..=3, 2usize..=6)
        .prop_flat_map(|(tasks, m)| {
            (
                Just(tasks),
                prop::collection::vec(0..tasks, m),
                prop::collection::vec(any::<prop::sample::Index>(), tasks),
                prop::collection::vec(any::<bool>(), m),
            )
        })
        .prop_map(|(tasks, assignment, parents, pair)| {
            let m = assignment.len();
            let mut b = DependencyGraph::builder(tasks, m);
            for (i, &d) in assignment.iter().enumerate() {
                b = b.assign(i, d);
            }
            for d in 1..tasks {
                b = b.task_edge(d, parents[d].index(d));
            }
            let mut free: Vec<bool> = vec![true; m];
            for i in 0..m {
                if !pair[i] || !free[i] {
                    continue;
                }
                if let Some(j) = (i + 1..m).find(|&j| free[j] && assignment[j] == assignment[i]) {
                    free[i] = false;
                    free[j] = false;
                    b = b.source_edge(i, j);
                }
            }
            b.build().unwrap()
        })
}

fn votes_strategy(max_sources: usize) -> impl Strategy<Value = LabelMatrix> {
    (1usize..=max_sources, 1usize..60).prop_flat_map(|(m, n)| {
        prop::collection::vec(-1i8..=1, n * m).prop_map(move |v| LabelMatrix::new(n, m, v).unwrap())
    })
}

fn star_votes(correct: Vec<f64>, abstain: f64, n: usize, seed: u64) -> (LabelMatrix, Vec<i8>) {
    let s = common::star(&correct, abstain).sample(n, seed);
    (s.labels, s.truth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn junction_tree_covers_edges_and_counts_separators(g in graph_strategy()) {
        let jt = build_junction_tree(&g).unwrap();
        for (a, b) in g.edges() {
            prop_assert!(jt.cliques().iter().any(|c| c.contains(&a) && c.contains(&b)));
        }
        let joins: usize = jt.separators().iter().map(|s| s.degree - 1).sum();
        prop_assert_eq!(joins, jt.cliques().len() - 1);
        prop_assert!(jt.has_running_intersection());
    }

    #[test]
    fn validation_is_idempotent(g in graph_strategy()) {
        let once = validate_graph(&g).unwrap();
        prop_assert_eq!(&validate_graph(&once).unwrap(), &once);
        prop_assert!(once.is_triangulated());
    }

    #[test]
    fn augmentation_round_trips(l in votes_strategy(6), seed in any::<u64>()) {
        for policy in [AbstainPolicy::Alternating, AbstainPolicy::SeededRandom { seed }] {
            prop_assert_eq!(augment_matrix(&l, policy).collapse(), l.clone());
        }
    }

    #[test]
    fn enumerated_joints_normalize(g in graph_strategy(), seed in any::<u64>()) {
        let joint = enumerate_joint(&CanonicalParameters::random(g, seed)).unwrap();
        prop_assert!((joint.total() - 1.0).abs() < 1e-12);
        prop_assert!(joint.probs().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn accuracy_products_reproduce_second_moments(m in 3usize..=6, seed in any::<u64>()) {
        let theta = CanonicalParameters::random(DependencyGraph::star(m), seed);
        let stats = exact_statistics(&enumerate_joint(&theta).unwrap(), &theta.graph).unwrap();
        let g = augment_graph(&theta.graph);
        let acc = estimate_accuracies(&stats.moments, &g, &AccuracyConfig::default()).unwrap().accuracies;
        for a in 0..2 * m {
            for b in 0..2 * m {
                if a / 2 != b / 2 {
                    let gap = acc.column(a) * acc.column(b) - stats.moments.m(a, b);
                    prop_assert!(gap.abs() < 1e-10, "columns {} {}: {}", a, b, gap);
                }
            }
        }
    }

    #[test]
    fn fitted_tables_are_distributions(
        correct in prop::collection::vec(0.55f64..0.95, 3..=6),
        abstain in 0.0f64..0.4,
        seed in any::<u64>(),
    ) {
        let m = correct.len();
        let (l, _) = star_votes(correct, abstain, 3000, seed);
        let model = LabelModel::new(DependencyGraph::star(m), ClassPrior::balance(0.5).unwrap()).unwrap();
        let fitted = match model.fit(&l) {
            Ok(f) => f,
            Err(e) => {
                // weak sources on few rows may push a solve past the clip threshold
                prop_assert_eq!(e.kind(), ErrorKind::Numerical);
                return Ok(());
            }
        };
        for t in fitted.parameters().tables() {
            prop_assert!(t.is_distribution(1e-9), "{}", t.name());
        }
        // renormalizing a clipped table moves its task marginal by at most the clip
        let clip = fitted.diagnostics().max_clip();
        prop_assert!(fitted.parameters().separator_inconsistency() <= clip + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seeded_abstains_are_balanced(rate in 0.2f64..0.8, seed in any::<u64>()) {
        let (l, _) = star_votes(vec![0.8, 0.7, 0.6], rate, 4000, seed);
        let aug = augment_matrix(&l, AbstainPolicy::SeededRandom { seed: seed ^ 1 });
        for i in 0..3 {
            let rows: Vec<usize> = (0..l.n_rows()).filter(|&r| l.get(r, i) == 0).collect();
            if rows.is_empty() {
                continue;
            }
            let mean = rows.iter().map(|&r| f64::from(aug.get(r, 2 * i))).sum::<f64>() / rows.len() as f64;
            // five standard errors keeps the false alarm rate near 1e-6 per column
            prop_assert!(mean.abs() <= 5.0 / (rows.len() as f64).sqrt());
        }
    }

    #[test]
    fn source_order_does_not_change_labels(
        correct in prop::collection::vec(0.6f64..0.9, 4..=6),
        shift in 1usize..6,
        seed in any::<u64>(),
    ) {
        let m = correct.len();
        let perm: Vec<usize> = (0..m).map(|i| (i + shift) % m).collect();
        let (l, _) = star_votes(correct, 0.2, 2000, seed);
        let permuted = l.map(|r, c, _| l.get(r, perm[c])).unwrap();
        let model = LabelModel::new(DependencyGraph::star(m), ClassPrior::balance(0.5).unwrap()).unwrap();
        let (a, b) = (model.fit(&l).unwrap(), model.fit(&permuted).unwrap());
        let (pa, pb) = (a.predict_proba(&l).unwrap(), b.predict_proba(&permuted).unwrap());
        for r in 0..l.n_rows() {
            prop_assert!((pa.get(r, 0) - pb.get(r, 0)).abs() < 1e-9);
        }
        let (acc_a, acc_b) = (a.accuracies().unwrap(), b.accuracies().unwrap());
        for (c, &p) in perm.iter().enumerate() {
            prop_assert!((acc_b.source(c) - acc_a.source(p)).abs() < 1e-9);
        }
    }

    #[test]
    fn sliding_window_matches_batch_over_its_rows(w in 1usize..80, n in 1usize..200, seed in any::<u64>()) {
        let (l, _) = star_votes(vec![0.8, 0.7, 0.65, 0.6], 0.3, n, seed);
        let model = LabelModel::new(DependencyGraph::star(4), ClassPrior::balance(0.5).unwrap()).unwrap();
        let mut state = RollingState::new(model.clone(), Window::Sliding(w), Some(0)).unwrap();
        for row in l.rows() {
            state.ingest(row).unwrap();
        }
        let rows = state.window_rows();
        prop_assert_eq!(rows.n_rows(), w.min(n));
        prop_assert_eq!(rows.collapse(), l.slice_rows(n - w.min(n), n));
        let batch = SufficientStats::from_augmented(&rows, model.stats_layout()).unwrap();
        prop_assert_eq!(&batch, state.stats());
        match (model.fit_stats(&batch), model.fit_stats(state.stats())) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.parameters(), b.parameters()),
            (a, b) => prop_assert_eq!(a.is_ok(), b.is_ok()),
        }
    }
}

#[test]
fn star_graph_has_one_clique_per_source() {
    let jt = build_junction_tree(&DependencyGraph::star(4)).unwrap();
    assert_eq!(jt.cliques().len(), 4);
    assert_eq!(jt.separators().len(), 1);
    assert_eq!(jt.separators()[0].members, vec![Vertex::Task(0)]);
    assert_eq!(jt.separators()[0].degree, 4);
}
