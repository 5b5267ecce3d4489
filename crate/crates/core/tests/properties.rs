mod common;

use common::{random_graph, random_weights, rng};
use proptest::prelude::*;
use qubo_risk::analysis::{mean_std, recursive_minimize_with, transition_report, Classification};
use qubo_risk::encoding::Decoded;
use qubo_risk::netmodel::{amplify_node_influence, generate_layered, load_graph, save_graph, LayeredGenSpec};
use qubo_risk::qubo::{assemble, export_qubo, import_qubo, ModelConfig};
use qubo_risk::solvers::{exhaustive_minimum, Budget, SolverRequest, SolverSpec};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn graph_files_round_trip(n in 7usize..120, seed in any::<u64>()) {
        let g = generate_layered(&LayeredGenSpec::scaled_infrastructure(n, seed)).unwrap();
        let bytes = save_graph(&g);
        let back = load_graph(&bytes).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(save_graph(&back), bytes);
    }

    #[test]
    fn generation_is_seeded(n in 7usize..80, seed in any::<u64>()) {
        let spec = LayeredGenSpec::scaled_infrastructure(n, seed);
        prop_assert_eq!(save_graph(&generate_layered(&spec).unwrap()), save_graph(&generate_layered(&spec).unwrap()));
    }

    #[test]
    fn qubo_files_round_trip(seed in any::<u64>(), n in 1usize..6, k in 1u32..6) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let q = assemble(&g, &ModelConfig::with_weights(random_weights(&mut r, 4.0)).with_levels(k)).unwrap();
        let text = export_qubo(&q);
        let back = import_qubo(&text).unwrap();
        prop_assert_eq!(&back, &q);
        prop_assert_eq!(export_qubo(&back), text);
    }

    #[test]
    fn encoding_round_trips(seed in any::<u64>(), n in 1usize..8, k in 1u32..11) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let q = assemble(&g, &ModelConfig::default().with_levels(k)).unwrap();
        let enc = q.encoding().unwrap();
        let scores: Vec<u32> = (0..n).map(|i| (seed as u32).wrapping_add(i as u32 * 7) % k + 1).collect();
        let a = enc.encode(&scores).unwrap();
        prop_assert_eq!(a.count_ones(), n);
        prop_assert_eq!(enc.decode(&a), Decoded::Valid(scores));
    }

    #[test]
    fn amplification_touches_only_incident_edges(seed in any::<u64>(), factor in 1.0f64..20.0) {
        let g = generate_layered(&LayeredGenSpec::scaled_infrastructure(40, seed)).unwrap();
        let id = g.nodes()[(seed % 40) as usize].id;
        let h = amplify_node_influence(&g, id, factor).unwrap();
        let mut changed = 0;
        for (e, f) in g.edges().iter().zip(h.edges()) {
            prop_assert_eq!((e.a, e.b), (f.a, f.b));
            if e.a == id || e.b == id {
                prop_assert!((f.strength - e.strength * factor).abs() <= 1e-12 * f.strength);
                changed += 1;
            } else {
                prop_assert_eq!(e.strength, f.strength);
            }
        }
        prop_assert_eq!(changed, g.degree(id).unwrap());
        prop_assert_eq!(g.nodes(), h.nodes());
    }

    #[test]
    fn heuristics_never_beat_the_exhaustive_minimum(seed in any::<u64>(), n in 1usize..4, k in 2u32..5) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let q = assemble(&g, &ModelConfig::with_weights(random_weights(&mut r, 3.0)).with_levels(k)).unwrap();
        let (_, best) = exhaustive_minimum(&q, 24).unwrap();
        let start = q.energy(&q.encoding().unwrap().encode(&g.initial_scores().iter().map(|&s| s.min(k)).collect::<Vec<_>>()).unwrap());
        for name in ["tabu", "anneal", "hybrid"] {
            let spec = SolverSpec::from_name(name).unwrap();
            let budget = if name == "tabu" { Budget::Iterations(300) } else { Budget::Iterations(30) };
            let req = SolverRequest::new(&q, seed, budget).with_reference(g.initial_scores());
            let sol = spec.solve(&req).unwrap();
            prop_assert!(sol.energy >= best - 1e-9 * best.abs().max(1.0));
            prop_assert!(sol.energy <= start + 1e-9 * start.abs().max(1.0), "{} worse than its start", name);
        }
    }

    #[test]
    fn transition_marginals_match_counts(seed in any::<u64>(), n in 7usize..60) {
        let g = generate_layered(&LayeredGenSpec::scaled_infrastructure(n, seed)).unwrap();
        let q = assemble(&g, &ModelConfig::default()).unwrap();
        let req = SolverRequest::new(&q, seed, Budget::Iterations(50)).with_reference(g.initial_scores());
        let sol = SolverSpec::from_name("tabu").unwrap().solve(&req).unwrap();
        let report = transition_report(&g, &sol).unwrap();
        let mut total = 0;
        for (t, layer) in report.transitions.iter().zip(&report.layers) {
            prop_assert_eq!(t.total() as usize, layer.stats.count);
            for (i, row) in t.counts.iter().enumerate() {
                let expected = g.nodes().iter().filter(|nd| nd.layer == t.layer && nd.initial_score as usize == i + 1).count();
                prop_assert_eq!(row.iter().sum::<u64>() as usize, expected);
            }
            total += t.total();
        }
        prop_assert_eq!(total as usize, g.len());
    }

    #[test]
    fn identity_recursion_is_stable_at_one(n in 7usize..50, seed in any::<u64>()) {
        let g = generate_layered(&LayeredGenSpec::scaled_infrastructure(n, seed)).unwrap();
        let t = recursive_minimize_with(&g, 20, 10, |_, gt| Ok(gt.initial_scores())).unwrap();
        prop_assert_eq!(t.classification, Classification::Stable);
        prop_assert_eq!(t.fixed_point_iteration, Some(1));
    }

    #[test]
    fn population_std_bounds(scores in proptest::collection::vec(1u32..=10, 1..100)) {
        let (m, s) = mean_std(&scores);
        prop_assert!((1.0..=10.0).contains(&m));
        prop_assert!((0.0..=4.5 + 1e-12).contains(&s));
    }
}
