#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use seeding_core::asr::{centrality_bounds, sparsity_residual};
use seeding_core::dynamics::{best_response_step, ConsumptionState};
use seeding_core::io::{format_edge_list, parse_edge_list};
use seeding_core::spectral::spectral_radius;
use seeding_core::{
    biproduct_centrality, Edge, Firm, GameModel, MarketParams, SeedSet, SeedingPair, SolverOptions,
    WeightedDigraph,
};

/// Random graph rescaled so that `δ(1+β)ρ(G) = load`.
fn instance() -> impl Strategy<Value = (WeightedDigraph, MarketParams)> {
    (2usize..12)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0..n, 0..n, 0.05f64..1.0), 0..3 * n),
                0.5f64..2.0,
                0.0f64..2.0,
                0.0f64..0.9,
                0.2f64..0.9,
                0.1f64..0.9,
            )
        })
        .prop_map(|(n, raw, price, surplus, beta, delta, load)| {
            let mut edges: Vec<Edge> = Vec::new();
            for (i, j, w) in raw {
                if i != j && !edges.iter().any(|e| e.influenced == i && e.influencer == j) {
                    edges.push(Edge::new(i, j, w));
                }
            }
            let params = MarketParams::new(price + surplus, price, beta, delta).unwrap();
            let graph = WeightedDigraph::new(n, edges).unwrap();
            let rho = spectral_radius(&graph, 1e-12, 200_000).unwrap().radius;
            if rho == 0.0 {
                return (graph, params);
            }
            let scale = load / (params.attenuations().1 * rho);
            let scaled = WeightedDigraph::new(
                n,
                graph
                    .edges()
                    .iter()
                    .map(|e| Edge::new(e.influenced, e.influencer, e.weight * scale)),
            )
            .unwrap();
            (scaled, params)
        })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn close(x: f64, y: f64, rel: f64) -> bool {
    (x - y).abs() <= rel * x.abs().max(y.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centralities_follow_relabeling(
        (graph, params, perm) in instance().prop_flat_map(|(g, p)| {
            let n = g.node_count();
            (Just(g), Just(p), permutation(n))
        })
    ) {
        let opts = SolverOptions::default();
        let original = biproduct_centrality(&graph, &params, &opts).unwrap();
        let relabeled = biproduct_centrality(&graph.permuted(&perm), &params, &opts).unwrap();
        for v in 0..graph.node_count() {
            prop_assert!(close(original.c_new[v], relabeled.c_new[perm[v]], 1e-10));
            prop_assert!(close(original.c_cross[v], relabeled.c_cross[perm[v]], 1e-10));
        }
    }

    #[test]
    fn centralities_respect_the_bounds((graph, params) in instance()) {
        let bundle = biproduct_centrality(&graph, &params, &SolverOptions::default()).unwrap();
        let out = graph.out_degrees();
        for v in 0..graph.node_count() {
            prop_assert!(bundle.a[v] <= bundle.b[v] + 1e-12);
            prop_assert!(bundle.c_cross[v] >= -1e-12);
            let lower = 1.0 + params.delta * params.beta * out[v];
            prop_assert!(bundle.c_new[v] >= lower * (1.0 - 1e-10));
        }
        if let Some(upper) = centrality_bounds(&params, graph.max_out_degree()) {
            for &c in &bundle.c_new {
                prop_assert!(c <= upper * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn residual_shrinks_as_the_set_grows(
        (graph, params, picks) in instance().prop_flat_map(|(g, p)| {
            let n = g.node_count();
            (Just(g), Just(p), prop::collection::vec(0..n, 1..n + 1))
        })
    ) {
        let model = GameModel::new(&graph, &params, &SolverOptions::default()).unwrap();
        let n = graph.node_count();
        let mut set = SeedSet::empty(n);
        let mut last_residual = sparsity_residual(model.centrality(), &set);
        let mut last_tau = model.tau(&set);
        prop_assert!(close(last_residual, 1.0, 1e-12));
        for v in picks {
            set.insert(v);
            let residual = sparsity_residual(model.centrality(), &set);
            let tau = model.tau(&set);
            prop_assert!(residual <= last_residual + 1e-15);
            prop_assert!(tau <= last_tau + 1e-15);
            last_residual = residual;
            last_tau = tau;
        }
        prop_assert_eq!(model.tau(&SeedSet::full(n)), 0.0);
    }

    #[test]
    fn consumption_is_monotone_in_seeding(
        (graph, params, base, bump) in instance().prop_flat_map(|(g, p)| {
            let n = g.node_count();
            (
                Just(g),
                Just(p),
                prop::collection::vec(0.0f64..3.0, 2 * n),
                prop::collection::vec(0.0f64..1.0, 2 * n),
            )
        })
    ) {
        let n = graph.node_count();
        let model = GameModel::new(&graph, &params, &SolverOptions::default()).unwrap();
        let low = SeedingPair::new(base[..n].to_vec(), base[n..].to_vec()).unwrap();
        let high = SeedingPair::new(
            base[..n].iter().zip(&bump).map(|(s, d)| s + d).collect(),
            base[n..].iter().zip(&bump[n..]).map(|(s, d)| s + d).collect(),
        )
        .unwrap();
        let (lb, lu) = model.discounted_consumption(&low).unwrap();
        let (hb, hu) = model.discounted_consumption(&high).unwrap();
        for v in 0..n {
            prop_assert!(lb[v] >= 0.0 && lu[v] >= 0.0);
            prop_assert!(hb[v] >= lb[v] - 1e-9 * lb[v].max(1.0));
            prop_assert!(hu[v] >= lu[v] - 1e-9 * lu[v].max(1.0));
        }
    }

    #[test]
    fn each_step_is_a_best_response(
        (graph, params, start, probe) in instance().prop_flat_map(|(g, p)| {
            let n = g.node_count();
            (
                Just(g),
                Just(p),
                prop::collection::vec(0.0f64..3.0, 2 * n),
                prop::collection::vec(-1.0f64..1.0, n),
            )
        })
    ) {
        let n = graph.node_count();
        let seeding = SeedingPair::new(start[..n].to_vec(), start[n..].to_vec()).unwrap();
        let state = ConsumptionState::initial(&seeding);
        let next = best_response_step(&state, &graph, &params).unwrap();
        for i in 0..n {
            let best = seeding_core::dynamics::agent_utility(i, next.x_bar[i], &state, &graph, &params, Firm::A).unwrap();
            let other = seeding_core::dynamics::agent_utility(
                i,
                (next.x_bar[i] + probe[i]).max(0.0),
                &state,
                &graph,
                &params,
                Firm::A,
            )
            .unwrap();
            prop_assert!(best >= other - 1e-9 * best.abs().max(1.0));
        }
    }

    #[test]
    fn nash_gradient_vanishes((graph, params) in instance()) {
        let model = GameModel::new(&graph, &params, &SolverOptions::default()).unwrap();
        let nash = model.nash_seeding();
        for firm in [Firm::A, Firm::B] {
            for g in model.utility_gradient(&nash, firm) {
                prop_assert!(g.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn edge_lists_round_trip((graph, _) in instance()) {
        let text = format_edge_list(&graph);
        prop_assert_eq!(parse_edge_list(&text).unwrap(), graph);
    }
}
