//! Property tests of the model, analysis, simulator and designer invariants.

use proptest::prelude::*;
use wpan_core::design::graph::{CandidateGraph, Edge};
use wpan_core::design::lattice::{generate_scenario, LatticeSpec};
use wpan_core::design::{
    extended_sptiep, hop_bound, lone_packet_delay, sptiep, AnalyticEvaluator, DesignOptions, Qos,
};
use wpan_core::fixed_point::equations::{cca_failure, eta_g_c, service_and_discard};
use wpan_core::fixed_point::teff::{boorstyn, md_infinity};
use wpan_core::model::derive_neighbourhoods;
use wpan_core::scenario::{line, random_tree, TreeSpec};
use wpan_core::{qna_sweep, simulate, solve, AnalysisConfig, ProtocolParams, SimConfig, TeffModel};

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Random positions with a random recursive tree over them.
fn geometry() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<Option<usize>>, f64)> {
    (2usize..14).prop_flat_map(|n| {
        (
            prop::collection::vec((0.0..60.0f64, 0.0..60.0f64), n),
            prop::collection::vec(any::<prop::sample::Index>(), n),
            5.0..40.0f64,
        )
            .prop_map(|(pos, picks, range)| {
                let parent = (0..pos.len())
                    .map(|i| if i == 0 { None } else { Some(picks[i].index(i)) })
                    .collect();
                (pos, parent, range)
            })
    })
}

fn small_graph() -> impl Strategy<Value = (CandidateGraph, usize)> {
    (2usize..=7).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            prop::collection::vec(prop::option::weighted(0.65, 1u32..10), pairs),
            0..n,
            1..n,
        )
            .prop_map(move |(lengths, bs, h_max)| {
                let mut edges = Vec::new();
                let mut k = 0;
                for a in 0..n {
                    for b in a + 1..n {
                        if let Some(l) = lengths[k] {
                            edges.push(Edge { a, b, length: l as f64 });
                        }
                        k += 1;
                    }
                }
                let graph = CandidateGraph {
                    positions: vec![(0.0, 0.0); n],
                    bs,
                    edges,
                };
                (graph, h_max)
            })
    })
}

/// Smallest longest edge over all hop-feasible parent assignments.
fn brute_force(graph: &CandidateGraph, h_max: usize) -> Option<f64> {
    let n = graph.len();
    let mut adj = vec![Vec::new(); n];
    for e in &graph.edges {
        adj[e.a].push((e.b, e.length));
        adj[e.b].push((e.a, e.length));
    }
    let free: Vec<usize> = (0..n).filter(|&v| v != graph.bs).collect();
    let mut choice = vec![0usize; free.len()];
    if free.iter().any(|&v| adj[v].is_empty()) {
        return None;
    }
    let mut best: Option<f64> = None;
    loop {
        let mut parent = vec![usize::MAX; n];
        let mut longest: f64 = 0.0;
        for (k, &v) in free.iter().enumerate() {
            let (u, l) = adj[v][choice[k]];
            parent[v] = u;
            longest = longest.max(l);
        }
        let feasible = free.iter().all(|&v| {
            let (mut at, mut hops) = (v, 0);
            while at != graph.bs && hops <= h_max {
                at = parent[at];
                hops += 1;
            }
            at == graph.bs && hops <= h_max
        });
        if feasible && best.is_none_or(|b| longest < b) {
            best = Some(longest);
        }
        // odometer increment over the parent choices
        let mut k = 0;
        loop {
            if k == free.len() {
                return best;
            }
            choice[k] += 1;
            if choice[k] < adj[free[k]].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn carrier_sense_is_symmetric_and_partition_holds((pos, parent, range) in geometry()) {
        let h = derive_neighbourhoods(&pos, range, &parent);
        for (i, &par) in parent.iter().enumerate() {
            prop_assert!(!h.omega[i].contains(&i));
            for &j in &h.omega[i] {
                prop_assert!(h.omega[j].contains(&i));
            }
            let Some(r) = par else {
                prop_assert!(h.interference[i].is_empty());
                continue;
            };
            prop_assert!(h.c1[i].contains(&r));
            prop_assert!(!h.interference[i].contains(&i));
            for k in &h.c1[i] {
                prop_assert!(!h.c2[i].contains(k));
            }
            let mut union: Vec<usize> = h.c1[i].iter().chain(&h.c2[i]).copied().collect();
            union.sort_unstable();
            prop_assert_eq!(&union, &h.interference[i]);
        }
    }

    #[test]
    fn discard_grows_with_alpha_and_gamma(a in 0.0..0.94f64, g in 0.0..0.94f64, da in 0.0..0.05f64, dg in 0.0..0.05f64) {
        let p = ProtocolParams::default();
        let base = service_and_discard(0, &p, a, g).unwrap();
        prop_assert!(unit(base.delta) && base.sigma > 0.0 && unit(base.b));
        prop_assert!(service_and_discard(0, &p, a + da, g).unwrap().delta >= base.delta);
        prop_assert!(service_and_discard(0, &p, a, g + dg).unwrap().delta >= base.delta);
    }

    #[test]
    fn cca_failure_grows_with_perceived_rates(beta in 1e-3..0.05f64, rates in prop::collection::vec(0.0..3e-3f64, 1..8), k in any::<prop::sample::Index>(), bump in 0.0..2e-3f64) {
        let p = ProtocolParams::default();
        let t = p.t_tx() as f64;
        let alpha = |r: &[f64]| {
            let sum: f64 = r.iter().sum();
            cca_failure(eta_g_c(beta, sum, p.turnaround as f64), beta, md_infinity(sum, t))
        };
        let before = alpha(&rates);
        let mut more = rates.clone();
        more[k.index(rates.len())] += bump;
        let after = alpha(&more);
        prop_assert!(unit(before) && unit(after));
        prop_assert!(after >= before - 1e-15);
    }

    #[test]
    fn product_form_never_exceeds_md_infinity(
        rates in prop::collection::vec(1e-6..3e-3f64, 1..10),
        edges in prop::collection::vec(any::<bool>(), 45),
    ) {
        let n = rates.len();
        let mut masks = vec![0u32; n];
        let mut k = 0;
        for a in 0..n {
            for b in a + 1..n {
                if edges[k] {
                    masks[a] |= 1 << b;
                    masks[b] |= 1 << a;
                }
                k += 1;
            }
        }
        let t = 294.0;
        let product = boorstyn(0, &rates, &masks, t).unwrap();
        let md = md_infinity(rates.iter().sum(), t);
        prop_assert!(product >= t);
        prop_assert!(md >= t);
        prop_assert!(product <= md * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analysis_stays_physical(seed in 0u64..500, lambda in 0.1..8.0f64, boorstyn in any::<bool>(), acks in any::<bool>()) {
        let model = random_tree(seed, &TreeSpec::default()).unwrap().with_uniform_rate(lambda);
        let params = ProtocolParams { acks_enabled: acks, ..ProtocolParams::default() };
        let cfg = AnalysisConfig {
            teff_model: if boorstyn { TeffModel::Boorstyn } else { TeffModel::MdInfinity },
            ..AnalysisConfig::default()
        };
        let fp = solve(&model, &params, &cfg).unwrap();
        if fp.converged {
            prop_assert!(fp.residual <= cfg.tolerance);
        }
        let t_tx = params.t_tx() as f64;
        for i in model.transmitters() {
            let u = &fp.nodes[i];
            for x in [u.alpha, u.p, u.gamma, u.delta, u.q, u.b, u.idle, u.eta, u.c] {
                prop_assert!(unit(x), "node {} value {}", i, x);
            }
            prop_assert!(u.teff >= t_tx);
            prop_assert!((u.idle - ((1.0 - u.q) + u.q * u.b)).abs() < 1e-12);
            for r in [u.beta, u.sigma, u.nu, u.theta, u.tau] {
                prop_assert!(r >= 0.0);
            }
            prop_assert!(u.perceived.iter().all(|&r| r >= 0.0));
        }
        prop_assert_eq!(&fp, &solve(&model, &params, &cfg).unwrap());

        let report = qna_sweep(&model, &params, &fp);
        for s in &report.sources {
            prop_assert!(unit(s.delivery));
            let path = model.path_to_bs(s.node);
            // delivery cannot improve along a longer path
            if path.len() > 1 {
                let next = report.source(path[1]);
                if let Some(next) = next {
                    prop_assert!(s.delivery <= next.delivery + 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_load_delay_is_lone_packet_minus_turnaround(hops in 1usize..6, acks in any::<bool>()) {
        let params = ProtocolParams { acks_enabled: acks, ..ProtocolParams::default() };
        let model = line(hops, 10.0, 15.0, 1e-9, 0.0).unwrap();
        let fp = solve(&model, &params, &AnalysisConfig::default()).unwrap();
        let report = qna_sweep(&model, &params, &fp);
        let per_hop = lone_packet_delay(&params, 0.0) - params.turnaround as f64;
        for s in &report.sources {
            prop_assert!((s.delay - s.hops as f64 * per_hop).abs() < 1e-4 * s.hops as f64);
        }
    }

    #[test]
    fn simulator_conserves_packets_and_respects_bounds(seed in 0u64..200, lambda in 0.5..30.0f64, per in 0.0..0.3f64, acks in any::<bool>()) {
        let spec = TreeSpec { link_per: per, lambda_pps: lambda, ..TreeSpec::default() };
        let model = random_tree(seed, &spec).unwrap();
        let params = ProtocolParams { acks_enabled: acks, ..ProtocolParams::default() };
        let cfg = SimConfig { duration_s: 20.0, replications: 1, seed, warmup_s: 2.0 };
        let stats = simulate(&model, &params, &cfg).unwrap();
        let run = &stats.runs[0];
        for s in &run.sources {
            prop_assert_eq!(s.all_generated, s.all_delivered + s.all_discarded + s.all_in_flight);
        }
        for c in &run.nodes {
            prop_assert!(c.max_ccas_per_transmission <= params.cca_attempts());
            prop_assert!(c.max_transmissions_per_packet <= params.max_transmissions());
            prop_assert!(c.busy_ccas <= c.ccas);
        }
        for n in &stats.nodes {
            for e in [n.alpha, n.gamma, n.delta, n.q, n.b].into_iter().flatten() {
                prop_assert!(unit(e.mean));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sptiep_is_optimal_and_strictly_improving((graph, h_max) in small_graph()) {
        let got = sptiep(&graph, h_max);
        prop_assert_eq!(got.as_ref().map(|t| t.tree.max_edge()), brute_force(&graph, h_max));
        if let Some(t) = got {
            prop_assert!(t.tree.max_hops() <= h_max);
            prop_assert!(t.max_edges.windows(2).all(|w| w[1] < w[0]));
            prop_assert!(t.max_edges.len() <= graph.distinct_lengths().len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn extended_sptiep_keeps_the_hop_bound(seed in 0u64..1000, d_max_ms in 8.0..40.0f64, lambda in 0.5..4.0f64) {
        let qos = Qos { link_per: 0.01, p_del: 0.95, d_max_s: d_max_ms / 1e3, lambda_pps: lambda };
        let params = ProtocolParams::with_payload_bytes(70);
        let problem = generate_scenario(seed, &LatticeSpec::default(), qos).unwrap();
        let mut ev = AnalyticEvaluator { params, config: AnalysisConfig::default() };
        let result = extended_sptiep(&problem, &params, &DesignOptions::default(), &mut ev).unwrap();
        prop_assert_eq!(result.h_max, hop_bound(&qos, &params, lone_packet_delay(&params, qos.link_per)));
        for entry in &result.trace {
            prop_assert!(entry.max_hops <= result.h_max);
        }
        if let Some(tree) = &result.tree {
            prop_assert!(tree.max_hops() <= result.h_max);
        }
        let admitted: Vec<f64> = result.trace.iter().filter_map(|e| e.admitted_length).collect();
        prop_assert!(admitted.windows(2).all(|w| w[0] < w[1]));
    }
}
