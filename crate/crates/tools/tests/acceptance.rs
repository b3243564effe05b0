//! Acceptance criteria. Every test prints one `ACCEPTANCE <n> PASS|FAIL`
//! line before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a one-screen summary.

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpan_core::design::graph::{CandidateGraph, Edge};
use wpan_core::design::lattice::{generate_scenario, LatticeSpec};
use wpan_core::design::{design_model, extended_sptiep, sptiep, AnalyticEvaluator, DesignOptions, Qos};
use wpan_core::fixed_point::equations::service_and_discard;
use wpan_core::fixed_point::teff::{boorstyn, md_infinity};
use wpan_core::params::symbols_to_seconds;
use wpan_core::qna::{service_moments, service_transform};
use wpan_core::scenario::{line, random_tree, TreeSpec};
use wpan_core::{qna_sweep, replicate, solve, AnalysisConfig, ProtocolParams, SimConfig, TeffModel};
use wpan_tools::report::{analysis_tables, sim_tables, to_csv_string};
use wpan_tools::sweep::{analyze_sweep, simulate_sweep};
use wpan_tools::Scenario;

fn verdict(criterion: u32, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion} {word}: {detail}");
    assert!(pass, "criterion {criterion}: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// Criterion 1 ------------------------------------------------------------

/// Walks every path of the attempt tree: up to `m` CCAs per transmission,
/// up to `n` transmissions per packet. Returns (mean time, discard prob).
fn enumerate_attempts(params: &ProtocolParams, alpha: f64, gamma: f64) -> (f64, f64) {
    let m = params.mac_max_csma_backoffs + 1;
    let n = if params.acks_enabled { params.max_frame_retries + 1 } else { 1 };
    let t_tx = params.t_tx() as f64;
    let stage_time = |s: u32| {
        let be = (params.mac_min_be + s).min(params.mac_max_be);
        params.slot as f64 * ((1u64 << be) - 1) as f64 / 2.0 + params.cca_duration as f64
    };

    fn walk(
        tx: u32,
        stage: u32,
        prob: f64,
        elapsed: f64,
        ctx: &(u32, u32, f64, f64, f64, &dyn Fn(u32) -> f64),
        acc: &mut (f64, f64),
    ) {
        let &(m, n, t_tx, alpha, gamma, stage_time) = ctx;
        let elapsed = elapsed + stage_time(stage);
        // busy CCA
        let busy = prob * alpha;
        if stage + 1 == m {
            acc.0 += busy * elapsed;
            acc.1 += busy;
        } else {
            walk(tx, stage + 1, busy, elapsed, ctx, acc);
        }
        // idle CCA, then a transmission
        let sent = prob * (1.0 - alpha);
        let after = elapsed + t_tx;
        acc.0 += sent * (1.0 - gamma) * after;
        let failed = sent * gamma;
        if tx + 1 == n {
            acc.0 += failed * after;
            acc.1 += failed;
        } else {
            walk(tx + 1, 0, failed, after, ctx, acc);
        }
    }

    let mut acc = (0.0, 0.0);
    walk(0, 0, 1.0, 0.0, &(m, n, t_tx, alpha, gamma, &stage_time), &mut acc);
    acc
}

#[test]
fn criterion_01_service_and_discard_match_enumeration() {
    let start = Instant::now();
    let mut worst_sigma: f64 = 0.0;
    let mut worst_delta: f64 = 0.0;
    for params in [ProtocolParams::default(), ProtocolParams::with_payload_bytes(70)] {
        for a in 0..20 {
            for g in 0..20 {
                let alpha = 0.95 * a as f64 / 19.0;
                let gamma = 0.95 * g as f64 / 19.0;
                let s = service_and_discard(1, &params, alpha, gamma).unwrap();
                let (mean_time, discard) = enumerate_attempts(&params, alpha, gamma);
                worst_sigma = worst_sigma.max(rel(s.sigma, 1.0 / mean_time));
                worst_delta = worst_delta.max((s.delta - discard).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        worst_sigma <= 1e-12 && worst_delta <= 1e-12 && elapsed < Duration::from_secs(1),
        &format!("sigma rel err {worst_sigma:.1e}, delta abs err {worst_delta:.1e}, {elapsed:?}"),
    );
}

// Criterion 2 ------------------------------------------------------------

#[test]
fn criterion_02_moments_match_transform_derivatives() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t_tx = ProtocolParams::default().t_tx() as f64;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let beta = rng.gen_range(0.002..0.05);
        let alpha = rng.gen_range(0.0..0.9);
        let gamma = rng.gen_range(0.0..0.9);
        let m = service_moments(beta, alpha, gamma, t_tx).unwrap();
        let l = |z: f64| service_transform(z, beta, alpha, gamma, t_tx);
        // five-point stencils on a step scaled to the time unit of S
        let h = 1e-3 / (1.0 / (beta * (1.0 - alpha)) + t_tx);
        let d1 = (-l(2.0 * h) + 8.0 * l(h) - 8.0 * l(-h) + l(-2.0 * h)) / (12.0 * h);
        let d2 = (-l(2.0 * h) + 16.0 * l(h) - 30.0 * l(0.0) + 16.0 * l(-h) - l(-2.0 * h)) / (12.0 * h * h);
        worst = worst.max(rel(-d1, m.mean)).max(rel(d2, m.second));
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        worst <= 1e-6 && elapsed < Duration::from_secs(1),
        &format!("worst relative error {worst:.1e} over 100 triples, {elapsed:?}"),
    );
}

// Criterion 3 ------------------------------------------------------------

/// Mean busy period of an M/D/inf queue by direct simulation.
fn busy_period_monte_carlo(zeta: f64, t_tx: f64, periods: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut total = 0.0;
    for _ in 0..periods {
        let mut end = t_tx;
        let mut now = 0.0;
        loop {
            let u: f64 = rng.gen();
            now += -(1.0 - u).ln() / zeta;
            if now >= end {
                break;
            }
            end = now + t_tx;
        }
        total += end;
    }
    total / periods as f64
}

#[test]
fn criterion_03_teff_oracles() {
    let start = Instant::now();
    let t_tx = 294.0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut worst_mc: f64 = 0.0;
    for load in [0.2, 1.0] {
        let zeta = load / t_tx;
        let mc = busy_period_monte_carlo(zeta, t_tx, 1_000_000, &mut rng);
        worst_mc = worst_mc.max(rel(md_infinity(zeta, t_tx), mc));
    }

    let mut single_exact = true;
    for _ in 0..50 {
        let r = rng.gen_range(1e-5..5e-3);
        single_exact &= boorstyn(0, &[r], &[0], t_tx).unwrap() == t_tx;
    }

    let mut ordered = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let rates: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-5..2e-3)).collect();
        let mut masks = vec![0u32; n];
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.5) {
                    masks[a] |= 1 << b;
                    masks[b] |= 1 << a;
                }
            }
        }
        let b = boorstyn(0, &rates, &masks, t_tx).unwrap();
        let m = md_infinity(rates.iter().sum(), t_tx);
        if b <= m * (1.0 + 1e-12) {
            ordered += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        3,
        worst_mc <= 0.005 && single_exact && ordered == 50 && elapsed < Duration::from_secs(60),
        &format!(
            "M/D/inf vs Monte Carlo {:.3}%, single neighbour exact {single_exact}, \
             Boorstyn <= M/D/inf on {ordered}/50, {elapsed:?}",
            100.0 * worst_mc
        ),
    );
}

// Criterion 4 ------------------------------------------------------------

#[test]
fn criterion_04_fixed_point_converges_on_generated_trees() {
    let start = Instant::now();
    let params = ProtocolParams::default();
    let cfg = AnalysisConfig::default();
    let mut failures = Vec::new();
    let mut worst_iterations = 0;
    for seed in 0..20u64 {
        let spec = TreeSpec {
            nodes: 8 + (seed as usize % 13),
            mean_degree: if seed % 2 == 0 { 3.0 } else { 2.5 },
            max_degree: 4,
            link_per: 0.01,
            ..TreeSpec::default()
        };
        let base = random_tree(seed, &spec).unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            let model = base.with_uniform_rate(lambda);
            match solve(&model, &params, &cfg) {
                Ok(fp) if fp.converged && fp.residual <= 1e-6 && fp.iterations <= 10_000 => {
                    worst_iterations = worst_iterations.max(fp.iterations)
                }
                other => failures.push(format!("seed {seed} lambda {lambda}: {:?}", other.map(|f| f.residual))),
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        4,
        failures.is_empty() && elapsed < Duration::from_secs(30),
        &format!(
            "{} of 60 solves failed {failures:?}, at most {worst_iterations} iterations, {elapsed:?}",
            failures.len()
        ),
    );
}

// Criteria 5 and 6 -------------------------------------------------------

/// Validation setup shared by criteria 5 and 6: no ACKs, 70-byte payload,
/// product-form `T_eff`, 300 s x 10 replications per point.
fn validation_point(seed: u64, lambda: f64) -> (wpan_core::NetworkModel, wpan_core::PerfReport, f64, wpan_core::SimStats) {
    let mut params = ProtocolParams::with_payload_bytes(70);
    params.acks_enabled = false;
    let cfg = AnalysisConfig {
        teff_model: TeffModel::Boorstyn,
        ..AnalysisConfig::default()
    };
    let model = random_tree(seed, &TreeSpec::default()).unwrap().with_uniform_rate(lambda);
    let fp = solve(&model, &params, &cfg).unwrap();
    assert!(fp.converged);
    let report = qna_sweep(&model, &params, &fp);
    let sim_cfg = SimConfig {
        duration_s: 300.0,
        replications: 10,
        seed: 100 + seed,
        warmup_s: 20.0,
    };
    let stats = replicate(&model, &params, &sim_cfg).unwrap();
    let total_q = fp.total_load(&model);
    (model, report, total_q, stats)
}

#[test]
fn criterion_05_source_metrics_match_simulation_at_low_rate() {
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for seed in 0..5u64 {
        for lambda in [0.5, 1.0, 2.0] {
            let (_, report, _, stats) = validation_point(seed, lambda);
            for s in &report.sources {
                let sim = stats.source(s.node).unwrap();
                for (name, sim_value, ana) in [
                    ("delay", sim.delay.unwrap().mean, s.delay),
                    ("p_del", sim.delivery.unwrap().mean, s.delivery),
                ] {
                    let e = rel(ana, sim_value);
                    if e > worst {
                        worst = e;
                        worst_at = format!("{name} of node {} in tree {seed} at {lambda} pps", s.node);
                    }
                }
            }
        }
    }
    verdict(
        5,
        worst <= 0.15,
        &format!("worst relative error {:.1}% ({worst_at}), limit 15%", 100.0 * worst),
    );
}

#[test]
fn criterion_06_total_queue_load_tracks_simulation() {
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for seed in 0..5u64 {
        for lambda in [0.5, 1.0, 2.0, 4.0, 6.0] {
            let (_, _, total_q, stats) = validation_point(seed, lambda);
            let e = rel(total_q, stats.total_load.unwrap().mean);
            if e > worst {
                worst = e;
                worst_at = format!("tree {seed} at {lambda} pps");
            }
        }
    }
    verdict(
        6,
        worst <= 0.10,
        &format!("worst relative error of sum q {:.1}% ({worst_at}), limit 10%", 100.0 * worst),
    );
}

// Criterion 7 ------------------------------------------------------------

/// Smallest longest edge over every spanning tree (as parent choices) whose
/// nodes all lie within `h_max` hops of the base station.
fn brute_force_minimax(graph: &CandidateGraph, h_max: usize) -> Option<f64> {
    struct Search {
        bs: usize,
        h_max: usize,
        free: Vec<usize>,
        options: Vec<Vec<(usize, f64)>>,
        parent: Vec<usize>,
        best: Option<f64>,
    }

    impl Search {
        fn hop_feasible(&self) -> bool {
            (0..self.parent.len()).all(|mut v| {
                let mut hops = 0;
                while v != self.bs {
                    v = self.parent[v];
                    hops += 1;
                    if hops > self.h_max {
                        return false;
                    }
                }
                true
            })
        }

        fn assign(&mut self, k: usize, longest: f64) {
            if k == self.free.len() {
                if self.hop_feasible() && self.best.is_none_or(|b| longest < b) {
                    self.best = Some(longest);
                }
                return;
            }
            let v = self.free[k];
            for c in 0..self.options[v].len() {
                let (u, len) = self.options[v][c];
                self.parent[v] = u;
                self.assign(k + 1, longest.max(len));
            }
        }
    }

    let n = graph.len();
    let mut options: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in &graph.edges {
        options[e.a].push((e.b, e.length));
        options[e.b].push((e.a, e.length));
    }
    let mut search = Search {
        bs: graph.bs,
        h_max,
        free: (0..n).filter(|&v| v != graph.bs).collect(),
        options,
        parent: vec![usize::MAX; n],
        best: None,
    };
    search.assign(0, 0.0);
    search.best
}

#[test]
fn criterion_07_sptiep_matches_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = Vec::new();
    let mut feasible = 0;
    for g in 0..200 {
        let n = rng.gen_range(2..=8);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.6) {
                    edges.push(Edge {
                        a,
                        b,
                        length: rng.gen_range(1..=12) as f64,
                    });
                }
            }
        }
        let graph = CandidateGraph {
            positions: vec![(0.0, 0.0); n],
            bs: rng.gen_range(0..n),
            edges,
        };
        let h_max = rng.gen_range(1..n);
        let expected = brute_force_minimax(&graph, h_max);
        let got = sptiep(&graph, h_max).map(|t| {
            let hop_ok = t.tree.max_hops() <= h_max;
            (t.tree.max_edge(), hop_ok)
        });
        match (expected, got) {
            (None, None) => {}
            (Some(e), Some((w, true))) if e == w => feasible += 1,
            (e, w) => mismatches.push(format!("graph {g}: brute force {e:?}, SPTiEP {w:?}")),
        }
    }
    let elapsed = start.elapsed();
    verdict(
        7,
        mismatches.is_empty() && elapsed < Duration::from_secs(60),
        &format!(
            "{} mismatches in 200 graphs ({feasible} feasible) {mismatches:?}, {elapsed:?}",
            mismatches.len()
        ),
    );
}

// Criterion 8 ------------------------------------------------------------

#[test]
fn criterion_08_extended_sptiep_designs_meet_qos_in_simulation() {
    let qos = Qos {
        link_per: 0.01,
        p_del: 0.95,
        d_max_s: 0.025,
        lambda_pps: 1.0,
    };
    let params = ProtocolParams::with_payload_bytes(70);
    let mut infeasible = Vec::new();
    let mut missed = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in 0..30u64 {
        let problem = generate_scenario(seed, &LatticeSpec::default(), qos).unwrap();
        let mut evaluator = AnalyticEvaluator {
            params,
            config: AnalysisConfig::default(),
        };
        let start = Instant::now();
        let result = extended_sptiep(&problem, &params, &DesignOptions::default(), &mut evaluator).unwrap();
        slowest = slowest.max(start.elapsed());
        if !result.is_feasible() {
            infeasible.push(seed);
            continue;
        }
        let tree = result.tree.unwrap();
        let model = design_model(&problem.graph, &tree.parent, &qos).unwrap();
        let cfg = SimConfig {
            duration_s: 300.0,
            replications: 10,
            seed,
            warmup_s: 20.0,
        };
        let stats = replicate(&model, &params, &cfg).unwrap();
        let delay_ms = stats
            .sources
            .iter()
            .map(|s| symbols_to_seconds(s.delay.unwrap().mean) * 1e3)
            .fold(0.0, f64::max);
        let delivery = stats.sources.iter().map(|s| s.delivery.unwrap().mean).fold(1.0, f64::min);
        if delay_ms > 1e3 * qos.d_max_s || delivery < qos.p_del {
            missed.push(format!(
                "seed {seed} ({} hops): {delay_ms:.1} ms, p_del {delivery:.3}",
                tree.max_hops()
            ));
        }
    }
    verdict(
        8,
        infeasible.is_empty() && missed.is_empty() && slowest < Duration::from_secs(1),
        &format!(
            "infeasible {infeasible:?}, simulation misses QoS on {}/30 {missed:?}, slowest design {slowest:?}",
            missed.len()
        ),
    );
}

// Criterion 9 ------------------------------------------------------------

#[test]
fn criterion_09_zero_load_hop_delay() {
    let params = ProtocolParams::default();
    let model = line(1, 10.0, 15.0, 0.2, 0.0).unwrap();
    let cfg = SimConfig {
        duration_s: 1500.0,
        replications: 25,
        seed: 9,
        warmup_s: 50.0,
    };
    let stats = replicate(&model, &params, &cfg).unwrap();
    let delay = stats.sources[0].delay.unwrap();
    let expected = 90.0 + params.t_tx() as f64;
    let half = delay.half_width.unwrap();
    verdict(
        9,
        (delay.mean - expected).abs() <= half,
        &format!("per-hop delay {:.2} +- {half:.2} symbols, expected {expected}", delay.mean),
    );
}

// Criterion 10 -----------------------------------------------------------

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Analysis and short-simulation tables of one seeded tree scenario.
fn golden_tables(seed: u64) -> Vec<(String, String)> {
    let scenario = Scenario {
        model: random_tree(seed, &TreeSpec::default()).unwrap(),
        params: ProtocolParams::default(),
        analysis: AnalysisConfig::default(),
    };
    let rates = [0.5, 1.0, 2.0];
    let analysis = analysis_tables(&analyze_sweep(&scenario, &rates));
    let sim_cfg = SimConfig {
        duration_s: 60.0,
        replications: 2,
        seed,
        warmup_s: 5.0,
    };
    let sim = sim_tables(&simulate_sweep(&scenario, &rates, &sim_cfg).unwrap());
    let name = |table: &str| format!("tree-seed{seed}-{table}.csv");
    vec![
        (name("analysis_nodes"), to_csv_string(&analysis.nodes).unwrap()),
        (name("analysis_sources"), to_csv_string(&analysis.sources).unwrap()),
        (name("analysis_summary"), to_csv_string(&analysis.summary).unwrap()),
        (name("sim_nodes"), to_csv_string(&sim.nodes).unwrap()),
        (name("sim_sources"), to_csv_string(&sim.sources).unwrap()),
        (name("sim_summary"), to_csv_string(&sim.summary).unwrap()),
    ]
}

#[test]
fn criterion_10_golden_regression_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let dir = golden_dir();
    let mut differing = Vec::new();
    let mut checked = 0;
    for seed in 0..3 {
        for (file, text) in golden_tables(seed) {
            let path = dir.join(&file);
            if update {
                fs::write(&path, &text).unwrap();
            }
            match fs::read_to_string(&path) {
                Ok(golden) if golden == text => checked += 1,
                Ok(_) => differing.push(file),
                Err(e) => differing.push(format!("{file} ({e})")),
            }
        }
    }
    verdict(
        10,
        differing.is_empty(),
        &format!("{checked} golden files identical, differing {differing:?}"),
    );
}
