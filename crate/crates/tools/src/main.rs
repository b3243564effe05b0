use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wpan_core::design::lattice::{generate_scenario, BsPlacement, LatticeSpec};
use wpan_core::design::{design_model, extended_sptiep, AnalyticEvaluator, DesignOptions, DesignProblem, Qos};
use wpan_core::fixed_point::Stability;
use wpan_core::scenario::{line, random_tree, star, TreeSpec};
use wpan_core::{AnalysisConfig, ProtocolParams, SimConfig, TeffModel};
use wpan_tools::compare::{CompareReport, Tolerances};
use wpan_tools::report::{analysis_tables, design_trace, sim_tables, stability_name, write_csv_file};
use wpan_tools::scenario_file::{
    file_to_json, load_scenario, load_scenario_file, scenario_to_json, NodeEntry, RoleName, ScenarioFile,
};
use wpan_tools::sweep::{analyze_sweep, replicate_parallel, simulate_sweep, AnalysisPoint};
use wpan_tools::{Scenario, ToolError};

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

/// Performance analysis, simulation and topology design for beaconless
/// IEEE 802.15.4 tree networks.
#[derive(Debug, Parser)]
#[command(name = "wpan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the fixed point and the delay model over an arrival-rate sweep.
    Analyze(AnalyzeArgs),
    /// Run replicated simulations over an arrival-rate sweep.
    Simulate(SimulateArgs),
    /// Run both engines and report relative errors with bands.
    Compare(CompareArgs),
    /// Design a minimax-edge tree that meets QoS targets.
    Design(DesignArgs),
    /// Write a generated scenario file.
    GenScenario(GenArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated per-source rates in packets/s; defaults to the rates
    /// in the scenario file.
    #[arg(long, value_delimiter = ',')]
    lambda_list: Vec<f64>,
    /// Disable acknowledgements and retransmissions.
    #[arg(long)]
    no_acks: bool,
    #[arg(long, env = "WPAN_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TeffArg {
    Mdinf,
    Boorstyn,
}

impl From<TeffArg> for TeffModel {
    fn from(t: TeffArg) -> Self {
        match t {
            TeffArg::Mdinf => TeffModel::MdInfinity,
            TeffArg::Boorstyn => TeffModel::Boorstyn,
        }
    }
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Overrides the scenario's dilation model.
    #[arg(long, value_enum)]
    teff_model: Option<TeffArg>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1500.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 50.0)]
    warmup_s: f64,
    #[arg(long, default_value_t = 25)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            duration_s: self.duration_s,
            replications: self.reps,
            seed: self.seed,
            warmup_s: self.warmup_s,
        }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// Node positions and base station; routing and sensing entries are
    /// ignored. Without it a lattice scenario is generated from `--seed`.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_parser = parse_qos, default_value = "p=0.01,pdel=0.95,dmax-ms=25,lambda-pps=1")]
    qos: Qos,
    /// MAC payload in bytes; sets the DATA frame duration.
    #[arg(long)]
    payload_bytes: Option<u32>,
    /// Replaces the computed lone-packet single-hop delay in the hop bound.
    #[arg(long)]
    single_hop_ms: Option<f64>,
    /// Simulate the final design and check both QoS targets.
    #[arg(long)]
    validate_sim: bool,
    #[arg(long, default_value_t = 300.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 20.0)]
    warmup_s: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Lattice and simulation seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "WPAN_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Tree,
    Star,
    Line,
    Lattice,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BsArg {
    Corner,
    Centre,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Tree: total nodes including the base station. Other kinds: sources.
    #[arg(long, default_value_t = 10)]
    nodes: usize,
    /// Tree: target mean CS degree. Star: exact CS degree.
    #[arg(long, default_value_t = 3.0)]
    cs_degree: f64,
    /// Tree and line carrier-sense range.
    #[arg(long)]
    cs_range_m: Option<f64>,
    /// Line spacing, star radius or lattice cell.
    #[arg(long)]
    spacing_m: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    area_m: f64,
    #[arg(long, value_enum, default_value_t = BsArg::Corner)]
    bs: BsArg,
    #[arg(long, default_value_t = 1.0)]
    lambda_pps: f64,
    #[arg(long, default_value_t = 0.01)]
    per: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_qos(text: &str) -> Result<Qos, String> {
    let mut qos = Qos {
        link_per: 0.01,
        p_del: 0.95,
        d_max_s: 0.025,
        lambda_pps: 1.0,
    };
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("`{value}` is not a number"))?;
        match key.trim() {
            "p" => qos.link_per = v,
            "pdel" => qos.p_del = v,
            "dmax-ms" => qos.d_max_s = v / 1e3,
            "lambda-pps" => qos.lambda_pps = v,
            other => return Err(format!("unknown QoS key `{other}` (expected p, pdel, dmax-ms, lambda-pps)")),
        }
    }
    qos.validate().map_err(|e| e.to_string())?;
    Ok(qos)
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    NotConverged,
    AcceptanceViolated,
}

fn create_dir(dir: &Path) -> Result<(), ToolError> {
    fs::create_dir_all(dir).map_err(|e| ToolError::io(dir, e))
}

fn load(common: &CommonArgs, teff: Option<TeffArg>) -> Result<Scenario, ToolError> {
    let mut s = load_scenario(&common.scenario)?;
    if common.no_acks {
        s.params.acks_enabled = false;
    }
    if let Some(t) = teff {
        s.analysis.teff_model = t.into();
    }
    if common.lambda_list.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(ToolError::Usage("--lambda-list rates must be non-negative numbers".into()));
    }
    Ok(s)
}

fn rate_label(l: Option<f64>) -> String {
    l.map_or_else(|| "scenario rates".to_owned(), |l| format!("{l} pps"))
}

fn report_analysis(points: &[AnalysisPoint]) -> bool {
    let mut all_converged = true;
    for pt in points {
        let at = rate_label(pt.lambda_pps);
        match &pt.outcome {
            Ok(o) => {
                let total = o.fp.total_load(&pt.model);
                let stability = o.fp.stability(&pt.model);
                println!(
                    "{at}: {} after {} iterations (residual {:.2e}), sum q = {total:.4} ({})",
                    if o.fp.converged { "converged" } else { "NOT converged" },
                    o.fp.iterations,
                    o.fp.residual,
                    stability_name(stability)
                );
                if stability != Stability::Stable {
                    eprintln!("warning: {at}: sum q = {total:.4} is past the stability threshold 0.9");
                }
                all_converged &= o.fp.converged;
            }
            Err(e) => {
                eprintln!("error: {at}: {e}");
                all_converged = false;
            }
        }
    }
    all_converged
}

fn write_analysis(dir: &Path, points: &[AnalysisPoint]) -> Result<(), ToolError> {
    let t = analysis_tables(points);
    write_csv_file(&dir.join("analysis_nodes.csv"), &t.nodes)?;
    write_csv_file(&dir.join("analysis_sources.csv"), &t.sources)?;
    write_csv_file(&dir.join("analysis_summary.csv"), &t.summary)
}

fn analyze(args: &AnalyzeArgs) -> Result<Outcome, ToolError> {
    let s = load(&args.common, args.analysis.teff_model)?;
    let points = analyze_sweep(&s, &args.common.lambda_list);
    let converged = report_analysis(&points);
    create_dir(&args.common.out_dir)?;
    write_analysis(&args.common.out_dir, &points)?;
    Ok(if converged { Outcome::Ok } else { Outcome::NotConverged })
}

fn simulate(args: &SimulateArgs) -> Result<Outcome, ToolError> {
    let s = load(&args.common, None)?;
    let points = simulate_sweep(&s, &args.common.lambda_list, &args.sim.config())?;
    let t = sim_tables(&points);
    for row in &t.summary {
        println!(
            "{}: {} replications, sum q = {}",
            rate_label(row.lambda_pps),
            row.replications,
            row.total_q.map_or_else(|| "n/a".into(), |q| format!("{q:.4}"))
        );
    }
    let dir = &args.common.out_dir;
    create_dir(dir)?;
    write_csv_file(&dir.join("sim_nodes.csv"), &t.nodes)?;
    write_csv_file(&dir.join("sim_sources.csv"), &t.sources)?;
    write_csv_file(&dir.join("sim_summary.csv"), &t.summary)?;
    Ok(Outcome::Ok)
}

fn compare(args: &CompareArgs) -> Result<Outcome, ToolError> {
    let s = load(&args.common, args.analysis.teff_model)?;
    let lambdas = &args.common.lambda_list;
    let analysis = analyze_sweep(&s, lambdas);
    let converged = report_analysis(&analysis);
    let simulation = simulate_sweep(&s, lambdas, &args.sim.config())?;
    let report = CompareReport::from_points(&analysis, &simulation);
    let dir = &args.common.out_dir;
    create_dir(dir)?;
    write_analysis(dir, &analysis)?;
    let t = sim_tables(&simulation);
    write_csv_file(&dir.join("sim_nodes.csv"), &t.nodes)?;
    write_csv_file(&dir.join("sim_sources.csv"), &t.sources)?;
    write_csv_file(&dir.join("sim_summary.csv"), &t.summary)?;
    write_csv_file(&dir.join("compare.csv"), &report.rows)?;
    write_csv_file(&dir.join("compare_summary.csv"), &report.summary)?;
    for row in &report.summary {
        println!(
            "{}: {:<8} mean error {:>8} {}",
            rate_label(row.lambda_pps),
            row.metric.name(),
            row.mean_rel_error.map_or_else(|| "n/a".into(), |e| format!("{:+.1}%", e * 100.0)),
            row.band.map_or("", |b| b.symbol())
        );
    }
    if !converged {
        return Ok(Outcome::NotConverged);
    }
    let violations = report.violations(&Tolerances::default());
    for v in &violations {
        eprintln!("violation: {v}");
    }
    Ok(if violations.is_empty() {
        Outcome::Ok
    } else {
        Outcome::AcceptanceViolated
    })
}

fn design(args: &DesignArgs) -> Result<Outcome, ToolError> {
    let (problem, mut params) = match &args.scenario {
        Some(path) => {
            let file = load_scenario_file(path)?;
            let params = file.protocol.apply(file.acks_enabled);
            let problem = DesignProblem {
                graph: file.candidate_graph()?,
                qos: args.qos,
            };
            (problem, params)
        }
        None => (
            generate_scenario(args.seed, &LatticeSpec::default(), args.qos)?,
            ProtocolParams::default(),
        ),
    };
    if let Some(bytes) = args.payload_bytes {
        params.data_symbols = ProtocolParams::with_payload_bytes(bytes).data_symbols;
    }
    params.validate()?;
    let options = DesignOptions {
        single_hop_delay: args
            .single_hop_ms
            .map(|ms| wpan_core::params::seconds_to_symbols(ms / 1e3)),
    };
    let mut evaluator = AnalyticEvaluator {
        params,
        config: AnalysisConfig::default(),
    };
    let result = extended_sptiep(&problem, &params, &options, &mut evaluator)?;
    println!(
        "status {:?}, hop bound {}, max edge {}, {} candidate(s) evaluated",
        result.status,
        result.h_max,
        result.max_edge.map_or_else(|| "n/a".into(), |e| format!("{e:.3} m")),
        result.trace.len()
    );
    create_dir(&args.out_dir)?;
    write_csv_file(&args.out_dir.join("design_trace.csv"), &design_trace(&result))?;
    let Some(tree) = result.tree.as_ref().filter(|_| result.is_feasible()) else {
        return Ok(Outcome::Ok);
    };
    let model = design_model(&problem.graph, &tree.parent, &problem.qos)?;
    let scenario = Scenario {
        model,
        params,
        analysis: AnalysisConfig::default(),
    };
    let path = args.out_dir.join("design_tree.json");
    fs::write(&path, scenario_to_json(&scenario)).map_err(|e| ToolError::io(&path, e))?;

    if !args.validate_sim {
        return Ok(Outcome::Ok);
    }
    let cfg = SimConfig {
        duration_s: args.duration_s,
        replications: args.reps,
        seed: args.seed,
        warmup_s: args.warmup_s,
    };
    let stats = replicate_parallel(&scenario.model, &params, &cfg)?;
    let t = sim_tables(&[wpan_tools::sweep::SimPoint {
        lambda_pps: Some(problem.qos.lambda_pps),
        model: scenario.model.clone(),
        stats,
    }]);
    write_csv_file(&args.out_dir.join("design_sim_sources.csv"), &t.sources)?;
    let mut ok = true;
    for s in &t.sources {
        let delay_ok = s.delay_ms.is_some_and(|d| d <= problem.qos.d_max_s * 1e3);
        let del_ok = s.p_del.is_some_and(|p| p >= problem.qos.p_del);
        if !(delay_ok && del_ok) {
            ok = false;
            eprintln!(
                "violation: source {}: simulated delay {:?} ms, delivery {:?}",
                s.source, s.delay_ms, s.p_del
            );
        }
    }
    println!("simulation {} the QoS targets", if ok { "meets" } else { "misses" });
    Ok(if ok { Outcome::Ok } else { Outcome::AcceptanceViolated })
}

fn gen_scenario(args: &GenArgs) -> Result<Outcome, ToolError> {
    let json = match args.kind {
        Kind::Lattice => {
            let spec = LatticeSpec {
                area_m: args.area_m,
                cell_m: args.spacing_m.unwrap_or(10.0),
                sources: args.nodes,
                bs: match args.bs {
                    BsArg::Corner => BsPlacement::Corner,
                    BsArg::Centre => BsPlacement::Centre,
                },
            };
            let qos = Qos {
                link_per: args.per,
                p_del: 0.95,
                d_max_s: 0.025,
                lambda_pps: args.lambda_pps,
            };
            let problem = generate_scenario(args.seed, &spec, qos)?;
            let g = &problem.graph;
            let nodes = g
                .positions
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| NodeEntry {
                    id: i as u32,
                    x,
                    y,
                    role: if i == g.bs { RoleName::Relay } else { RoleName::Source },
                    lambda_pps: if i == g.bs { 0.0 } else { args.lambda_pps },
                    link_per: if i == g.bs { 0.0 } else { args.per },
                })
                .collect();
            file_to_json(&ScenarioFile {
                nodes,
                bs_id: g.bs as u32,
                parent: Default::default(),
                cs_range_m: None,
                cs_sets: None,
                protocol: Default::default(),
                acks_enabled: true,
                analysis: Default::default(),
            })
        }
        kind => {
            let model = match kind {
                Kind::Tree => random_tree(
                    args.seed,
                    &TreeSpec {
                        nodes: args.nodes,
                        mean_degree: args.cs_degree,
                        cs_range_m: args.cs_range_m.unwrap_or(20.0),
                        lambda_pps: args.lambda_pps,
                        link_per: args.per,
                        ..Default::default()
                    },
                )?,
                Kind::Star => {
                    if args.cs_degree.fract() != 0.0 || args.cs_degree < 1.0 {
                        return Err(ToolError::Usage("a star needs a whole CS degree".into()));
                    }
                    star(
                        args.nodes,
                        args.cs_degree as usize,
                        args.spacing_m.unwrap_or(10.0),
                        args.lambda_pps,
                        args.per,
                    )?
                }
                _ => line(
                    args.nodes,
                    args.spacing_m.unwrap_or(10.0),
                    args.cs_range_m.unwrap_or(15.0),
                    args.lambda_pps,
                    args.per,
                )?,
            };
            scenario_to_json(&Scenario {
                model,
                params: ProtocolParams::default(),
                analysis: AnalysisConfig::default(),
            })
        }
    };
    match &args.out {
        Some(path) => fs::write(path, json).map_err(|e| ToolError::io(path, e))?,
        None => print!("{json}"),
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
        Command::Design(a) => design(a),
        Command::GenScenario(a) => gen_scenario(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(EXIT_NOT_CONVERGED),
        Ok(Outcome::AcceptanceViolated) => ExitCode::from(EXIT_ACCEPTANCE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
