//! Arrival-rate sweeps over both engines. Sweep points and replications run
//! in parallel; results are merged in sweep and replication order.

use rayon::prelude::*;
use wpan_core::sim::run_replication;
use wpan_core::{qna_sweep, solve, FixedPointResult, NetworkModel, PerfReport, SimConfig, SimStats};

use crate::Scenario;

/// Models of a sweep: one per rate, or the scenario's own rates when the
/// list is empty.
pub fn sweep_models(model: &NetworkModel, lambdas: &[f64]) -> Vec<(Option<f64>, NetworkModel)> {
    if lambdas.is_empty() {
        vec![(None, model.clone())]
    } else {
        lambdas.iter().map(|&l| (Some(l), model.with_uniform_rate(l))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutcome {
    pub fp: FixedPointResult,
    pub report: PerfReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisPoint {
    pub lambda_pps: Option<f64>,
    pub model: NetworkModel,
    pub outcome: Result<AnalysisOutcome, wpan_core::Error>,
}

impl AnalysisPoint {
    pub fn converged(&self) -> bool {
        matches!(&self.outcome, Ok(o) if o.fp.converged)
    }
}

pub fn analyze_point(scenario: &Scenario, lambda_pps: Option<f64>, model: NetworkModel) -> AnalysisPoint {
    let outcome = solve(&model, &scenario.params, &scenario.analysis).map(|fp| {
        let report = qna_sweep(&model, &scenario.params, &fp);
        AnalysisOutcome { fp, report }
    });
    AnalysisPoint {
        lambda_pps,
        model,
        outcome,
    }
}

pub fn analyze_sweep(scenario: &Scenario, lambdas: &[f64]) -> Vec<AnalysisPoint> {
    sweep_models(&scenario.model, lambdas)
        .into_par_iter()
        .map(|(l, m)| analyze_point(scenario, l, m))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPoint {
    pub lambda_pps: Option<f64>,
    pub model: NetworkModel,
    pub stats: SimStats,
}

/// Parallel counterpart of [`wpan_core::replicate`] with identical output.
pub fn replicate_parallel(
    model: &NetworkModel,
    params: &wpan_core::ProtocolParams,
    cfg: &SimConfig,
) -> wpan_core::Result<SimStats> {
    let runs = (0..cfg.replications)
        .into_par_iter()
        .map(|k| run_replication(model, params, cfg, k))
        .collect::<wpan_core::Result<Vec<_>>>()?;
    Ok(SimStats::from_runs(runs))
}

pub fn simulate_sweep(scenario: &Scenario, lambdas: &[f64], cfg: &SimConfig) -> wpan_core::Result<Vec<SimPoint>> {
    sweep_models(&scenario.model, lambdas)
        .into_par_iter()
        .map(|(lambda_pps, model)| {
            let stats = replicate_parallel(&model, &scenario.params, cfg)?;
            Ok(SimPoint {
                lambda_pps,
                model,
                stats,
            })
        })
        .collect()
}
