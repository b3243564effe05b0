//! CSV output. Every file starts with a header row, even when it has no data.
//!
//! Times are in milliseconds, rates per second, node columns carry scenario
//! ids, and missing values are empty fields.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use wpan_core::design::{DesignResult, TraceEntry, Verdict};
use wpan_core::fixed_point::Stability;
use wpan_core::params::{per_symbol_to_per_second, symbols_to_seconds};
use wpan_core::sim::Estimate;
use wpan_core::NetworkModel;

use crate::sweep::{AnalysisPoint, SimPoint};
use crate::{Result, ToolError};

/// A serializable row with a fixed header.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

fn ms(symbols: f64) -> f64 {
    symbols_to_seconds(symbols) * 1e3
}

/// Writes `rows` as CSV to any writer.
pub fn write_csv<T: CsvRow>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(T::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_csv_file<T: CsvRow>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| ToolError::io(path, e))?;
    write_csv(file, rows)
}

pub fn to_csv_string<T: CsvRow>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

fn label(model: &NetworkModel, i: usize) -> u32 {
    model.nodes[i].label
}

fn parent_label(model: &NetworkModel, i: usize) -> Option<u32> {
    model.parent[i].map(|p| label(model, p))
}

pub fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Marginal => "marginal",
        Stability::Unstable => "unstable",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisNodeRow {
    pub lambda_pps: Option<f64>,
    pub node: u32,
    pub parent: Option<u32>,
    pub alpha: f64,
    pub gamma: f64,
    pub p: f64,
    pub delta: f64,
    pub q: f64,
    pub b: f64,
    pub beta_per_s: f64,
    pub sigma_per_s: f64,
    pub theta_pps: f64,
    pub teff_ms: f64,
    #[serde(rename = "E_S_ms")]
    pub e_s_ms: Option<f64>,
    #[serde(rename = "c_S2")]
    pub c_s2: Option<f64>,
    pub rho: f64,
    pub sojourn_ms: f64,
}

impl CsvRow for AnalysisNodeRow {
    const HEADER: &'static [&'static str] = &[
        "lambda_pps",
        "node",
        "parent",
        "alpha",
        "gamma",
        "p",
        "delta",
        "q",
        "b",
        "beta_per_s",
        "sigma_per_s",
        "theta_pps",
        "teff_ms",
        "E_S_ms",
        "c_S2",
        "rho",
        "sojourn_ms",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSourceRow {
    pub lambda_pps: Option<f64>,
    pub source: u32,
    pub hops: usize,
    pub delay_ms: f64,
    pub p_del: f64,
}

impl CsvRow for AnalysisSourceRow {
    const HEADER: &'static [&'static str] = &["lambda_pps", "source", "hops", "delay_ms", "p_del"];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummaryRow {
    pub lambda_pps: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub residual: Option<f64>,
    pub total_q: Option<f64>,
    pub stability: Option<&'static str>,
    pub error: Option<String>,
}

impl CsvRow for AnalysisSummaryRow {
    const HEADER: &'static [&'static str] = &[
        "lambda_pps",
        "iterations",
        "converged",
        "residual",
        "total_q",
        "stability",
        "error",
    ];
}

/// Rows of the three analysis files for one sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisTables {
    pub nodes: Vec<AnalysisNodeRow>,
    pub sources: Vec<AnalysisSourceRow>,
    pub summary: Vec<AnalysisSummaryRow>,
}

pub fn analysis_tables(points: &[AnalysisPoint]) -> AnalysisTables {
    let mut t = AnalysisTables::default();
    for pt in points {
        let model = &pt.model;
        let out = match &pt.outcome {
            Ok(out) => out,
            Err(e) => {
                t.summary.push(AnalysisSummaryRow {
                    lambda_pps: pt.lambda_pps,
                    iterations: None,
                    converged: false,
                    residual: None,
                    total_q: None,
                    stability: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        let fp = &out.fp;
        for i in model.transmitters() {
            let u = &fp.nodes[i];
            let d = &out.report.nodes[i];
            t.nodes.push(AnalysisNodeRow {
                lambda_pps: pt.lambda_pps,
                node: label(model, i),
                parent: parent_label(model, i),
                alpha: u.alpha,
                gamma: u.gamma,
                p: u.p,
                delta: u.delta,
                q: u.q,
                b: u.b,
                beta_per_s: per_symbol_to_per_second(u.beta),
                sigma_per_s: per_symbol_to_per_second(u.sigma),
                theta_pps: per_symbol_to_per_second(u.theta),
                teff_ms: ms(u.teff),
                e_s_ms: d.service.map(|s| ms(s.mean)),
                c_s2: d.service.map(|s| s.scv),
                rho: d.utilisation,
                sojourn_ms: ms(d.sojourn),
            });
        }
        for s in &out.report.sources {
            t.sources.push(AnalysisSourceRow {
                lambda_pps: pt.lambda_pps,
                source: label(model, s.node),
                hops: s.hops,
                delay_ms: ms(s.delay),
                p_del: s.delivery,
            });
        }
        t.summary.push(AnalysisSummaryRow {
            lambda_pps: pt.lambda_pps,
            iterations: Some(fp.iterations),
            converged: fp.converged,
            residual: Some(fp.residual),
            total_q: Some(fp.total_load(model)),
            stability: Some(stability_name(fp.stability(model))),
            error: None,
        });
    }
    t
}

fn mean(e: Option<Estimate>) -> Option<f64> {
    e.map(|e| e.mean)
}

fn ci(e: Option<Estimate>) -> Option<f64> {
    e.and_then(|e| e.half_width)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimNodeRow {
    pub lambda_pps: Option<f64>,
    pub node: u32,
    pub parent: Option<u32>,
    pub alpha: Option<f64>,
    pub alpha_ci: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_ci: Option<f64>,
    pub delta: Option<f64>,
    pub delta_ci: Option<f64>,
    pub q: Option<f64>,
    pub q_ci: Option<f64>,
    pub b: Option<f64>,
    pub b_ci: Option<f64>,
    pub sojourn_ms: Option<f64>,
    pub sojourn_ms_ci: Option<f64>,
}

impl CsvRow for SimNodeRow {
    const HEADER: &'static [&'static str] = &[
        "lambda_pps",
        "node",
        "parent",
        "alpha",
        "alpha_ci",
        "gamma",
        "gamma_ci",
        "delta",
        "delta_ci",
        "q",
        "q_ci",
        "b",
        "b_ci",
        "sojourn_ms",
        "sojourn_ms_ci",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSourceRow {
    pub lambda_pps: Option<f64>,
    pub source: u32,
    pub hops: usize,
    pub delay_ms: Option<f64>,
    pub delay_ms_ci: Option<f64>,
    pub p_del: Option<f64>,
    pub p_del_ci: Option<f64>,
}

impl CsvRow for SimSourceRow {
    const HEADER: &'static [&'static str] = &[
        "lambda_pps",
        "source",
        "hops",
        "delay_ms",
        "delay_ms_ci",
        "p_del",
        "p_del_ci",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummaryRow {
    pub lambda_pps: Option<f64>,
    pub replications: usize,
    pub total_q: Option<f64>,
    pub total_q_ci: Option<f64>,
}

impl CsvRow for SimSummaryRow {
    const HEADER: &'static [&'static str] = &["lambda_pps", "replications", "total_q", "total_q_ci"];
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTables {
    pub nodes: Vec<SimNodeRow>,
    pub sources: Vec<SimSourceRow>,
    pub summary: Vec<SimSummaryRow>,
}

pub fn sim_tables(points: &[SimPoint]) -> SimTables {
    let mut t = SimTables::default();
    for pt in points {
        let model = &pt.model;
        let st = &pt.stats;
        let to_ms = |e: Option<Estimate>| {
            e.map(|e| Estimate {
                mean: ms(e.mean),
                half_width: e.half_width.map(ms),
                samples: e.samples,
            })
        };
        for i in model.transmitters() {
            let n = &st.nodes[i];
            let sojourn = to_ms(n.sojourn);
            t.nodes.push(SimNodeRow {
                lambda_pps: pt.lambda_pps,
                node: label(model, i),
                parent: parent_label(model, i),
                alpha: mean(n.alpha),
                alpha_ci: ci(n.alpha),
                gamma: mean(n.gamma),
                gamma_ci: ci(n.gamma),
                delta: mean(n.delta),
                delta_ci: ci(n.delta),
                q: mean(n.q),
                q_ci: ci(n.q),
                b: mean(n.b),
                b_ci: ci(n.b),
                sojourn_ms: mean(sojourn),
                sojourn_ms_ci: ci(sojourn),
            });
        }
        for s in &st.sources {
            let delay = to_ms(s.delay);
            t.sources.push(SimSourceRow {
                lambda_pps: pt.lambda_pps,
                source: label(model, s.node),
                hops: model.hop_count(s.node),
                delay_ms: mean(delay),
                delay_ms_ci: ci(delay),
                p_del: mean(s.delivery),
                p_del_ci: ci(s.delivery),
            });
        }
        t.summary.push(SimSummaryRow {
            lambda_pps: pt.lambda_pps,
            replications: st.replications,
            total_q: mean(st.total_load),
            total_q_ci: ci(st.total_load),
        });
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignTraceRow {
    pub iteration: usize,
    pub admitted_length_m: Option<f64>,
    pub max_edge_m: f64,
    pub max_hops: usize,
    pub verdict: &'static str,
    pub worst_delay_ms: Option<f64>,
    pub worst_delivery: Option<f64>,
}

impl CsvRow for DesignTraceRow {
    const HEADER: &'static [&'static str] = &[
        "iteration",
        "admitted_length_m",
        "max_edge_m",
        "max_hops",
        "verdict",
        "worst_delay_ms",
        "worst_delivery",
    ];
}

fn trace_row(e: &TraceEntry) -> DesignTraceRow {
    let (verdict, worst_delay_ms, worst_delivery) = match e.verdict {
        Verdict::Met => ("met", None, None),
        Verdict::Violated {
            worst_delay_s,
            worst_delivery,
        } => ("violated", Some(worst_delay_s * 1e3), Some(worst_delivery)),
        Verdict::NotConverged => ("not_converged", None, None),
    };
    DesignTraceRow {
        iteration: e.iteration,
        admitted_length_m: e.admitted_length,
        max_edge_m: e.max_edge,
        max_hops: e.max_hops,
        verdict,
        worst_delay_ms,
        worst_delivery,
    }
}

pub fn design_trace(result: &DesignResult) -> Vec<DesignTraceRow> {
    result.trace.iter().map(trace_row).collect()
}
