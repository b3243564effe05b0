//! Analysis-versus-simulation error report.
//!
//! Relative errors are `(simulation - analysis) / simulation`, so a negative
//! error means the analysis overestimates.

use std::fmt;

use serde::{Serialize, Serializer};
use wpan_core::params::symbols_to_seconds;
use wpan_core::NetworkModel;

use crate::report::CsvRow;
use crate::sweep::{AnalysisPoint, SimPoint};

/// Error band of a signed relative error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    /// Within ±10%.
    Within,
    /// Analysis over by 10% to 25%.
    Over,
    /// Analysis over by more than 25%.
    FarOver,
    /// Analysis under by 10% to 25%.
    Under,
    /// Analysis under by more than 25%.
    FarUnder,
}

impl Band {
    pub fn of(rel_error: f64) -> Self {
        let e = rel_error;
        if e.abs() <= 0.10 {
            Band::Within
        } else if e < 0.0 {
            if e >= -0.25 {
                Band::Over
            } else {
                Band::FarOver
            }
        } else if e <= 0.25 {
            Band::Under
        } else {
            Band::FarUnder
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Band::Within => "✓",
            Band::Over => "+",
            Band::FarOver => "++",
            Band::Under => "−",
            Band::FarUnder => "−−",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Serialize for Band {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Alpha,
    Gamma,
    Delta,
    Q,
    DelayMs,
    PDel,
    TotalQ,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Alpha => "alpha",
            Metric::Gamma => "gamma",
            Metric::Delta => "delta",
            Metric::Q => "q",
            Metric::DelayMs => "delay_ms",
            Metric::PDel => "p_del",
            Metric::TotalQ => "total_q",
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// One measured or computed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub lambda_pps: Option<f64>,
    /// Rate used to pick tolerances: the swept rate, or the largest source
    /// rate of the scenario.
    pub regime_pps: f64,
    pub metric: Metric,
    /// Node or source id; `None` for network-wide metrics.
    pub id: Option<u32>,
    pub value: f64,
    pub ci: Option<f64>,
}

fn regime(lambda: Option<f64>, model: &NetworkModel) -> f64 {
    lambda.unwrap_or_else(|| model.sources().map(|i| model.nodes[i].lambda_pps).fold(0.0, f64::max))
}

fn ms(symbols: f64) -> f64 {
    symbols_to_seconds(symbols) * 1e3
}

/// Values of the analysis in comparable form.
pub fn analysis_entries(points: &[AnalysisPoint]) -> Vec<Entry> {
    let mut out = Vec::new();
    for pt in points {
        let Ok(o) = &pt.outcome else { continue };
        let m = &pt.model;
        let r = regime(pt.lambda_pps, m);
        let mut push = |metric, id, value| {
            out.push(Entry {
                lambda_pps: pt.lambda_pps,
                regime_pps: r,
                metric,
                id,
                value,
                ci: None,
            })
        };
        for i in m.transmitters() {
            let u = &o.fp.nodes[i];
            let id = Some(m.nodes[i].label);
            push(Metric::Alpha, id, u.alpha);
            push(Metric::Gamma, id, u.gamma);
            push(Metric::Delta, id, u.delta);
            push(Metric::Q, id, u.q);
        }
        for s in &o.report.sources {
            let id = Some(m.nodes[s.node].label);
            push(Metric::DelayMs, id, ms(s.delay));
            push(Metric::PDel, id, s.delivery);
        }
        push(Metric::TotalQ, None, o.fp.total_load(m));
    }
    out
}

/// Replication means of the simulator in comparable form.
pub fn sim_entries(points: &[SimPoint]) -> Vec<Entry> {
    let mut out = Vec::new();
    for pt in points {
        let m = &pt.model;
        let r = regime(pt.lambda_pps, m);
        let mut push = |metric, id, est: Option<wpan_core::sim::Estimate>, scale: f64| {
            if let Some(e) = est {
                out.push(Entry {
                    lambda_pps: pt.lambda_pps,
                    regime_pps: r,
                    metric,
                    id,
                    value: e.mean * scale,
                    ci: e.half_width.map(|h| h * scale),
                })
            }
        };
        for i in m.transmitters() {
            let n = &pt.stats.nodes[i];
            let id = Some(m.nodes[i].label);
            push(Metric::Alpha, id, n.alpha, 1.0);
            push(Metric::Gamma, id, n.gamma, 1.0);
            push(Metric::Delta, id, n.delta, 1.0);
            push(Metric::Q, id, n.q, 1.0);
        }
        for s in &pt.stats.sources {
            let id = Some(m.nodes[s.node].label);
            push(Metric::DelayMs, id, s.delay, ms(1.0));
            push(Metric::PDel, id, s.delivery, 1.0);
        }
        push(Metric::TotalQ, None, pt.stats.total_load, 1.0);
    }
    out
}

pub fn relative_error(simulation: f64, analysis: f64) -> Option<f64> {
    if simulation != 0.0 {
        Some((simulation - analysis) / simulation)
    } else if analysis == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub lambda_pps: Option<f64>,
    pub metric: Metric,
    pub id: Option<u32>,
    pub analysis: f64,
    pub simulation: f64,
    pub simulation_ci: Option<f64>,
    pub rel_error: Option<f64>,
    pub band: Option<Band>,
    #[serde(skip)]
    pub regime_pps: f64,
}

impl CsvRow for CompareRow {
    const HEADER: &'static [&'static str] = &[
        "lambda_pps",
        "metric",
        "id",
        "analysis",
        "simulation",
        "simulation_ci",
        "rel_error",
        "band",
    ];
}

/// Errors of one metric averaged over the nodes at one rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummaryRow {
    pub lambda_pps: Option<f64>,
    pub metric: Metric,
    pub count: usize,
    pub mean_rel_error: Option<f64>,
    pub max_abs_rel_error: Option<f64>,
    pub band: Option<Band>,
}

impl CsvRow for CompareSummaryRow {
    const HEADER: &'static [&'static str] = &[
        "lambda_pps",
        "metric",
        "count",
        "mean_rel_error",
        "max_abs_rel_error",
        "band",
    ];
}

/// Tolerances enforced by [`CompareReport::violations`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Per-source delay and delivery, for rates up to `low_rate_pps`.
    pub source_rel: f64,
    pub low_rate_pps: f64,
    /// Total non-empty probability, for rates up to `load_rate_pps`.
    pub total_q_rel: f64,
    pub load_rate_pps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            source_rel: 0.15,
            low_rate_pps: 2.0,
            total_q_rel: 0.10,
            load_rate_pps: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub summary: Vec<CompareSummaryRow>,
}

fn same_point(a: &Entry, b: &Entry) -> bool {
    a.lambda_pps == b.lambda_pps && a.metric == b.metric && a.id == b.id
}

impl CompareReport {
    /// Pairs every analysis value with the matching simulation value;
    /// values present on one side only are dropped.
    pub fn build(analysis: &[Entry], simulation: &[Entry]) -> Self {
        let rows: Vec<CompareRow> = analysis
            .iter()
            .filter_map(|a| {
                let s = simulation.iter().find(|s| same_point(a, s))?;
                let rel_error = relative_error(s.value, a.value);
                Some(CompareRow {
                    lambda_pps: a.lambda_pps,
                    metric: a.metric,
                    id: a.id,
                    analysis: a.value,
                    simulation: s.value,
                    simulation_ci: s.ci,
                    rel_error,
                    band: rel_error.map(Band::of),
                    regime_pps: a.regime_pps,
                })
            })
            .collect();

        let mut groups: Vec<(Option<f64>, Metric)> = Vec::new();
        for r in &rows {
            if !groups.iter().any(|&(l, m)| l == r.lambda_pps && m == r.metric) {
                groups.push((r.lambda_pps, r.metric));
            }
        }
        let summary = groups
            .into_iter()
            .map(|(lambda_pps, metric)| {
                let members: Vec<&CompareRow> = rows
                    .iter()
                    .filter(|r| r.lambda_pps == lambda_pps && r.metric == metric)
                    .collect();
                let errors: Vec<f64> = members.iter().filter_map(|r| r.rel_error).collect();
                let mean_rel_error = (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
                let max_abs_rel_error = errors.iter().map(|e| e.abs()).reduce(f64::max);
                CompareSummaryRow {
                    lambda_pps,
                    metric,
                    count: members.len(),
                    mean_rel_error,
                    max_abs_rel_error,
                    band: mean_rel_error.map(Band::of),
                }
            })
            .collect();
        Self { rows, summary }
    }

    pub fn from_points(analysis: &[AnalysisPoint], simulation: &[SimPoint]) -> Self {
        Self::build(&analysis_entries(analysis), &sim_entries(simulation))
    }

    /// Human-readable description of every row outside its tolerance.
    pub fn violations(&self, tol: &Tolerances) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            let limit = match r.metric {
                Metric::DelayMs | Metric::PDel if r.regime_pps <= tol.low_rate_pps => tol.source_rel,
                Metric::TotalQ if r.regime_pps <= tol.load_rate_pps => tol.total_q_rel,
                _ => continue,
            };
            let ok = matches!(r.rel_error, Some(e) if e.abs() <= limit);
            if !ok {
                let who = r.id.map_or_else(|| "network".to_owned(), |id| format!("source {id}"));
                let err = r
                    .rel_error
                    .map_or_else(|| "undefined".to_owned(), |e| format!("{:+.1}%", e * 100.0));
                out.push(format!(
                    "{} {} at {} pps: analysis {:.6}, simulation {:.6}, error {err} exceeds {:.0}%",
                    who,
                    r.metric.name(),
                    r.regime_pps,
                    r.analysis,
                    r.simulation,
                    limit * 100.0
                ));
            }
        }
        out
    }
}
