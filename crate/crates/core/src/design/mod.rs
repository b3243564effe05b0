//! Minimum-power tree design under hop and QoS constraints.
//!
//! Minimising the largest transmit power is treated as minimising the
//! longest tree edge. [`sptiep`] solves the hop-constrained version exactly;
//! [`extended_sptiep`] then re-admits longer edges until the analytical
//! model certifies delay and delivery at the target load.

pub mod graph;
pub mod lattice;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::fixed_point::{solve, AnalysisConfig};
use crate::math;
use crate::model::{NetworkModel, NodeSpec};
use crate::params::{seconds_to_symbols, ProtocolParams};
use crate::qna::{qna_sweep, PerfReport};
use crate::{Error, Result};
pub use graph::{shortest_path_tree, CandidateGraph, Edge, Tree};
pub use lattice::{generate_scenario, BsPlacement, LatticeSpec};

/// Quality-of-service targets of a design problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qos {
    /// Link PER every tree edge is assumed to achieve at maximum power.
    pub link_per: f64,
    /// Minimum end-to-end delivery probability.
    pub p_del: f64,
    /// Maximum mean end-to-end delay, in seconds.
    pub d_max_s: f64,
    /// Arrival rate of every source, packets per second.
    pub lambda_pps: f64,
}

impl Qos {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(0.0..1.0).contains(&self.link_per) {
            problems.push(format!("link PER {} outside [0, 1)", self.link_per));
        }
        if !(self.p_del > 0.0 && self.p_del < 1.0) {
            problems.push(format!("delivery target {} outside (0, 1)", self.p_del));
        }
        if !(self.d_max_s > 0.0) {
            problems.push(format!("delay target {} must be positive", self.d_max_s));
        }
        if !(self.lambda_pps.is_finite() && self.lambda_pps >= 0.0) {
            problems.push(format!("arrival rate {} must be non-negative", self.lambda_pps));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    pub graph: CandidateGraph,
    pub qos: Qos,
}

/// Mean single-hop delay of a packet crossing an idle network, conditioned
/// on eventual success, in symbols.
pub fn lone_packet_delay(params: &ProtocolParams, link_per: f64) -> f64 {
    let attempt = params.idle_hop_time();
    let transmissions = params.max_transmissions();
    let mut acc = 0.0;
    let mut p_k = 1.0;
    for k in 0..transmissions {
        acc += p_k * (1.0 - link_per) * (k + 1) as f64;
        p_k *= link_per;
    }
    attempt * acc / (1.0 - p_k)
}

/// Largest hop count compatible with the delay and delivery targets when
/// every hop costs `single_hop` symbols. Returns 0 when no path can comply.
pub fn hop_bound(qos: &Qos, params: &ProtocolParams, single_hop: f64) -> usize {
    let by_delay = math::floor(seconds_to_symbols(qos.d_max_s) / single_hop);
    let loss = math::powi(qos.link_per, params.max_transmissions());
    let by_delivery = if loss > 0.0 {
        math::floor(math::ln(qos.p_del) / math::ln(1.0 - loss))
    } else {
        f64::INFINITY
    };
    let h = by_delay.min(by_delivery);
    if h >= usize::MAX as f64 {
        usize::MAX
    } else {
        h.max(0.0) as usize
    }
}

/// Outcome of [`sptiep`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxTree {
    pub tree: Tree,
    /// Longest edge of every hop-feasible tree found, in iteration order.
    pub max_edges: Vec<f64>,
}

/// Minimum-longest-edge spanning tree with every node within `h_max` hops.
///
/// Repeatedly builds the hop-count shortest-path tree and removes all edges
/// at least as long as its longest edge, until the tree violates the bound.
/// Returns `None` when even the unpruned graph violates it.
pub fn sptiep(graph: &CandidateGraph, h_max: usize) -> Option<MinimaxTree> {
    let mut best: Option<Tree> = None;
    let mut max_edges = Vec::new();
    let mut limit = f64::INFINITY;
    loop {
        let candidate = shortest_path_tree(graph, |e| e.length < limit);
        match candidate {
            Some(t) if t.max_hops() <= h_max => {
                limit = t.max_edge();
                max_edges.push(limit);
                best = Some(t);
                if graph.len() <= 1 {
                    break;
                }
            }
            _ => break,
        }
    }
    best.map(|tree| MinimaxTree { tree, max_edges })
}

/// Verdict of the analytical model on a candidate tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Met,
    Violated { worst_delay_s: f64, worst_delivery: f64 },
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub verdict: Verdict,
    pub report: Option<PerfReport>,
}

/// Judges whether a tree meets the QoS targets at positive load.
pub trait QosEvaluator {
    fn evaluate(&mut self, model: &NetworkModel, qos: &Qos) -> Evaluation;
}

/// Fixed-point analysis followed by the queueing sweep.
#[derive(Debug, Clone)]
pub struct AnalyticEvaluator {
    pub params: ProtocolParams,
    pub config: AnalysisConfig,
}

impl QosEvaluator for AnalyticEvaluator {
    fn evaluate(&mut self, model: &NetworkModel, qos: &Qos) -> Evaluation {
        let fp = match solve(model, &self.params, &self.config) {
            Ok(fp) if fp.converged => fp,
            _ => {
                return Evaluation {
                    verdict: Verdict::NotConverged,
                    report: None,
                }
            }
        };
        let report = qna_sweep(model, &self.params, &fp);
        let worst_delay_s = crate::params::symbols_to_seconds(report.worst_delay());
        let worst_delivery = report.worst_delivery();
        let verdict = if worst_delay_s <= qos.d_max_s && worst_delivery >= qos.p_del {
            Verdict::Met
        } else {
            Verdict::Violated {
                worst_delay_s,
                worst_delivery,
            }
        };
        Evaluation {
            verdict,
            report: Some(report),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignStatus {
    /// The lone-packet optimum already meets QoS at the target load.
    OptimalLonePacket,
    /// A longer-edged tree met QoS at the target load.
    FeasiblePositiveLoad,
    /// No tree meets the hop bound.
    Infeasible,
    /// Every edge length was tried without meeting QoS.
    PossiblyInfeasible,
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Length admitted before building this tree (`None` for the first).
    pub admitted_length: Option<f64>,
    pub max_edge: f64,
    pub max_hops: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub status: DesignStatus,
    pub h_max: usize,
    pub tree: Option<Tree>,
    pub max_edge: Option<f64>,
    pub evaluation: Option<Evaluation>,
    pub trace: Vec<TraceEntry>,
}

impl DesignResult {
    pub fn is_feasible(&self) -> bool {
        matches!(
            self.status,
            DesignStatus::OptimalLonePacket | DesignStatus::FeasiblePositiveLoad
        )
    }
}

/// Network model of a design: every non-BS node is a source at the QoS rate
/// and all nodes sense each other.
pub fn design_model(graph: &CandidateGraph, parent: &[Option<usize>], qos: &Qos) -> Result<NetworkModel> {
    let n = graph.len();
    let nodes: Vec<NodeSpec> = graph
        .positions
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            if i == graph.bs {
                NodeSpec::relay(i as u32, x, y, 0.0)
            } else {
                NodeSpec::source(i as u32, x, y, qos.lambda_pps, qos.link_per)
            }
        })
        .collect();
    let omega = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
    NetworkModel::from_cs_sets(nodes, graph.bs, parent.to_vec(), omega)
}

/// Options of [`extended_sptiep`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesignOptions {
    /// Replaces [`lone_packet_delay`] in the hop bound.
    pub single_hop_delay: Option<f64>,
}

/// Hop-feasible tree with the shortest longest edge that the evaluator
/// certifies at positive load.
pub fn extended_sptiep(
    problem: &DesignProblem,
    params: &ProtocolParams,
    options: &DesignOptions,
    evaluator: &mut impl QosEvaluator,
) -> Result<DesignResult> {
    problem.qos.validate()?;
    let graph = &problem.graph;
    let single_hop = options
        .single_hop_delay
        .unwrap_or_else(|| lone_packet_delay(params, problem.qos.link_per));
    let h_max = hop_bound(&problem.qos, params, single_hop);
    let infeasible = DesignResult {
        status: DesignStatus::Infeasible,
        h_max,
        tree: None,
        max_edge: None,
        evaluation: None,
        trace: Vec::new(),
    };
    if h_max == 0 {
        return Ok(infeasible);
    }
    let Some(start) = sptiep(graph, h_max) else {
        return Ok(infeasible);
    };

    let lengths = graph.distinct_lengths();
    let mut examined = vec![false; lengths.len()];
    let mut tree = start.tree;
    let mut admitted = None;
    let mut trace = Vec::new();
    loop {
        let model = design_model(graph, &tree.parent, &problem.qos)?;
        let evaluation = evaluator.evaluate(&model, &problem.qos);
        trace.push(TraceEntry {
            iteration: trace.len(),
            admitted_length: admitted,
            max_edge: tree.max_edge(),
            max_hops: tree.max_hops(),
            verdict: evaluation.verdict.clone(),
        });
        if evaluation.verdict == Verdict::Met {
            let status = if trace.len() == 1 {
                DesignStatus::OptimalLonePacket
            } else {
                DesignStatus::FeasiblePositiveLoad
            };
            return Ok(DesignResult {
                status,
                h_max,
                max_edge: Some(tree.max_edge()),
                tree: Some(tree),
                evaluation: Some(evaluation),
                trace,
            });
        }

        let current = tree.max_edge();
        let Some(k) = (0..lengths.len()).find(|&k| !examined[k] && lengths[k] > current) else {
            return Ok(DesignResult {
                status: DesignStatus::PossiblyInfeasible,
                h_max,
                max_edge: Some(current),
                tree: Some(tree),
                evaluation: Some(evaluation),
                trace,
            });
        };
        examined[k] = true;
        let w_least = lengths[k];
        admitted = Some(w_least);
        let in_tree = |e: &Edge| tree.parent[e.a] == Some(e.b) || tree.parent[e.b] == Some(e.a);
        tree = shortest_path_tree(graph, |e| e.length <= w_least || in_tree(e))
            .expect("augmented graph contains the previous tree");
    }
}
