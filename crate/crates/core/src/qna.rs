//! Per-node sojourn times and end-to-end delay with the queueing network
//! analyzer (two-moment GI/G/1 approximation with departure variability
//! propagated towards the base station).

use alloc::vec;
use alloc::vec::Vec;

use crate::fixed_point::FixedPointResult;
use crate::math;
use crate::model::{NetworkModel, NodeId};
use crate::params::{per_second_to_per_symbol, ProtocolParams};
use crate::{Error, Result};

/// First two moments of the head-of-line service time.
///
/// Each transmission attempt costs an exponential backoff at rate
/// `beta (1 - alpha)` plus the activity period; attempts repeat while the
/// transmission fails (probability `gamma`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceMoments {
    pub mean: f64,
    pub second: f64,
    /// Squared coefficient of variation.
    pub scv: f64,
}

pub fn service_moments(beta: f64, alpha: f64, gamma: f64, t_tx: f64) -> Result<ServiceMoments> {
    if gamma >= 1.0 {
        return Err(Error::ServiceTimeDiverges);
    }
    let a = beta * (1.0 - alpha);
    if !(a > 0.0) {
        return Err(Error::ServiceTimeDiverges);
    }
    let attempt = 1.0 / a + t_tx;
    let mean = attempt / (1.0 - gamma);
    let var = (1.0 / (a * a)) / (1.0 - gamma) + gamma * attempt * attempt / ((1.0 - gamma) * (1.0 - gamma));
    let second = var + mean * mean;
    Ok(ServiceMoments {
        mean,
        second,
        scv: second / (mean * mean) - 1.0,
    })
}

/// Laplace transform `E[exp(-z S)]` of the service time above.
pub fn service_transform(z: f64, beta: f64, alpha: f64, gamma: f64, t_tx: f64) -> f64 {
    let a = beta * (1.0 - alpha);
    let shift = math::exp(-z * t_tx);
    a * (1.0 - gamma) * shift / (z + a * (1.0 - gamma * shift))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeDelay {
    /// Total arrival rate `Lambda`, per symbol time.
    pub arrival_rate: f64,
    pub service: Option<ServiceMoments>,
    pub utilisation: f64,
    /// Squared coefficient of variation of inter-arrival times.
    pub arrival_scv: f64,
    pub departure_scv: f64,
    /// Mean sojourn time in symbols; infinite when the queue is unstable.
    pub sojourn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePerf {
    pub node: NodeId,
    pub hops: usize,
    /// Mean end-to-end delay of delivered packets, in symbols.
    pub delay: f64,
    pub delivery: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfReport {
    pub nodes: Vec<NodeDelay>,
    pub sources: Vec<SourcePerf>,
}

impl PerfReport {
    pub fn source(&self, node: NodeId) -> Option<&SourcePerf> {
        self.sources.iter().find(|s| s.node == node)
    }

    /// Largest end-to-end delay over all sources, in symbols.
    pub fn worst_delay(&self) -> f64 {
        self.sources.iter().map(|s| s.delay).fold(0.0, f64::max)
    }

    /// Smallest delivery probability over all sources.
    pub fn worst_delivery(&self) -> f64 {
        self.sources.iter().map(|s| s.delivery).fold(1.0, f64::min)
    }
}

/// Mean waiting-plus-service time of a GI/G/1 queue (Kingman/Whitt).
pub fn gig1_sojourn(rho: f64, mean_service: f64, arrival_scv: f64, service_scv: f64) -> f64 {
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    rho * mean_service * (arrival_scv + service_scv) / (2.0 * (1.0 - rho)) + mean_service
}

/// Departure variability of a node that discards a fraction `delta`.
pub fn departure_scv(delta: f64, rho: f64, arrival_scv: f64, service_scv: f64) -> f64 {
    let rho2 = rho * rho;
    (1.0 - delta) * (1.0 + rho2 * (service_scv - 1.0) + (1.0 - rho2) * (arrival_scv - 1.0))
}

/// Sweeps the tree from the leaves to the base station and assembles the
/// per-source delay and delivery probability.
pub fn qna_sweep(model: &NetworkModel, params: &ProtocolParams, fp: &FixedPointResult) -> PerfReport {
    let t_tx = params.t_tx() as f64;
    let mut nodes = vec![NodeDelay::default(); model.len()];
    for &i in model.leaf_to_root() {
        if i == model.bs {
            continue;
        }
        let u = &fp.nodes[i];
        let lambda = per_second_to_per_symbol(model.nodes[i].lambda_pps);
        let children = model.children(i);
        let arrival_rate = lambda + children.iter().map(|&k| fp.nodes[k].theta).sum::<f64>();
        let arrival_scv = if children.is_empty() || arrival_rate <= 0.0 {
            1.0
        } else {
            (lambda
                + children
                    .iter()
                    .map(|&k| nodes[k].arrival_rate * nodes[k].departure_scv)
                    .sum::<f64>())
                / arrival_rate
        };
        let mut entry = NodeDelay {
            arrival_rate,
            arrival_scv,
            ..Default::default()
        };
        match service_moments(u.beta, u.alpha, u.gamma, t_tx) {
            Ok(s) => {
                let rho = arrival_rate * s.mean;
                entry.service = Some(s);
                entry.utilisation = rho;
                entry.sojourn = gig1_sojourn(rho, s.mean, arrival_scv, s.scv);
                entry.departure_scv = if rho < 1.0 {
                    departure_scv(u.delta, rho, arrival_scv, s.scv)
                } else {
                    1.0 - u.delta
                };
            }
            Err(_) => {
                entry.utilisation = f64::INFINITY;
                entry.sojourn = f64::INFINITY;
            }
        }
        nodes[i] = entry;
    }

    let sources = model
        .sources()
        .map(|i| {
            let path = model.path_to_bs(i);
            SourcePerf {
                node: i,
                hops: path.len(),
                delay: path.iter().map(|&k| nodes[k].sojourn).sum(),
                delivery: path.iter().map(|&k| 1.0 - fp.nodes[k].delta).product(),
            }
        })
        .collect();
    PerfReport { nodes, sources }
}
