//! Per-run measurements and their aggregation across replications.

use alloc::vec::Vec;

use crate::math;
use crate::model::NodeId;

/// Two-sided 97.5% quantiles of Student's t for 1..=30 degrees of freedom.
const T_975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131,
    2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
];

/// Quantile used for a 95% confidence interval with `df` degrees of freedom.
pub fn t_quantile_95(df: usize) -> f64 {
    match df {
        0 => f64::INFINITY,
        1..=30 => T_975[df - 1],
        _ => {
            // Cornish-Fisher expansion around the normal quantile
            let z = 1.959_964;
            let d = df as f64;
            z + (z * z * z + z) / (4.0 * d) + (5.0 * math::powi(z, 5) + 16.0 * math::powi(z, 3) + 3.0 * z) / (96.0 * d * d)
        }
    }
}

/// Mean across replications with a 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `None` with fewer than two replications.
    pub half_width: Option<f64>,
    pub samples: usize,
}

impl Estimate {
    /// Aggregates the available samples; `None` when no run measured the metric.
    pub fn from_samples(samples: impl Iterator<Item = Option<f64>>) -> Option<Self> {
        let values: Vec<f64> = samples.flatten().collect();
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let half_width = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            t_quantile_95(n - 1) * math::sqrt(var / n as f64)
        });
        Some(Self {
            mean,
            half_width,
            samples: n,
        })
    }

    /// True when `value` lies inside the confidence interval.
    pub fn covers(&self, value: f64) -> bool {
        match self.half_width {
            Some(h) => (value - self.mean).abs() <= h,
            None => value == self.mean,
        }
    }
}

/// Raw event counts of one node in one run (post-warmup unless noted).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeCounters {
    pub ccas: u64,
    pub busy_ccas: u64,
    pub transmissions: u64,
    pub failed_transmissions: u64,
    /// Head-of-line packets that left the node (forwarded or discarded).
    pub hol_packets: u64,
    pub discards: u64,
    pub cca_discards: u64,
    /// Symbols with a non-empty queue.
    pub nonempty_time: u64,
    /// Symbols spent on air.
    pub transmit_time: u64,
    /// Forwarded packets that arrived after warmup, with their total sojourn.
    pub forwarded: u64,
    pub sojourn_total: u64,
    /// Largest CCA count of one transmission and transmission count of one
    /// packet, over the whole run.
    pub max_ccas_per_transmission: u32,
    pub max_transmissions_per_packet: u32,
}

/// Raw counts of one source in one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceCounters {
    pub node: NodeId,
    /// Packets created after warmup, and their fates.
    pub generated: u64,
    pub delivered: u64,
    pub discarded: u64,
    pub delay_total: u64,
    /// Whole-run totals for conservation checks.
    pub all_generated: u64,
    pub all_delivered: u64,
    pub all_discarded: u64,
    pub all_in_flight: u64,
}

/// Ratios derived from one node's counters; `None` marks a metric without
/// any underlying event.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeRun {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub q: Option<f64>,
    pub b: Option<f64>,
    /// Successful CCA (transmission start) rate over non-transmitting time,
    /// per symbol.
    pub tau: Option<f64>,
    /// Mean sojourn time of forwarded packets, in symbols.
    pub sojourn: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl NodeCounters {
    pub fn derive(&self, window: u64) -> NodeRun {
        NodeRun {
            alpha: ratio(self.busy_ccas, self.ccas),
            gamma: ratio(self.failed_transmissions, self.transmissions),
            delta: ratio(self.discards, self.hol_packets),
            q: ratio(self.nonempty_time, window),
            b: (self.nonempty_time > 0).then(|| 1.0 - self.transmit_time as f64 / self.nonempty_time as f64),
            tau: ratio(self.transmissions, window.saturating_sub(self.transmit_time)),
            sojourn: ratio(self.sojourn_total, self.forwarded),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceRun {
    pub delay: Option<f64>,
    pub delivery: Option<f64>,
}

impl SourceCounters {
    pub fn derive(&self) -> SourceRun {
        SourceRun {
            delay: ratio(self.delay_total, self.delivered),
            delivery: ratio(self.delivered, self.delivered + self.discarded),
        }
    }
}

/// Everything one simulation run measured.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub seed: u64,
    /// Length of the measurement window in symbols.
    pub window: u64,
    pub nodes: Vec<NodeCounters>,
    pub sources: Vec<SourceCounters>,
}

impl RunStats {
    pub fn node_runs(&self) -> Vec<NodeRun> {
        self.nodes.iter().map(|c| c.derive(self.window)).collect()
    }

    pub fn source_runs(&self) -> Vec<SourceRun> {
        self.sources.iter().map(SourceCounters::derive).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeStats {
    pub alpha: Option<Estimate>,
    pub gamma: Option<Estimate>,
    pub delta: Option<Estimate>,
    pub q: Option<Estimate>,
    pub b: Option<Estimate>,
    pub tau: Option<Estimate>,
    pub sojourn: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceStats {
    pub node: NodeId,
    pub delay: Option<Estimate>,
    pub delivery: Option<Estimate>,
}

/// Replication-averaged measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub replications: usize,
    pub nodes: Vec<NodeStats>,
    pub sources: Vec<SourceStats>,
    /// Mean over replications of the summed non-empty fractions.
    pub total_load: Option<Estimate>,
    pub runs: Vec<RunStats>,
}

impl SimStats {
    /// Aggregates runs in the order given.
    pub fn from_runs(runs: Vec<RunStats>) -> Self {
        let node_runs: Vec<Vec<NodeRun>> = runs.iter().map(RunStats::node_runs).collect();
        let source_runs: Vec<Vec<SourceRun>> = runs.iter().map(RunStats::source_runs).collect();
        let n_nodes = runs.first().map_or(0, |r| r.nodes.len());
        let nodes = (0..n_nodes)
            .map(|i| {
                let col = |f: fn(&NodeRun) -> Option<f64>| Estimate::from_samples(node_runs.iter().map(|r| f(&r[i])));
                NodeStats {
                    alpha: col(|r| r.alpha),
                    gamma: col(|r| r.gamma),
                    delta: col(|r| r.delta),
                    q: col(|r| r.q),
                    b: col(|r| r.b),
                    tau: col(|r| r.tau),
                    sojourn: col(|r| r.sojourn),
                }
            })
            .collect();
        let sources = runs
            .first()
            .map(|r| {
                r.sources
                    .iter()
                    .enumerate()
                    .map(|(k, s)| SourceStats {
                        node: s.node,
                        delay: Estimate::from_samples(source_runs.iter().map(|r| r[k].delay)),
                        delivery: Estimate::from_samples(source_runs.iter().map(|r| r[k].delivery)),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let total_load = Estimate::from_samples(
            node_runs
                .iter()
                .map(|r| Some(r.iter().filter_map(|n| n.q).sum::<f64>())),
        );
        Self {
            replications: runs.len(),
            nodes,
            sources,
            total_load,
            runs,
        }
    }

    pub fn source(&self, node: NodeId) -> Option<&SourceStats> {
        self.sources.iter().find(|s| s.node == node)
    }
}
