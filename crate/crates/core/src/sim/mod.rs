//! Discrete-event simulator of unslotted CSMA/CA over a tree.
//!
//! The clock is an integer symbol count. Every node runs the standard
//! backoff automaton over a FIFO queue; the CCA reports busy when a sensed
//! transmission is on air at the instant the CCA starts, and the reception
//! at the parent fails whenever a member of the receiver's interference set
//! is on air at any point of the data (no capture) or an independent link
//! error fires.

mod engine;
pub mod stats;

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::NetworkModel;
use crate::params::ProtocolParams;
use crate::{Error, Result};
pub use stats::{Estimate, NodeStats, RunStats, SimStats, SourceStats};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub duration_s: f64,
    pub replications: usize,
    pub seed: u64,
    /// Initial period excluded from all statistics.
    pub warmup_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration_s: 1500.0,
            replications: 25,
            seed: 1,
            warmup_s: 50.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.warmup_s >= 0.0 && self.duration_s > self.warmup_s && self.duration_s.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need duration {} > warmup {} >= 0",
                self.duration_s, self.warmup_s
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("at least one replication is required".into()));
        }
        Ok(())
    }
}

/// SplitMix64 finaliser.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index`, derived from the base seed.
pub fn replication_seed(base: u64, index: usize) -> u64 {
    splitmix64(splitmix64(base) ^ index as u64)
}

/// One run with replication index `index`.
pub fn run_replication(model: &NetworkModel, params: &ProtocolParams, cfg: &SimConfig, index: usize) -> Result<RunStats> {
    cfg.validate()?;
    params.validate()?;
    let seed = replication_seed(cfg.seed, index);
    let rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(engine::Engine::new(model, params, rng, cfg.warmup_s, cfg.duration_s).run(seed))
}

/// A single run (replication 0) reported as a one-sample aggregate.
pub fn simulate(model: &NetworkModel, params: &ProtocolParams, cfg: &SimConfig) -> Result<SimStats> {
    Ok(SimStats::from_runs(alloc::vec![run_replication(model, params, cfg, 0)?]))
}

/// `cfg.replications` independent runs, aggregated in index order.
pub fn replicate(model: &NetworkModel, params: &ProtocolParams, cfg: &SimConfig) -> Result<SimStats> {
    let runs = (0..cfg.replications)
        .map(|k| run_replication(model, params, cfg, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimStats::from_runs(runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeSpec;
    use alloc::vec;

    fn star(n: usize, lambda: f64, per: f64, spacing: f64, cs: f64) -> NetworkModel {
        let mut nodes = vec![NodeSpec::relay(0, 0.0, 0.0, 0.0)];
        let mut parent = vec![None];
        for k in 1..=n {
            let angle = core::f64::consts::TAU * k as f64 / n as f64;
            nodes.push(NodeSpec::source(k as u32, spacing * crate::math::cos(angle), spacing * crate::math::sin(angle), lambda, per));
            parent.push(Some(0));
        }
        NetworkModel::from_geometry(nodes, 0, parent, cs).unwrap()
    }

    fn short(seed: u64) -> SimConfig {
        SimConfig {
            duration_s: 60.0,
            replications: 1,
            seed,
            warmup_s: 5.0,
        }
    }

    #[test]
    fn isolated_node_without_errors() {
        let m = star(1, 5.0, 0.0, 10.0, 15.0);
        let s = simulate(&m, &ProtocolParams::default(), &short(3)).unwrap();
        let n = &s.nodes[1];
        assert_eq!(n.alpha.unwrap().mean, 0.0);
        assert_eq!(n.gamma.unwrap().mean, 0.0);
        assert_eq!(s.sources[0].delivery.unwrap().mean, 1.0);
    }

    #[test]
    fn silent_base_station_has_no_metrics() {
        let m = star(2, 1.0, 0.0, 10.0, 25.0);
        let s = simulate(&m, &ProtocolParams::default(), &short(3)).unwrap();
        assert!(s.nodes[0].alpha.is_none());
        assert!(s.nodes[0].gamma.is_none());
    }

    #[test]
    fn runs_are_deterministic() {
        let m = star(4, 8.0, 0.05, 10.0, 25.0);
        let p = ProtocolParams::default();
        let a = simulate(&m, &p, &short(11)).unwrap();
        let b = simulate(&m, &p, &short(11)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&m, &p, &short(12)).unwrap();
        assert_ne!(a.runs[0].nodes, c.runs[0].nodes);
    }

    #[test]
    fn single_replication_equals_simulate() {
        let m = star(3, 4.0, 0.0, 10.0, 25.0);
        let p = ProtocolParams::default();
        let cfg = short(5);
        assert_eq!(simulate(&m, &p, &cfg).unwrap(), replicate(&m, &p, &cfg).unwrap());
    }

    #[test]
    fn packets_are_conserved() {
        let m = star(5, 20.0, 0.2, 10.0, 12.0);
        let s = simulate(&m, &ProtocolParams::default(), &short(9)).unwrap();
        for src in &s.runs[0].sources {
            assert!(src.all_generated > 0);
            assert_eq!(src.all_generated, src.all_delivered + src.all_discarded + src.all_in_flight);
        }
    }

    #[test]
    fn protocol_bounds_hold_under_heavy_load() {
        let m = star(8, 40.0, 0.3, 10.0, 25.0);
        let p = ProtocolParams::default();
        let s = simulate(&m, &p, &short(2)).unwrap();
        for c in &s.runs[0].nodes[1..] {
            assert!(c.max_ccas_per_transmission <= p.cca_attempts());
            assert!(c.max_transmissions_per_packet <= p.max_transmissions());
            assert!(c.cca_discards > 0);
        }
    }

    #[test]
    fn invalid_window_is_rejected() {
        let m = star(1, 1.0, 0.0, 10.0, 15.0);
        let cfg = SimConfig {
            warmup_s: 10.0,
            duration_s: 10.0,
            ..Default::default()
        };
        assert!(matches!(simulate(&m, &ProtocolParams::default(), &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn seeds_differ_per_replication() {
        let seeds: Vec<u64> = (0..100).map(|k| replication_seed(42, k)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }
}
