//! Network-wide fixed point of the per-node CSMA/CA model.
//!
//! The unknowns of every transmitting node are iterated jointly (Jacobi
//! sweeps with damping) until the largest relative change falls below the
//! tolerance. The base station has no unknowns.

pub mod equations;
pub mod teff;

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{NetworkModel, NodeId};
use crate::params::{per_second_to_per_symbol, ProtocolParams};
use crate::{Error, Result};
use equations::{Contention, Service};

/// How the dilated activity period is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TeffModel {
    /// Busy period of an M/D/inf queue fed by the CS set's perceived rates.
    #[default]
    MdInfinity,
    /// Product-form distribution over the independent sets of the CS graph.
    Boorstyn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Weight of the new iterate, in (0, 1].
    pub damping: f64,
    pub teff_model: TeffModel,
    /// Starting value of every perceived rate, per second.
    pub initial_rate_pps: f64,
    /// Clamp `q` to 1 instead of reporting an invalid probability.
    pub clamp_q: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 10_000,
            damping: 0.5,
            teff_model: TeffModel::MdInfinity,
            initial_rate_pps: 10.0,
            clamp_q: true,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(alloc::format!("damping {} outside (0, 1]", self.damping)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.initial_rate_pps.is_finite() && self.initial_rate_pps >= 0.0) {
            return Err(Error::InvalidConfig("initial rate must be non-negative".into()));
        }
        Ok(())
    }
}

/// Converged per-node quantities. Rates are per symbol time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeUnknowns {
    /// CCA failure probability.
    pub alpha: f64,
    /// Collision probability.
    pub p: f64,
    /// Packet failure probability (collision or link error).
    pub gamma: f64,
    /// Discard probability.
    pub delta: f64,
    /// Probability that the queue is non-empty.
    pub q: f64,
    /// Fraction of non-empty time spent in backoff.
    pub b: f64,
    /// CCA attempt rate during backoff.
    pub beta: f64,
    /// Service rate.
    pub sigma: f64,
    /// Aggregate arrival rate (own plus children's goodput).
    pub nu: f64,
    /// Goodput towards the parent.
    pub theta: f64,
    pub teff: f64,
    pub mean_backoff: f64,
    /// Unconditional successful attempt rate.
    pub tau: f64,
    /// Fraction of time not transmitting.
    pub idle: f64,
    pub eta: f64,
    pub c: f64,
    /// Perceived rates of the CS set members, aligned with `model.omega(i)`.
    pub perceived: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub nodes: Vec<NodeUnknowns>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest relative change in the final sweep.
    pub residual: f64,
    pub teff_model: TeffModel,
}

impl FixedPointResult {
    /// Sum of `q` over the transmitting nodes.
    pub fn total_load(&self, model: &NetworkModel) -> f64 {
        model.transmitters().map(|i| self.nodes[i].q).sum()
    }

    pub fn stability(&self, model: &NetworkModel) -> Stability {
        stability_check(self.total_load(model))
    }
}

/// Classifies the network by the sum of non-empty probabilities.
pub fn stability_check(total_q: f64) -> Stability {
    if total_q < 0.9 {
        Stability::Stable
    } else if total_q < 1.0 {
        Stability::Marginal
    } else {
        Stability::Unstable
    }
}

/// Static index tables derived once from the model.
struct Layout {
    /// `hidden[i][k]`: positions in `omega(j)` (`j` the `k`-th member of
    /// `Omega_i`) of the nodes `i` cannot hear, excluding `i` itself.
    hidden: Vec<Vec<Vec<usize>>>,
    /// Positions in `omega(i)` of the members of `C1`.
    c1_in_omega: Vec<Vec<usize>>,
    /// Members of `C1` outside `Omega_i` (the receiver when `i` cannot hear it).
    c1_outside: Vec<Vec<NodeId>>,
    /// Positions in `omega(i)` that are not in `C1`.
    rest_in_omega: Vec<Vec<usize>>,
    /// Conflict masks among the members of `Omega_i`.
    member_conflicts: Vec<Vec<u32>>,
    hidden_free: bool,
}

impl Layout {
    fn new(model: &NetworkModel, need_masks: bool) -> Self {
        let n = model.len();
        let mut hidden = vec![Vec::new(); n];
        let mut c1_in_omega = vec![Vec::new(); n];
        let mut c1_outside = vec![Vec::new(); n];
        let mut rest_in_omega = vec![Vec::new(); n];
        let mut member_conflicts = vec![Vec::new(); n];
        for i in model.transmitters() {
            let omega = model.omega(i);
            hidden[i] = omega
                .iter()
                .map(|&j| {
                    model
                        .omega(j)
                        .iter()
                        .enumerate()
                        .filter(|&(_, &k)| k != i && !model.senses(i, k))
                        .map(|(pos, _)| pos)
                        .collect()
                })
                .collect();
            let c1 = &model.hood.c1[i];
            for &k in c1 {
                match omega.binary_search(&k) {
                    Ok(pos) => c1_in_omega[i].push(pos),
                    Err(_) => c1_outside[i].push(k),
                }
            }
            rest_in_omega[i] = (0..omega.len()).filter(|pos| !c1_in_omega[i].contains(pos)).collect();
            if need_masks && omega.len() <= teff::BOORSTYN_LIMIT {
                member_conflicts[i] = omega
                    .iter()
                    .map(|&a| {
                        omega
                            .iter()
                            .enumerate()
                            .filter(|&(_, &b)| model.senses(a, b))
                            .fold(0u32, |m, (pos, _)| m | (1 << pos))
                    })
                    .collect();
            }
        }
        Self {
            hidden,
            c1_in_omega,
            c1_outside,
            rest_in_omega,
            member_conflicts,
            hidden_free: model.is_hidden_free(),
        }
    }
}

/// The iterated unknowns.
#[derive(Debug, Clone)]
struct State {
    alpha: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    nu: Vec<f64>,
    theta: Vec<f64>,
    teff: Vec<f64>,
    tau: Vec<f64>,
    perceived: Vec<Vec<f64>>,
}

impl State {
    fn initial(model: &NetworkModel, t_tx: f64, rate: f64) -> Self {
        let n = model.len();
        let mut tau = vec![0.0; n];
        let mut perceived = vec![Vec::new(); n];
        for i in model.transmitters() {
            tau[i] = rate;
            perceived[i] = model
                .omega(i)
                .iter()
                .map(|&j| if j == model.bs { 0.0 } else { rate })
                .collect();
        }
        Self {
            alpha: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
            nu: vec![0.0; n],
            theta: vec![0.0; n],
            teff: vec![t_tx; n],
            tau,
            perceived,
        }
    }

    /// Moves towards `next` by `d` and returns the largest relative change.
    fn relax(&mut self, next: &State, d: f64) -> f64 {
        let mut worst: f64 = 0.0;
        let mut mix = |old: &mut f64, new: f64| {
            let updated = (1.0 - d) * *old + d * new;
            let change = (updated - *old).abs() / old.abs().max(1e-12);
            worst = worst.max(change);
            *old = updated;
        };
        for (dst, src) in [
            (&mut self.alpha, &next.alpha),
            (&mut self.p, &next.p),
            (&mut self.q, &next.q),
            (&mut self.nu, &next.nu),
            (&mut self.theta, &next.theta),
            (&mut self.teff, &next.teff),
            (&mut self.tau, &next.tau),
        ] {
            for (o, &n) in dst.iter_mut().zip(src) {
                mix(o, n);
            }
        }
        for (row, new_row) in self.perceived.iter_mut().zip(&next.perceived) {
            for (o, &n) in row.iter_mut().zip(new_row) {
                mix(o, n);
            }
        }
        worst
    }
}

struct Solver<'a> {
    model: &'a NetworkModel,
    params: &'a ProtocolParams,
    cfg: &'a AnalysisConfig,
    layout: Layout,
    t_tx: f64,
    turnaround: f64,
}

fn check(node: NodeId, equation: &'static str, value: f64, probability: bool) -> Result<f64> {
    let ok = value.is_finite() && value >= 0.0 && (!probability || value <= 1.0 + 1e-12);
    if ok {
        Ok(if probability { value.min(1.0) } else { value })
    } else {
        Err(Error::Numerical { node, equation, value })
    }
}

impl<'a> Solver<'a> {
    fn services(&self, s: &State) -> Result<Vec<Option<Service>>> {
        let mut out = vec![None; self.model.len()];
        for i in self.model.transmitters() {
            let gamma = equations::packet_failure(s.p[i], self.model.nodes[i].link_per);
            out[i] = Some(equations::service_and_discard(i, self.params, s.alpha[i], gamma)?);
        }
        Ok(out)
    }

    fn teff(&self, i: NodeId, perceived: &[f64]) -> Result<f64> {
        if self.layout.hidden_free {
            return Ok(self.t_tx);
        }
        let zeta: f64 = perceived.iter().sum();
        match self.cfg.teff_model {
            TeffModel::MdInfinity => Ok(teff::md_infinity(zeta, self.t_tx)),
            TeffModel::Boorstyn => teff::boorstyn(i, perceived, &self.layout.member_conflicts[i], self.t_tx),
        }
    }

    fn sweep(&self, prev: &State) -> Result<State> {
        let model = self.model;
        let n = model.len();
        let svc = self.services(prev)?;
        let mut next = State {
            alpha: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
            nu: vec![0.0; n],
            theta: vec![0.0; n],
            teff: vec![self.t_tx; n],
            tau: vec![0.0; n],
            perceived: vec![Vec::new(); n],
        };
        let mut idle = vec![1.0; n];

        for i in model.transmitters() {
            let s = svc[i].expect("transmitter service");
            let lambda = per_second_to_per_symbol(model.nodes[i].lambda_pps);
            let children: f64 = model.children(i).iter().map(|&k| prev.theta[k]).sum();
            let flow = equations::arrivals_and_queue(lambda, children, s.delta, s.sigma, self.cfg.clamp_q);
            next.nu[i] = check(i, "aggregate arrival rate", flow.nu, false)?;
            next.theta[i] = check(i, "goodput", flow.theta, false)?;
            next.q[i] = check(i, "non-empty probability", flow.q, true)?;
            idle[i] = equations::not_transmitting(next.q[i], s.b);
            let tau = equations::perceived_rate(i, s.beta, s.b, next.q[i], prev.alpha[i])?;
            next.tau[i] = check(i, "successful attempt rate", tau, false)?;
        }

        // contention terms of each node from the previous perceived rates
        let mut prev_own = vec![None; n];
        for j in model.transmitters() {
            let s = svc[j].expect("transmitter service");
            let sum: f64 = prev.perceived[j].iter().sum();
            prev_own[j] = Some(equations::eta_g_c(s.beta, sum, self.turnaround));
        }

        for i in model.transmitters() {
            let mut row = Vec::with_capacity(model.omega(i).len());
            for (k, &j) in model.omega(i).iter().enumerate() {
                if j == model.bs {
                    row.push(0.0);
                    continue;
                }
                let s = svc[j].expect("transmitter service");
                let prev_row = &prev.perceived[j];
                let hidden: f64 = self.layout.hidden[i][k].iter().map(|&pos| prev_row[pos]).sum();
                let total: f64 = prev_row.iter().sum();
                let own = prev_own[j].expect("transmitter contention");
                let blocking = equations::hidden_blocking(s.beta, hidden, total, own, self.t_tx, prev.teff[j]);
                let blocking = check(j, "hidden-node CCA failure", blocking, true)?;
                let rate = equations::perceived_rate(j, s.beta, s.b, next.q[j], blocking)?;
                row.push(check(j, "perceived rate", rate, false)?);
            }
            next.perceived[i] = row;
        }

        for i in model.transmitters() {
            let s = svc[i].expect("transmitter service");
            let row = &next.perceived[i];
            let teff = check(i, "dilated activity period", self.teff(i, row)?, false)?;
            next.teff[i] = teff;
            let omega_sum: f64 = row.iter().sum();
            let own = equations::eta_g_c(s.beta, omega_sum, self.turnaround);
            next.alpha[i] = check(i, "CCA failure", equations::cca_failure(own, s.beta, teff), true)?;
            if next.alpha[i] >= 1.0 {
                return Err(Error::InfiniteBackoff { node: i });
            }

            let c1_sum = self.layout.c1_in_omega[i].iter().map(|&pos| row[pos]).sum::<f64>()
                + self.layout.c1_outside[i].iter().map(|&k| next.tau[k]).sum::<f64>();
            let rest_sum: f64 = self.layout.rest_in_omega[i].iter().map(|&pos| row[pos]).sum();
            let c2 = &model.hood.c2[i];
            let inputs = equations::CollisionInputs {
                own,
                beta: s.beta,
                omega_sum,
                c1_sum,
                omega_minus_c1_sum: rest_sum,
                c2_rate_sum: c2.iter().map(|&k| next.tau[k]).sum(),
                c2_idle_product: c2.iter().map(|&k| idle[k]).product(),
                turnaround: self.turnaround,
                t_tx: self.t_tx,
            };
            next.p[i] = check(i, "collision probability", equations::collision_probability(&inputs).p, true)?;
        }
        Ok(next)
    }

    fn report(&self, s: &State) -> Result<Vec<NodeUnknowns>> {
        let svc = self.services(s)?;
        let mut nodes = vec![NodeUnknowns::default(); self.model.len()];
        nodes[self.model.bs].teff = self.t_tx;
        nodes[self.model.bs].idle = 1.0;
        for i in self.model.transmitters() {
            let sv = svc[i].expect("transmitter service");
            let Contention { eta, c, .. } =
                equations::eta_g_c(sv.beta, s.perceived[i].iter().sum(), self.turnaround);
            nodes[i] = NodeUnknowns {
                alpha: s.alpha[i],
                p: s.p[i],
                gamma: equations::packet_failure(s.p[i], self.model.nodes[i].link_per),
                delta: sv.delta,
                q: s.q[i],
                b: sv.b,
                beta: sv.beta,
                sigma: sv.sigma,
                nu: s.nu[i],
                theta: s.theta[i],
                teff: s.teff[i],
                mean_backoff: sv.mean_backoff,
                tau: s.tau[i],
                idle: equations::not_transmitting(s.q[i], sv.b),
                eta,
                c,
                perceived: s.perceived[i].clone(),
            };
        }
        Ok(nodes)
    }
}

/// Solves the coupled per-node equations of `model`.
///
/// Returns `Ok` with `converged == false` when the iteration budget runs out;
/// errors are reserved for invalid input and numerical breakdown.
pub fn solve(model: &NetworkModel, params: &ProtocolParams, cfg: &AnalysisConfig) -> Result<FixedPointResult> {
    params.validate()?;
    cfg.validate()?;
    if cfg.teff_model == TeffModel::Boorstyn {
        for i in model.transmitters() {
            let size = model.omega(i).len();
            if size > teff::BOORSTYN_LIMIT {
                return Err(Error::NeighbourhoodTooLarge {
                    node: i,
                    size,
                    limit: teff::BOORSTYN_LIMIT,
                });
            }
        }
    }
    let t_tx = params.t_tx() as f64;
    let solver = Solver {
        model,
        params,
        cfg,
        layout: Layout::new(model, cfg.teff_model == TeffModel::Boorstyn),
        t_tx,
        turnaround: params.turnaround as f64,
    };
    let mut state = State::initial(model, t_tx, per_second_to_per_symbol(cfg.initial_rate_pps));
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        let next = solver.sweep(&state)?;
        residual = state.relax(&next, cfg.damping);
        iterations += 1;
        if residual < cfg.tolerance {
            break;
        }
    }
    Ok(FixedPointResult {
        nodes: solver.report(&state)?,
        iterations,
        converged: residual < cfg.tolerance,
        residual,
        teff_model: cfg.teff_model,
    })
}
