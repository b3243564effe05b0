//! Per-node steady-state relations of the decoupled node model.
//!
//! Each function is a pure map from already-known quantities to one group of
//! unknowns. Rates are per symbol time, durations in symbol times.

use crate::math;
use crate::model::NodeId;
use crate::params::ProtocolParams;
use crate::{Error, Result};

/// Race between node `i`'s backoff completion and its neighbours' attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contention {
    /// Probability that `i` attempts a CCA before any node in its CS set.
    pub eta: f64,
    /// Mean time until the first attempt.
    pub g: f64,
    /// Probability that `i` attempts within the turnaround window after a
    /// neighbour's successful CCA (simultaneous sensing).
    pub c: f64,
}

/// `eta = beta / (beta + sum)`, `g = 1 / (beta + sum)`,
/// `c = 1 - exp(-turnaround * beta)`.
pub fn eta_g_c(beta: f64, perceived_sum: f64, turnaround: f64) -> Contention {
    let total = beta + perceived_sum;
    let (eta, g) = if total > 0.0 {
        (beta / total, 1.0 / total)
    } else {
        (1.0, f64::INFINITY)
    };
    Contention {
        eta,
        g,
        c: -math::expm1(-turnaround * beta),
    }
}

/// Fraction of time node `j` is not transmitting: `(1 - q) + q b`.
#[inline]
pub fn not_transmitting(q: f64, b: f64) -> f64 {
    (1.0 - q) + q * b
}

/// Rate of `j`'s CCA attempts that are not blocked by `blocking`, measured
/// over the time `j` is not transmitting:
/// `beta b q (1 - blocking) / (1 - q + q b)`.
///
/// With `blocking = alpha_j^(-i)` this is the rate perceived by a neighbour
/// `i`; with `blocking = alpha_j` it is `j`'s unconditional successful
/// attempt rate.
pub fn perceived_rate(j: NodeId, beta: f64, b: f64, q: f64, blocking: f64) -> Result<f64> {
    if q == 0.0 {
        return Ok(0.0);
    }
    let denom = not_transmitting(q, b);
    if denom <= 0.0 {
        return Err(Error::SaturationDegenerate { node: j });
    }
    Ok(beta * b * q * (1.0 - blocking) / denom)
}

/// CCA failure probability of node `j` caused only by the part of its CS set
/// that node `i` cannot hear.
///
/// `hidden_sum` is the perceived rate total over `Omega_j - (Omega_i + i)`,
/// `total_sum` over all of `Omega_j`; `own` holds `j`'s contention terms.
pub fn hidden_blocking(
    beta: f64,
    hidden_sum: f64,
    total_sum: f64,
    own: Contention,
    t_tx: f64,
    teff: f64,
) -> f64 {
    if hidden_sum <= 0.0 {
        return 0.0;
    }
    let Contention { eta, c, .. } = own;
    let share = hidden_sum / (beta + total_sum);
    let num = share * (1.0 - c) * beta * t_tx;
    let den = eta + (1.0 - eta) * c + (1.0 - eta) * (1.0 - c) * beta * teff;
    num / den
}

/// CCA failure probability of a node from its renewal cycle.
pub fn cca_failure(own: Contention, beta: f64, teff: f64) -> f64 {
    let Contention { eta, c, .. } = own;
    let failed = (1.0 - eta) * (1.0 - c) * beta * teff;
    failed / (eta + (1.0 - eta) * c + failed)
}

/// Inputs to the collision probability of node `i`.
#[derive(Debug, Clone, Copy)]
pub struct CollisionInputs {
    pub own: Contention,
    pub beta: f64,
    /// Perceived rates summed over all of `Omega_i`.
    pub omega_sum: f64,
    /// Perceived rates summed over `C1`.
    pub c1_sum: f64,
    /// Perceived rates summed over `Omega_i - C1`.
    pub omega_minus_c1_sum: f64,
    /// Unconditional successful attempt rates summed over `C2`.
    pub c2_rate_sum: f64,
    /// Product of the not-transmitting fractions over `C2`.
    pub c2_idle_product: f64,
    pub turnaround: f64,
    pub t_tx: f64,
}

/// The five collision terms `R1..R5` and the resulting probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub terms: [f64; 5],
    pub p: f64,
}

pub fn collision_probability(x: &CollisionInputs) -> Collision {
    let Contention { eta, c, .. } = x.own;
    let idle = x.c2_idle_product;
    let busy = 1.0 - idle;
    // at least one C1 start in the turnaround window or one C2 start during the activity
    let overlap = 1.0 - math::exp(-x.turnaround * x.c1_sum) * math::exp(-x.t_tx * x.c2_rate_sum);
    let total = x.beta + x.omega_sum;
    let (c1_share, rest_share) = if total > 0.0 {
        (x.c1_sum / total, x.omega_minus_c1_sum / total)
    } else {
        (0.0, 0.0)
    };
    let terms = [
        eta * busy,
        (1.0 - eta) * c * busy,
        eta * idle * overlap,
        c1_share * c * idle,
        rest_share * c * idle * overlap,
    ];
    let p = terms.iter().sum::<f64>() / (eta + (1.0 - eta) * c);
    Collision { terms, p }
}

/// Packet failure probability from collisions and link errors.
#[inline]
pub fn packet_failure(p: f64, link_per: f64) -> f64 {
    p + (1.0 - p) * link_per
}

/// Service-time statistics of one head-of-line packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Service {
    /// Service rate, packets per symbol time.
    pub sigma: f64,
    /// Discard probability.
    pub delta: f64,
    /// Mean backoff (with CCAs) until transmission or CCA discard, `B`.
    pub mean_backoff: f64,
    /// Fraction of non-empty time spent in backoff.
    pub b: f64,
    /// CCA attempt rate during backoff.
    pub beta: f64,
    /// Mean time spent in backoff per packet, `Z`.
    pub backoff_per_packet: f64,
    /// Mean time spent transmitting per packet, `Y`.
    pub transmit_per_packet: f64,
}

/// Backoff and retry bookkeeping for a head-of-line packet.
///
/// With `m` CCA attempts per transmission and `n` transmissions per packet,
/// `Z` and `Y` follow the `n`-level nesting
/// `Z_k = a^m T2 + (1 - a^m)(T1 + g Z_(k+1))`, `Y_k = (1 - a^m)(T_tx + g Y_(k+1))`
/// and the discard probability `D_k = a^m + (1 - a^m) g D_(k+1)`, `D_(n+1) = 1`.
pub fn service_and_discard(node: NodeId, params: &ProtocolParams, alpha: f64, gamma: f64) -> Result<Service> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InfiniteBackoff { node });
    }
    let m = params.cca_attempts();
    let n = params.max_transmissions();
    let t_tx = params.t_tx() as f64;

    // B = sum_k a^k D_k, and the cumulative stage durations
    let mut mean_backoff = 0.0;
    let mut attempts = 0.0;
    let mut cumulative = 0.0;
    let mut success_weighted = 0.0;
    let mut a_pow = 1.0;
    for stage in 0..m {
        let d = params.mean_stage(stage);
        mean_backoff += a_pow * d;
        attempts += a_pow;
        cumulative += d;
        success_weighted += a_pow * (1.0 - alpha) * cumulative;
        a_pow *= alpha;
    }
    let cca_discard = a_pow; // alpha^m
    let s = 1.0 - cca_discard;
    let t2 = cumulative;
    let t1 = success_weighted / s;

    let mut z = cca_discard * t2 + s * t1;
    let mut y = s * t_tx;
    let mut delta = cca_discard + s * gamma;
    for _ in 1..n {
        z = cca_discard * t2 + s * (t1 + gamma * z);
        y = s * (t_tx + gamma * y);
        delta = cca_discard + s * gamma * delta;
    }

    Ok(Service {
        sigma: 1.0 / (z + y),
        delta,
        mean_backoff,
        b: mean_backoff / (mean_backoff + s * t_tx),
        beta: attempts / mean_backoff,
        backoff_per_packet: z,
        transmit_per_packet: y,
    })
}

/// Aggregate arrival rate, goodput and non-empty probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub nu: f64,
    pub theta: f64,
    pub q: f64,
}

pub fn arrivals_and_queue(lambda: f64, children_goodput: f64, delta: f64, sigma: f64, clamp: bool) -> Flow {
    let nu = lambda + children_goodput;
    let theta = nu * (1.0 - delta);
    let q = nu / sigma;
    Flow {
        nu,
        theta,
        q: if clamp { q.min(1.0) } else { q },
    }
}
