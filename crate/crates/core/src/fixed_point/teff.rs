//! Dilated channel-activity period `T_eff`: the mean time a node's CS set
//! keeps the channel busy once one of its members starts transmitting.

use crate::math;
use crate::model::NodeId;
use crate::{Error, Result};

/// Largest carrier-sense set the independent-set enumeration accepts.
pub const BOORSTYN_LIMIT: usize = 25;

/// Busy period of an M/D/inf queue with arrival rate `zeta` and fixed
/// service `t_tx`: `(e^(zeta t_tx) - 1) / zeta`.
pub fn md_infinity(zeta: f64, t_tx: f64) -> f64 {
    let x = zeta * t_tx;
    if x < 1e-8 {
        t_tx * (1.0 + x / 2.0)
    } else {
        math::expm1(x) / zeta
    }
}

/// Sum over all independent sets `S` (including the empty one) of
/// `prod_{k in S} weights[k]`.
///
/// `conflicts[k]` is the bitmask of vertices adjacent to `k`. Zero-weight
/// vertices are skipped since they only contribute zero terms.
pub fn independent_set_sum(weights: &[f64], conflicts: &[u32]) -> f64 {
    1.0 + nonempty_set_sum(weights, conflicts)
}

/// [`independent_set_sum`] without the empty set's unit term.
fn nonempty_set_sum(weights: &[f64], conflicts: &[u32]) -> f64 {
    debug_assert!(weights.len() <= 32 && weights.len() == conflicts.len());
    let active = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .fold(0u32, |m, (k, _)| m | (1 << k));
    recurse(active, weights, conflicts)
}

fn recurse(candidates: u32, weights: &[f64], conflicts: &[u32]) -> f64 {
    if candidates == 0 {
        return 0.0;
    }
    let v = candidates.trailing_zeros() as usize;
    let rest = candidates & !(1 << v);
    recurse(rest, weights, conflicts) + weights[v] * (1.0 + recurse(rest & !conflicts[v], weights, conflicts))
}

/// `T_eff` from the product-form stationary distribution of the CS graph
/// around node `i`.
///
/// `rates[k]` is the perceived rate of the `k`-th member of `Omega_i` and
/// `member_conflicts[k]` the bitmask of the other members it senses (bit `k`
/// for member `k`). Node `i` conflicts with every member, so its own load
/// cancels: `T_eff = T_tx * sum_{S != {}} prod_{k in S} rho_k / sum_k rho_k`
/// over the independent sets of members, with `rho_k = rates[k] T_tx`.
pub fn boorstyn(node: NodeId, rates: &[f64], member_conflicts: &[u32], t_tx: f64) -> Result<f64> {
    let n = rates.len();
    if n > BOORSTYN_LIMIT {
        return Err(Error::NeighbourhoodTooLarge {
            node,
            size: n,
            limit: BOORSTYN_LIMIT,
        });
    }
    let loads: alloc::vec::Vec<f64> = rates.iter().map(|&r| r * t_tx).collect();
    let total: f64 = loads.iter().sum();
    if !(total > 0.0) {
        return Ok(t_tx);
    }
    let teff = t_tx * (nonempty_set_sum(&loads, member_conflicts) / total);
    Ok(teff.max(t_tx))
}
