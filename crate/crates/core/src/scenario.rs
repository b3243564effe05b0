//! Seeded topology generators.
//!
//! Trees grow outward from the base station: each new node attaches to a
//! random existing node and is placed inside that node's carrier-sense range.
//! Placements are rejected when they crowd an existing node or push a CS set
//! past the degree cap, and whole trees are redrawn until the mean CS degree
//! is within half a node of the target.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::model::{NetworkModel, NodeId, NodeSpec};
use crate::{Error, Result};

/// Parameters of a random tree (`tree-n<nodes>-CS<mean_degree>`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeSpec {
    /// Total node count, base station included.
    pub nodes: usize,
    /// Target mean carrier-sense set size.
    pub mean_degree: f64,
    /// Largest carrier-sense set allowed.
    pub max_degree: usize,
    pub cs_range_m: f64,
    pub lambda_pps: f64,
    pub link_per: f64,
}

impl Default for TreeSpec {
    fn default() -> Self {
        Self {
            nodes: 10,
            mean_degree: 3.0,
            max_degree: 4,
            cs_range_m: 20.0,
            lambda_pps: 1.0,
            link_per: 0.01,
        }
    }
}

const TREE_ATTEMPTS: usize = 10_000;
const PLACEMENT_ATTEMPTS: usize = 200;

fn degrees_ok(positions: &[(f64, f64)], range: f64, max_degree: usize) -> bool {
    positions.iter().all(|&(xa, ya)| {
        positions
            .iter()
            .filter(|&&(xb, yb)| (xa, ya) != (xb, yb) && math::hypot(xa - xb, ya - yb) <= range)
            .count()
            <= max_degree
    })
}

/// Node positions with parent pointers.
type Layout = (Vec<(f64, f64)>, Vec<Option<NodeId>>);

fn grow(rng: &mut ChaCha8Rng, spec: &TreeSpec) -> Option<Layout> {
    let r = spec.cs_range_m;
    let mut positions = vec![(0.0, 0.0)];
    let mut parent = vec![None];
    while positions.len() < spec.nodes {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let anchor = rng.gen_range(0..positions.len());
            let dist = r * rng.gen_range(0.5..0.95);
            let angle = rng.gen_range(0.0..core::f64::consts::TAU);
            let (ax, ay) = positions[anchor];
            let cand = (ax + dist * math::cos(angle), ay + dist * math::sin(angle));
            if positions
                .iter()
                .any(|&(x, y)| math::hypot(x - cand.0, y - cand.1) < 0.3 * r)
            {
                continue;
            }
            positions.push(cand);
            if degrees_ok(&positions, r, spec.max_degree) {
                parent.push(Some(anchor));
                placed = true;
                break;
            }
            positions.pop();
        }
        if !placed {
            return None;
        }
    }
    Some((positions, parent))
}

/// Random tree whose mean CS degree is within 0.5 of `spec.mean_degree`.
pub fn random_tree(seed: u64, spec: &TreeSpec) -> Result<NetworkModel> {
    if spec.nodes < 2 {
        return Err(Error::InvalidConfig("a tree needs at least two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..TREE_ATTEMPTS {
        let Some((positions, parent)) = grow(&mut rng, spec) else {
            continue;
        };
        let nodes = positions
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                if i == 0 {
                    NodeSpec::relay(0, x, y, 0.0)
                } else {
                    NodeSpec::source(i as u32, x, y, spec.lambda_pps, spec.link_per)
                }
            })
            .collect();
        let model = NetworkModel::from_geometry(nodes, 0, parent, spec.cs_range_m)?;
        if (model.mean_cs_degree() - spec.mean_degree).abs() <= 0.5 {
            return Ok(model);
        }
    }
    Err(Error::InvalidConfig(format!(
        "no {}-node tree with mean CS degree {} found",
        spec.nodes, spec.mean_degree
    )))
}

/// `sources` nodes on a circle of radius `radius_m` around the base station,
/// with the CS range chosen so that every ring node senses exactly `degree`
/// nodes (the base station included).
pub fn star(sources: usize, degree: usize, radius_m: f64, lambda_pps: f64, link_per: f64) -> Result<NetworkModel> {
    if sources == 0 || degree == 0 || degree > sources {
        return Err(Error::InvalidConfig(format!(
            "a star of {sources} sources cannot give CS degree {degree}"
        )));
    }
    let mut positions = vec![(0.0, 0.0)];
    for k in 0..sources {
        let angle = core::f64::consts::TAU * k as f64 / sources as f64;
        positions.push((radius_m * math::cos(angle), radius_m * math::sin(angle)));
    }
    // distances seen from the first ring node, base station included
    let (x1, y1) = positions[1];
    let mut dist: Vec<f64> = positions
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != 1)
        .map(|(_, &(x, y))| math::hypot(x - x1, y - y1))
        .collect();
    dist.sort_by(f64::total_cmp);
    let lo = dist[degree - 1];
    let hi = dist.get(degree).copied().unwrap_or(lo * 2.0);
    if hi - lo < 1e-9 * radius_m {
        return Err(Error::InvalidConfig(format!(
            "CS degree {degree} splits a tie among equidistant ring nodes"
        )));
    }
    let range = (lo + hi) / 2.0;
    let nodes = positions
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            if i == 0 {
                NodeSpec::relay(0, x, y, 0.0)
            } else {
                NodeSpec::source(i as u32, x, y, lambda_pps, link_per)
            }
        })
        .collect();
    let parent = (0..=sources).map(|i| (i > 0).then_some(0)).collect();
    NetworkModel::from_geometry(nodes, 0, parent, range)
}

/// Chain of `sources` nodes at `spacing_m` intervals leading to the base
/// station at the origin.
pub fn line(sources: usize, spacing_m: f64, cs_range_m: f64, lambda_pps: f64, link_per: f64) -> Result<NetworkModel> {
    let nodes = (0..=sources)
        .map(|i| {
            let x = i as f64 * spacing_m;
            if i == 0 {
                NodeSpec::relay(0, x, 0.0, 0.0)
            } else {
                NodeSpec::source(i as u32, x, 0.0, lambda_pps, link_per)
            }
        })
        .collect();
    let parent = (0..=sources).map(|i| i.checked_sub(1)).collect();
    NetworkModel::from_geometry(nodes, 0, parent, cs_range_m)
}
