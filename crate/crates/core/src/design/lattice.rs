//! Random source placements on a square lattice.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CandidateGraph, DesignProblem, Qos};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BsPlacement {
    /// The lattice point at the origin.
    #[default]
    Corner,
    /// The lattice point nearest the centre of the area.
    Centre,
    /// An explicit position, which need not be a lattice point.
    At(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub area_m: f64,
    pub cell_m: f64,
    pub sources: usize,
    pub bs: BsPlacement,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            area_m: 50.0,
            cell_m: 10.0,
            sources: 10,
            bs: BsPlacement::Corner,
        }
    }
}

impl LatticeSpec {
    /// Points per side of the lattice.
    pub fn side(&self) -> Result<usize> {
        let cells = self.area_m / self.cell_m;
        if !(self.cell_m > 0.0 && cells >= 1.0 && (cells - math::round(cells)).abs() < 1e-9) {
            return Err(Error::InvalidConfig(format!(
                "area {} m is not a whole number of {} m cells",
                self.area_m, self.cell_m
            )));
        }
        Ok(math::round(cells) as usize + 1)
    }

    pub fn lattice_points(&self) -> Result<Vec<(f64, f64)>> {
        let side = self.side()?;
        Ok((0..side * side)
            .map(|k| ((k % side) as f64 * self.cell_m, (k / side) as f64 * self.cell_m))
            .collect())
    }
}

/// Base station at node 0 followed by `spec.sources` distinct lattice
/// points drawn with `seed`; candidate edges join every pair.
pub fn generate_scenario(seed: u64, spec: &LatticeSpec, qos: Qos) -> Result<DesignProblem> {
    let mut points = spec.lattice_points()?;
    let side = spec.side()?;
    let bs_pos = match spec.bs {
        BsPlacement::Corner => points.remove(0),
        BsPlacement::Centre => points.remove((side / 2) * side + side / 2),
        BsPlacement::At(x, y) => (x, y),
    };
    if spec.sources > points.len() {
        return Err(Error::InvalidConfig(format!(
            "{} sources exceed the {} free lattice points",
            spec.sources,
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = points.partial_shuffle(&mut rng, spec.sources);
    let mut positions = Vec::with_capacity(spec.sources + 1);
    positions.push(bs_pos);
    positions.extend_from_slice(chosen);
    Ok(DesignProblem {
        graph: CandidateGraph::complete(positions, 0),
        qos,
    })
}
