//! Performance engineering for beaconless (unslotted CSMA/CA) IEEE 802.15.4
//! multi-hop tree networks.
//!
//! The crate bundles three cooperating engines that share one network model:
//!
//! * [`fixed_point`]: a mean-field model that couples per-node renewal
//!   analyses into fixed-point equations for CCA failure, collision, discard
//!   and queue occupancy, with [`qna`] turning the solution into end-to-end
//!   delay and delivery probability;
//! * [`sim`]: a symbol-resolution discrete-event simulator of the same
//!   protocol, used to validate the analysis;
//! * [`design`]: minimax spanning-tree design under hop and QoS constraints,
//!   using the analysis as its evaluator.
//!
//! Every duration and rate is expressed in symbol times (16 µs) internally.
//! The crate is `no_std` (with `alloc`) when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod design;
mod error;
pub mod fixed_point;
pub(crate) mod math;
pub mod model;
pub mod params;
pub mod qna;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use fixed_point::{solve, AnalysisConfig, FixedPointResult, NodeUnknowns, TeffModel};
pub use model::{NetworkModel, NodeId, NodeSpec, Role};
pub use params::ProtocolParams;
pub use qna::{qna_sweep, PerfReport};
pub use sim::{replicate, simulate, SimConfig, SimStats};
