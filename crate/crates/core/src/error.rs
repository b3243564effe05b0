use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::NodeId;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Every violated model invariant, not just the first one found.
    InvalidModel(Vec<String>),
    InvalidParams(String),
    InvalidConfig(String),
    /// `q = 1` and `b = 0`: the node never leaves the transmit state.
    SaturationDegenerate { node: NodeId },
    /// A CCA failure probability of one makes the backoff time infinite.
    InfiniteBackoff { node: NodeId },
    /// A non-finite value or an out-of-range probability.
    Numerical {
        node: NodeId,
        equation: &'static str,
        value: f64,
    },
    NeighbourhoodTooLarge { node: NodeId, size: usize, limit: usize },
    ServiceTimeDiverges,
    Infeasible(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModel(problems) => {
                write!(f, "invalid network model: ")?;
                for (k, p) in problems.iter().enumerate() {
                    if k > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Error::InvalidParams(m) => write!(f, "invalid protocol parameters: {m}"),
            Error::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            Error::SaturationDegenerate { node } => {
                write!(f, "node {node}: saturated with zero backoff fraction")
            }
            Error::InfiniteBackoff { node } => {
                write!(f, "node {node}: CCA failure probability reached 1")
            }
            Error::Numerical {
                node,
                equation,
                value,
            } => write!(f, "node {node}: {equation} evaluated to {value}"),
            Error::NeighbourhoodTooLarge { node, size, limit } => write!(
                f,
                "node {node}: carrier-sense set of {size} nodes exceeds the enumeration limit of {limit}"
            ),
            Error::ServiceTimeDiverges => write!(f, "service time diverges (packet failure probability 1)"),
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
