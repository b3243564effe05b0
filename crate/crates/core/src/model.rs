//! Network data model: nodes, routing tree, carrier-sense sets and the
//! interference partition around every receiver.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Dense node index into [`NetworkModel::nodes`].
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Source,
    Relay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    /// Identifier used in scenario files and reports.
    pub label: u32,
    pub x: f64,
    pub y: f64,
    pub role: Role,
    /// External packet generation rate, packets per second.
    pub lambda_pps: f64,
    /// Packet error rate of the link to the parent.
    pub link_per: f64,
}

impl NodeSpec {
    pub fn source(label: u32, x: f64, y: f64, lambda_pps: f64, link_per: f64) -> Self {
        Self {
            label,
            x,
            y,
            role: Role::Source,
            lambda_pps,
            link_per,
        }
    }

    pub fn relay(label: u32, x: f64, y: f64, link_per: f64) -> Self {
        Self {
            label,
            x,
            y,
            role: Role::Relay,
            lambda_pps: 0.0,
            link_per,
        }
    }
}

/// Carrier-sense sets and the interference partition of every node's receiver.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Neighbourhoods {
    pub omega: Vec<Vec<NodeId>>,
    /// `I_r(i)`: nodes whose activity corrupts reception at `i`'s parent.
    pub interference: Vec<Vec<NodeId>>,
    /// Interferers that `i` can sense (always contains the parent).
    pub c1: Vec<Vec<NodeId>>,
    /// Interferers hidden from `i`.
    pub c2: Vec<Vec<NodeId>>,
}

/// Derives carrier-sense sets from positions and a common CS range, then the
/// interference partition for the given tree.
pub fn derive_neighbourhoods(
    positions: &[(f64, f64)],
    cs_range: f64,
    parent: &[Option<NodeId>],
) -> Neighbourhoods {
    let n = positions.len();
    let mut omega = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (xi, yi) = positions[i];
                let (xj, yj) = positions[j];
                if math::hypot(xi - xj, yi - yj) <= cs_range {
                    omega[i].push(j);
                }
            }
        }
    }
    interference_partition(omega, parent)
}

/// Builds `I_r(i)`, `C1` and `C2` from explicit carrier-sense sets.
///
/// `I_r(i) = (Omega_r(i) + r(i)) - i`, `C1 = I_r(i) ∩ (Omega_i + r(i))` and
/// `C2 = I_r(i) - C1`. The base station (no parent) gets empty sets.
pub fn interference_partition(mut omega: Vec<Vec<NodeId>>, parent: &[Option<NodeId>]) -> Neighbourhoods {
    for set in &mut omega {
        set.sort_unstable();
        set.dedup();
    }
    let n = omega.len();
    let mut interference = vec![Vec::new(); n];
    let mut c1 = vec![Vec::new(); n];
    let mut c2 = vec![Vec::new(); n];
    for i in 0..n {
        let Some(r) = parent[i] else { continue };
        if r >= n {
            continue;
        }
        let mut set: Vec<NodeId> = omega[r].iter().copied().chain([r]).filter(|&k| k != i).collect();
        set.sort_unstable();
        set.dedup();
        for &k in &set {
            if k == r || omega[i].binary_search(&k).is_ok() {
                c1[i].push(k);
            } else {
                c2[i].push(k);
            }
        }
        interference[i] = set;
    }
    Neighbourhoods {
        omega,
        interference,
        c1,
        c2,
    }
}

/// Immutable network description shared by the analysis, the simulator and
/// the designer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub nodes: Vec<NodeSpec>,
    pub bs: NodeId,
    pub parent: Vec<Option<NodeId>>,
    /// Common carrier-sense range when the sets were derived from geometry.
    pub cs_range: Option<f64>,
    pub hood: Neighbourhoods,
    children: Vec<Vec<NodeId>>,
    /// Leaves first, base station last.
    order: Vec<NodeId>,
    cs: Vec<bool>,
}

impl NetworkModel {
    /// Model with carrier-sense sets derived from node positions.
    pub fn from_geometry(
        nodes: Vec<NodeSpec>,
        bs: NodeId,
        parent: Vec<Option<NodeId>>,
        cs_range: f64,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if !(cs_range.is_finite() && cs_range > 0.0) {
            problems.push(format!("carrier-sense range {cs_range} must be positive"));
        }
        let positions: Vec<(f64, f64)> = nodes.iter().map(|n| (n.x, n.y)).collect();
        let omega = derive_neighbourhoods(&positions, cs_range, &vec![None; nodes.len()]).omega;
        Self::build(nodes, bs, parent, omega, Some(cs_range), problems)
    }

    /// Model with explicit carrier-sense sets.
    pub fn from_cs_sets(
        nodes: Vec<NodeSpec>,
        bs: NodeId,
        parent: Vec<Option<NodeId>>,
        omega: Vec<Vec<NodeId>>,
    ) -> Result<Self> {
        Self::build(nodes, bs, parent, omega, None, Vec::new())
    }

    fn build(
        nodes: Vec<NodeSpec>,
        bs: NodeId,
        parent: Vec<Option<NodeId>>,
        mut omega: Vec<Vec<NodeId>>,
        cs_range: Option<f64>,
        mut problems: Vec<String>,
    ) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            problems.push("network has no nodes".into());
            return Err(Error::InvalidModel(problems));
        }
        if bs >= n {
            problems.push(format!("base station index {bs} out of range"));
            return Err(Error::InvalidModel(problems));
        }
        if parent.len() != n {
            problems.push(format!("parent map has {} entries for {n} nodes", parent.len()));
            return Err(Error::InvalidModel(problems));
        }
        if omega.len() != n {
            problems.push(format!("carrier-sense map has {} entries for {n} nodes", omega.len()));
            return Err(Error::InvalidModel(problems));
        }

        let mut labels: Vec<u32> = nodes.iter().map(|s| s.label).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            problems.push("duplicate node ids".into());
        }

        for (i, spec) in nodes.iter().enumerate() {
            let label = spec.label;
            if !(0.0..=1.0).contains(&spec.link_per) {
                problems.push(format!("node {label}: link PER {} outside [0,1]", spec.link_per));
            }
            if !(spec.lambda_pps.is_finite() && spec.lambda_pps >= 0.0) {
                problems.push(format!("node {label}: arrival rate {} is not a non-negative number", spec.lambda_pps));
            }
            if spec.role == Role::Relay && spec.lambda_pps != 0.0 {
                problems.push(format!("node {label}: relay with non-zero arrival rate"));
            }
            if i == bs {
                if parent[i].is_some() {
                    problems.push(format!("base station {label} has a parent"));
                }
                if spec.lambda_pps != 0.0 {
                    problems.push(format!("base station {label} generates traffic"));
                }
            } else {
                match parent[i] {
                    None => problems.push(format!("node {label} has no parent")),
                    Some(p) if p >= n => problems.push(format!("node {label}: parent index {p} out of range")),
                    Some(p) if p == i => problems.push(format!("node {label} is its own parent (not a tree)")),
                    _ => {}
                }
            }
        }

        // Every parent chain must reach the base station.
        let mut cyclic = false;
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while cur != bs {
                match parent[cur] {
                    Some(p) if p < n && steps <= n => {
                        cur = p;
                        steps += 1;
                    }
                    _ => break,
                }
            }
            if cur != bs && steps > n {
                cyclic = true;
            }
        }
        if cyclic {
            problems.push("parent relation contains a cycle: not a tree".into());
        }

        let mut cs = vec![false; n * n];
        for (i, set) in omega.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            for &j in set.iter() {
                if j >= n {
                    problems.push(format!("node {}: carrier-sense member {j} out of range", nodes[i].label));
                } else if j == i {
                    problems.push(format!("node {}: carrier-sense set contains itself", nodes[i].label));
                } else {
                    cs[i * n + j] = true;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if cs[i * n + j] && !cs[j * n + i] {
                    problems.push(format!(
                        "asymmetric carrier sensing: {} hears {} but not vice versa",
                        nodes[i].label, nodes[j].label
                    ));
                }
            }
        }

        if !problems.is_empty() {
            return Err(Error::InvalidModel(problems));
        }

        let hood = interference_partition(omega, &parent);
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
            }
        }
        // Depth-decreasing order puts every child before its parent.
        let mut depth = vec![0usize; n];
        for (i, d) in depth.iter_mut().enumerate() {
            let mut cur = i;
            while let Some(p) = parent[cur] {
                *d += 1;
                cur = p;
            }
        }
        let mut order: Vec<NodeId> = (0..n).collect();
        order.sort_by(|&a, &b| depth[b].cmp(&depth[a]).then(a.cmp(&b)));

        Ok(Self {
            nodes,
            bs,
            parent,
            cs_range,
            hood,
            children,
            order,
            cs,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True when `j` can sense `i`'s transmissions (and vice versa).
    #[inline]
    pub fn senses(&self, i: NodeId, j: NodeId) -> bool {
        self.cs[i * self.nodes.len() + j]
    }

    pub fn omega(&self, i: NodeId) -> &[NodeId] {
        &self.hood.omega[i]
    }

    pub fn children(&self, i: NodeId) -> &[NodeId] {
        &self.children[i]
    }

    /// Nodes ordered leaves first, base station last.
    pub fn leaf_to_root(&self) -> &[NodeId] {
        &self.order
    }

    /// Nodes that transmit (everything except the base station).
    pub fn transmitters(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(move |&i| i != self.bs)
    }

    pub fn sources(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.transmitters()
            .filter(move |&i| self.nodes[i].role == Role::Source)
    }

    /// `L_i`: the nodes a packet from `i` visits before reaching the base
    /// station, starting with `i`.
    pub fn path_to_bs(&self, i: NodeId) -> Vec<NodeId> {
        let mut path = Vec::new();
        let mut cur = i;
        while cur != self.bs {
            path.push(cur);
            match self.parent[cur] {
                Some(p) => cur = p,
                None => break,
            }
        }
        path
    }

    pub fn hop_count(&self, i: NodeId) -> usize {
        self.path_to_bs(i).len()
    }

    /// No node has a hidden interferer at its receiver.
    pub fn is_hidden_free(&self) -> bool {
        self.hood.c2.iter().all(|s| s.is_empty())
    }

    pub fn index_of_label(&self, label: u32) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.label == label)
    }

    /// Copy of the model with every source's rate set to `lambda_pps`.
    pub fn with_uniform_rate(&self, lambda_pps: f64) -> Self {
        let mut m = self.clone();
        for (i, n) in m.nodes.iter_mut().enumerate() {
            if n.role == Role::Source && i != m.bs {
                n.lambda_pps = lambda_pps;
            }
        }
        m
    }

    /// Mean carrier-sense set size over the transmitting nodes.
    pub fn mean_cs_degree(&self) -> f64 {
        let count = self.len().saturating_sub(1).max(1);
        self.transmitters().map(|i| self.omega(i).len()).sum::<usize>() as f64 / count as f64
    }
}
