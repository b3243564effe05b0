//! Candidate graphs and hop-count shortest-path trees.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    /// Length in meters; a proxy for the transmit power the link needs.
    pub length: f64,
}

/// Nodes with positions and every link usable at maximum power.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGraph {
    pub positions: Vec<(f64, f64)>,
    pub bs: NodeId,
    pub edges: Vec<Edge>,
}

impl CandidateGraph {
    /// Complete graph on `positions` with Euclidean edge lengths.
    pub fn complete(positions: Vec<(f64, f64)>, bs: NodeId) -> Self {
        let n = positions.len();
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                let (xa, ya) = positions[a];
                let (xb, yb) = positions[b];
                edges.push(Edge {
                    a,
                    b,
                    length: math::hypot(xa - xb, ya - yb),
                });
            }
        }
        Self { positions, bs, edges }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Distinct edge lengths in increasing order.
    pub fn distinct_lengths(&self) -> Vec<f64> {
        let mut lengths: Vec<f64> = self.edges.iter().map(|e| e.length).collect();
        lengths.sort_by(f64::total_cmp);
        lengths.dedup();
        lengths
    }
}

/// A spanning tree given by parent pointers towards the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub parent: Vec<Option<NodeId>>,
    /// Hop count of every node to the base station.
    pub hops: Vec<usize>,
    /// Length of the edge from each node to its parent (0 for the BS).
    pub edge_length: Vec<f64>,
}

impl Tree {
    pub fn max_edge(&self) -> f64 {
        self.edge_length.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_hops(&self) -> usize {
        self.hops.iter().copied().max().unwrap_or(0)
    }
}

/// Breadth-first shortest-path tree over the edges selected by `keep`.
///
/// Each node attaches to a neighbour one level closer to the BS through its
/// shortest such edge, ties going to the smaller parent id; among all
/// hop-count shortest-path trees this minimises the longest edge. Returns
/// `None` when some node is unreachable.
pub fn shortest_path_tree(graph: &CandidateGraph, keep: impl Fn(&Edge) -> bool) -> Option<Tree> {
    let n = graph.len();
    let mut adjacency: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
    for e in graph.edges.iter().filter(|e| keep(e)) {
        adjacency[e.a].push((e.b, e.length));
        adjacency[e.b].push((e.a, e.length));
    }
    let mut level = vec![usize::MAX; n];
    level[graph.bs] = 0;
    let mut queue = VecDeque::from([graph.bs]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adjacency[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if level.contains(&usize::MAX) {
        return None;
    }
    let mut parent = vec![None; n];
    let mut edge_length = vec![0.0; n];
    for v in 0..n {
        if v == graph.bs {
            continue;
        }
        let best = adjacency[v]
            .iter()
            .filter(|&&(u, _)| level[u] + 1 == level[v])
            .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
            .copied()?;
        parent[v] = Some(best.0);
        edge_length[v] = best.1;
    }
    Some(Tree {
        parent,
        hops: level,
        edge_length,
    })
}
