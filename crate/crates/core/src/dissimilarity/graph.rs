use std::collections::VecDeque;

use super::geodesic::component_sizes;
use super::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Undirected, unweighted graph without self-loops or repeated edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleGraph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
    labels: Option<Vec<String>>,
}

impl SimpleGraph {
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Empty("graph"));
        }
        let mut adj = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a node outside 0..{node_count}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on node {a}")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({v}, {})", w[0])));
            }
        }
        Ok(Self { adj, edge_count: edges.len(), labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.node_count()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (v, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&w| w > v).map(|&w| (v, w)));
        }
        out
    }
}

fn bfs_hops(g: &SimpleGraph, source: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = f64::INFINITY);
    out[source] = 0.0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let next = out[v] + 1.0;
        for &w in g.neighbors(v) {
            if out[w].is_infinite() {
                out[w] = next;
                queue.push_back(w);
            }
        }
    }
}

/// Hop-count shortest-path distance between every pair of nodes.
pub fn graph_shortest_path_dissimilarity(g: &SimpleGraph) -> Result<DissimilarityMatrix> {
    graph_shortest_path_dissimilarity_with(g, Execution::default())
}

pub fn graph_shortest_path_dissimilarity_with(
    g: &SimpleGraph,
    exec: Execution,
) -> Result<DissimilarityMatrix> {
    let n = g.node_count();
    let sizes = component_sizes(n, |v| g.neighbors(v).iter().copied());
    if sizes.len() > 1 {
        return Err(Error::DisconnectedGraph(sizes));
    }
    let mut values = vec![0.0; n * n];
    exec.for_each_chunk_mut(&mut values, n, |i, row| bfs_hops(g, i, row));
    let d = DissimilarityMatrix::from_trusted(n, values);
    Ok(match g.labels() {
        Some(l) => d.with_labels(l.to_vec())?,
        None => d,
    })
}
