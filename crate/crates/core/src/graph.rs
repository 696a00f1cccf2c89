//! Undirected weighted graph in compressed sparse row form.
//!
//! Off-diagonal edges are stored in both directions with sorted neighbor
//! lists. Self-loops are kept apart in `self_loops`; a self-loop of weight
//! `w` adds `2w` to its node's degree, so `total_weight_2m` stays equal to
//! the sum of degrees and is preserved by [`Graph::collapse`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    self_loops: Vec<f64>,
    degrees: Vec<f64>,
    total_weight_2m: f64,
}

impl Graph {
    /// Builds a graph from undirected edges. Parallel edges have their weights
    /// summed; `(u, u, w)` records a self-loop.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut builder = GraphBuilder::new(node_count);
        for &(u, v, w) in edges {
            builder.add_edge(u, v, w)?;
        }
        Ok(builder.build())
    }

    pub fn empty(node_count: usize) -> Self {
        GraphBuilder::new(node_count).build()
    }

    pub fn node_count(&self) -> usize {
        self.self_loops.len()
    }

    /// Number of distinct undirected edges, self-loops included.
    pub fn edge_count(&self) -> usize {
        let off_diagonal = self.targets.len() / 2;
        off_diagonal + self.self_loops.iter().filter(|&&w| w > 0.0).count()
    }

    /// Sum of all edge weights counted twice (the `2m` of modularity).
    pub fn total_weight_2m(&self) -> f64 {
        self.total_weight_2m
    }

    /// Weighted degree `k_i`, with self-loops counted twice.
    pub fn degree(&self, node: usize) -> f64 {
        self.degrees[node]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn self_loop(&self, node: usize) -> f64 {
        self.self_loops[node]
    }

    /// Off-diagonal neighbors of `node`, ascending by id.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn neighbor_count(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Each undirected edge once, `u <= v`, in ascending `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            let loop_weight = self.self_loops[u];
            let self_edge = (loop_weight > 0.0).then_some((u, u, loop_weight));
            self_edge.into_iter().chain(
                self.neighbors(u)
                    .filter(move |&(v, _)| v > u)
                    .map(move |(v, w)| (u, v, w)),
            )
        })
    }

    /// Aggregates each community into a supernode. Inter-community weights are
    /// summed and intra-community weights (self-loops included) become the
    /// supernode's self-loop.
    pub fn collapse(&self, partition: &Partition) -> Result<Graph> {
        partition.check_len(self.node_count())?;
        let k = partition.community_count();
        let mut builder = GraphBuilder::new(k);
        for (u, v, w) in self.edges() {
            let cu = partition.community_of(u);
            let cv = partition.community_of(v);
            builder.add_edge_unchecked(cu, cv, w);
        }
        let mut collapsed = builder.build();
        // 2m in exact arithmetic is unchanged; keep the original value so the
        // invariant holds bit-for-bit regardless of summation order.
        collapsed.total_weight_2m = self.total_weight_2m;
        Ok(collapsed)
    }
}

/// Accumulates edges, merging duplicates, then freezes into a [`Graph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    node_count: usize,
    edges: BTreeMap<(usize, usize), f64>,
}

impl GraphBuilder {
    pub fn new(node_count: usize) -> Self {
        GraphBuilder {
            node_count,
            edges: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Grows the node set by one and returns the new id.
    pub fn add_node(&mut self) -> usize {
        self.node_count += 1;
        self.node_count - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) -> Result<()> {
        if u >= self.node_count || v >= self.node_count {
            return Err(Error::validation(format!(
                "edge ({u}, {v}) references a node outside 0..{}",
                self.node_count
            )));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::validation(format!(
                "edge ({u}, {v}) has invalid weight {weight}"
            )));
        }
        self.add_edge_unchecked(u, v, weight);
        Ok(())
    }

    fn add_edge_unchecked(&mut self, u: usize, v: usize, weight: f64) {
        let key = if u <= v { (u, v) } else { (v, u) };
        *self.edges.entry(key).or_insert(0.0) += weight;
    }

    pub fn build(self) -> Graph {
        let n = self.node_count;
        let mut self_loops = vec![0.0; n];
        let mut counts = vec![0usize; n];
        for &(u, v) in self.edges.keys() {
            if u != v {
                counts[u] += 1;
                counts[v] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let nnz = *offsets.last().unwrap();
        let mut targets = vec![0; nnz];
        let mut weights = vec![0.0; nnz];
        let mut cursor = offsets[..n].to_vec();
        // BTreeMap iteration is ordered by (u, v). Writing the lower endpoint
        // into each upper node's list first, then the upper endpoints, leaves
        // every list ascending.
        for (&(u, v), &w) in &self.edges {
            if u == v {
                self_loops[u] += w;
            } else {
                targets[cursor[v]] = u;
                weights[cursor[v]] = w;
                cursor[v] += 1;
            }
        }
        for (&(u, v), &w) in &self.edges {
            if u != v {
                targets[cursor[u]] = v;
                weights[cursor[u]] = w;
                cursor[u] += 1;
            }
        }
        let degrees: Vec<f64> = (0..n)
            .map(|node| {
                weights[offsets[node]..offsets[node + 1]].iter().sum::<f64>()
                    + 2.0 * self_loops[node]
            })
            .collect();
        let total_weight_2m = degrees.iter().sum();
        Graph {
            offsets,
            targets,
            weights,
            self_loops,
            degrees,
            total_weight_2m,
        }
    }
}
