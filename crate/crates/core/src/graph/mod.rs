//! Finite directed multigraphs with positive edge weights.
//!
//! Edge ids are dense and survive reversal: edge `e` of a graph and edge `e`
//! of its reverse are the pair `(e, ě)`. Self-loops and parallel edges are
//! allowed.

pub mod format;
pub mod lattice;
mod path;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{sum_in_order, Scalar};

pub use path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    // Both lists are sorted by edge id.
    out_adjacency: Vec<Vec<EdgeId>>,
    in_adjacency: Vec<Vec<EdgeId>>,
}

impl DirectedGraph {
    /// Builds a graph whose `i`-th endpoint pair becomes edge `i`.
    ///
    /// Fails if an endpoint is out of range or a vertex has no out-edge.
    pub fn new(
        vertex_count: usize,
        endpoints: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, (tail, head)) in endpoints.into_iter().enumerate() {
            for v in [tail, head] {
                if v >= vertex_count {
                    return Err(Error::VertexOutOfRange { edge: i, vertex: v, count: vertex_count });
                }
            }
            edges.push(Edge { id: EdgeId(i), tail: VertexId(tail), head: VertexId(head) });
        }
        let graph = Self::from_edges(vertex_count, edges);
        if let Some(v) = graph.vertices().find(|&v| graph.out_degree(v) == 0) {
            return Err(Error::NoOutEdge(v));
        }
        Ok(graph)
    }

    fn from_edges(vertex_count: usize, edges: Vec<Edge>) -> Self {
        let mut out_adjacency = vec![Vec::new(); vertex_count];
        let mut in_adjacency = vec![Vec::new(); vertex_count];
        for e in &edges {
            out_adjacency[e.tail.0].push(e.id);
            in_adjacency[e.head.0].push(e.id);
        }
        DirectedGraph { vertex_count, edges, out_adjacency, in_adjacency }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count).map(VertexId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        v.0 < self.vertex_count
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_adjacency[v.0]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_adjacency[v.0]
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_adjacency[v.0].len()
    }

    /// Edges from `tail` to `head`, in id order.
    pub fn edges_between(&self, tail: VertexId, head: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.out_adjacency[tail.0].iter().copied().filter(move |&e| self.edges[e.0].head == head)
    }

    /// The graph with every edge's tail and head swapped. Ids are kept.
    pub fn reversed(&self) -> DirectedGraph {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { id: e.id, tail: e.head, head: e.tail })
            .collect();
        Self::from_edges(self.vertex_count, edges)
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let reaches_all = |next: &dyn Fn(VertexId) -> Vec<VertexId>| {
            let mut seen = vec![false; self.vertex_count];
            let mut stack = vec![VertexId(0)];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for w in next(v) {
                    if !seen[w.0] {
                        seen[w.0] = true;
                        stack.push(w);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        let forward = |v: VertexId| self.out_edges(v).iter().map(|e| self.edge(*e).head).collect();
        let backward = |v: VertexId| self.in_edges(v).iter().map(|e| self.edge(*e).tail).collect();
        reaches_all(&forward) && reaches_all(&backward)
    }
}

/// Positive weights indexed by edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightAssignment<S> {
    weights: Vec<S>,
}

impl<S: Scalar> WeightAssignment<S> {
    pub fn new(graph: &DirectedGraph, weights: Vec<S>) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::LengthMismatch { expected: graph.edge_count(), found: weights.len() });
        }
        if let Some(i) = weights.iter().position(|w| *w <= S::zero()) {
            return Err(Error::NonPositiveWeight(EdgeId(i)));
        }
        Ok(WeightAssignment { weights })
    }

    pub fn weight(&self, e: EdgeId) -> &S {
        &self.weights[e.0]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.weights
    }

    /// `α_x`: total weight of the edges leaving `v`.
    pub fn vertex_weight(&self, graph: &DirectedGraph, v: VertexId) -> S {
        sum_in_order(graph.out_edges(v).iter().map(|e| &self.weights[e.0]))
    }

    /// Total weight of the edges entering `v`; equals `α̌_x` on the reversed graph.
    pub fn in_weight(&self, graph: &DirectedGraph, v: VertexId) -> S {
        sum_in_order(graph.in_edges(v).iter().map(|e| &self.weights[e.0]))
    }

    pub fn vertex_weights(&self, graph: &DirectedGraph) -> Vec<S> {
        graph.vertices().map(|v| self.vertex_weight(graph, v)).collect()
    }

    /// Weights of the reversed graph: `α̌_ě = α_e`.
    ///
    /// Ids are preserved by [`DirectedGraph::reversed`], so this is the same
    /// vector read against the reversed adjacency.
    pub fn reversed(&self) -> WeightAssignment<S> {
        self.clone()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> WeightAssignment<T> {
        WeightAssignment { weights: self.weights.iter().map(f).collect() }
    }
}

/// `div(α)(x) = α_x - α̌_x` for every vertex, summed in edge-id order.
pub fn divergence<S: Scalar>(graph: &DirectedGraph, weights: &WeightAssignment<S>) -> Vec<S> {
    graph
        .vertices()
        .map(|v| weights.vertex_weight(graph, v) - weights.in_weight(graph, v))
        .collect()
}

/// Vertices where `|div(α)(x)|` exceeds `tolerance` times the local weight scale.
pub fn divergence_violations<S: Scalar>(
    graph: &DirectedGraph,
    weights: &WeightAssignment<S>,
    tolerance: f64,
) -> Vec<VertexId> {
    let tol = S::tolerance(tolerance);
    graph
        .vertices()
        .filter(|&v| {
            let out = weights.vertex_weight(graph, v);
            let div = (out.clone() - weights.in_weight(graph, v)).abs();
            let scale = if out > S::one() { out } else { S::one() };
            div > tol.clone() * scale
        })
        .collect()
}
