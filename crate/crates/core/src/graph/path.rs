use std::fmt::Write;

use super::{DirectedGraph, EdgeId, VertexId};
use crate::error::{Error, Result};

/// A finite path: its vertex sequence and the edges taken between them.
///
/// Paths are validated against a graph when built; the edge list is what
/// identifies the path in a multigraph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    vertices: Vec<VertexId>,
    edges: Vec<EdgeId>,
}

impl Path {
    /// The zero-step path sitting at `v`.
    pub fn trivial(v: VertexId) -> Self {
        Path { vertices: vec![v], edges: Vec::new() }
    }

    pub fn from_edges(graph: &DirectedGraph, start: VertexId, edges: Vec<EdgeId>) -> Result<Self> {
        if !graph.contains_vertex(start) {
            return Err(Error::UnknownVertex(start));
        }
        let mut path = Path::trivial(start);
        for e in edges {
            path.push_checked(graph, e)?;
        }
        Ok(path)
    }

    /// Resolves each consecutive pair to its unique edge.
    pub fn from_vertices(graph: &DirectedGraph, vertices: &[VertexId]) -> Result<Self> {
        let (&start, rest) = vertices
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("empty vertex sequence".into()))?;
        if !graph.contains_vertex(start) {
            return Err(Error::UnknownVertex(start));
        }
        let mut path = Path::trivial(start);
        for &head in rest {
            let tail = path.end();
            if !graph.contains_vertex(head) {
                return Err(Error::UnknownVertex(head));
            }
            let candidates: Vec<EdgeId> = graph.edges_between(tail, head).collect();
            match candidates.as_slice() {
                [] => return Err(Error::NoSuchStep { tail, head }),
                [e] => path.push_step(*e, head),
                _ => return Err(Error::AmbiguousStep { tail, head, count: candidates.len() }),
            }
        }
        Ok(path)
    }

    pub fn push_checked(&mut self, graph: &DirectedGraph, e: EdgeId) -> Result<()> {
        if e.0 >= graph.edge_count() {
            return Err(Error::UnknownEdge(e));
        }
        let edge = graph.edge(e);
        if edge.tail != self.end() {
            return Err(Error::Discontinuous { edge: e, at: self.end() });
        }
        self.push_step(e, edge.head);
        Ok(())
    }

    /// Appends a step without consulting the graph.
    pub(crate) fn push_step(&mut self, e: EdgeId, head: VertexId) {
        self.edges.push(e);
        self.vertices.push(head);
    }

    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn end(&self) -> VertexId {
        *self.vertices.last().expect("paths are nonempty")
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_cycle(&self) -> bool {
        self.start() == self.end()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    /// `γ̌`: the same edges in reverse order, a path of the reversed graph.
    pub fn reversed(&self) -> Path {
        Path {
            vertices: self.vertices.iter().rev().copied().collect(),
            edges: self.edges.iter().rev().copied().collect(),
        }
    }

    /// `self` followed by `other`; `other` must start where `self` ends.
    pub fn concat(&self, other: &Path) -> Result<Path> {
        if other.start() != self.end() {
            return Err(Error::InvalidArgument(format!(
                "cannot join a path ending at {} with one starting at {}",
                self.end(),
                other.start()
            )));
        }
        let mut joined = self.clone();
        joined.edges.extend_from_slice(&other.edges);
        joined.vertices.extend_from_slice(&other.vertices[1..]);
        Ok(joined)
    }

    /// Comma-separated vertex ids, e.g. `0,1,0,1`.
    pub fn vertex_literal(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{v}").unwrap();
        }
        s
    }

    /// Parses a vertex literal (`0,1,0,1`) against `graph`.
    pub fn parse_vertices(graph: &DirectedGraph, literal: &str) -> Result<Path> {
        let vertices = literal
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map(VertexId)
                    .map_err(|_| Error::InvalidArgument(format!("bad vertex id {t:?} in path literal")))
            })
            .collect::<Result<Vec<_>>>()?;
        Path::from_vertices(graph, &vertices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> DirectedGraph {
        // 0 -> 1 -> 2 -> 0 plus a parallel 0 -> 1.
        DirectedGraph::new(3, [(0, 1), (1, 2), (2, 0), (0, 1)]).unwrap()
    }

    #[test]
    fn vertex_literal_round_trip() {
        let g = DirectedGraph::new(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let p = Path::parse_vertices(&g, "0,1,2,0").unwrap();
        assert_eq!(p.edges(), &[EdgeId(0), EdgeId(1), EdgeId(2)]);
        assert_eq!(p.vertex_literal(), "0,1,2,0");
        assert!(p.is_cycle());
    }

    #[test]
    fn parallel_edges_make_vertex_literals_ambiguous() {
        let g = square();
        assert!(matches!(Path::parse_vertices(&g, "0,1"), Err(Error::AmbiguousStep { count: 2, .. })));
        let p = Path::from_edges(&g, VertexId(0), vec![EdgeId(3), EdgeId(1)]).unwrap();
        assert_eq!(p.end(), VertexId(2));
    }

    #[test]
    fn invalid_steps_are_rejected() {
        let g = square();
        assert!(matches!(Path::parse_vertices(&g, "0,2"), Err(Error::NoSuchStep { .. })));
        assert!(matches!(
            Path::from_edges(&g, VertexId(0), vec![EdgeId(1)]),
            Err(Error::Discontinuous { .. })
        ));
        assert!(Path::parse_vertices(&g, "0,x").is_err());
    }

    #[test]
    fn reversal_and_concatenation() {
        let g = square();
        let a = Path::from_edges(&g, VertexId(0), vec![EdgeId(0)]).unwrap();
        let b = Path::from_edges(&g, VertexId(1), vec![EdgeId(1), EdgeId(2)]).unwrap();
        let ab = a.concat(&b).unwrap();
        assert_eq!(ab.vertex_literal(), "0,1,2,0");
        let r = ab.reversed();
        assert_eq!(r.edges(), &[EdgeId(2), EdgeId(1), EdgeId(0)]);
        assert_eq!(r.vertex_literal(), "0,2,1,0");
        assert!(Path::from_edges(&g.reversed(), VertexId(0), r.edges().to_vec()).is_ok());
        assert!(b.concat(&b).is_err());
    }
}
