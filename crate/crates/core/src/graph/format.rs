//! Line-oriented text format for weighted graphs:
//!
//! ```text
//! vertices 2
//! edge 0 0 1 2
//! edge 1 1 0 2
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Edge ids must cover
//! `0..m` exactly once, in any order.

use std::fmt::Write;

use super::{DirectedGraph, WeightAssignment};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn write_weighted_graph<S: Scalar>(graph: &DirectedGraph, weights: &WeightAssignment<S>) -> String {
    let mut out = format!("vertices {}\n", graph.vertex_count());
    for e in graph.edges() {
        writeln!(out, "edge {} {} {} {}", e.id, e.tail, e.head, weights.weight(e.id)).unwrap();
    }
    out
}

pub fn parse_weighted_graph<S: Scalar>(text: &str) -> Result<(DirectedGraph, WeightAssignment<S>)> {
    let mut vertex_count = None;
    let mut entries: Vec<Option<(usize, usize, S)>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("expected an integer, found {s:?}")));
        match fields.as_slice() {
            ["vertices", n] => {
                if vertex_count.is_some() {
                    return Err(err("duplicate vertices header".into()));
                }
                vertex_count = Some(int(n)?);
            }
            ["edge", id, tail, head, weight] => {
                if vertex_count.is_none() {
                    return Err(err("edge before the vertices header".into()));
                }
                let id = int(id)?;
                let weight = S::parse_decimal(weight).ok_or_else(|| err(format!("bad weight {weight:?}")))?;
                if entries.len() <= id {
                    entries.resize_with(id + 1, || None);
                }
                if entries[id].is_some() {
                    return Err(err(format!("duplicate edge id {id}")));
                }
                entries[id] = Some((int(tail)?, int(head)?, weight));
            }
            _ => return Err(err(format!("unrecognized line {line:?}"))),
        }
    }
    let vertex_count = vertex_count.ok_or(Error::Parse { line: 0, message: "missing vertices header".into() })?;
    let mut endpoints = Vec::with_capacity(entries.len());
    let mut weights = Vec::with_capacity(entries.len());
    for (id, entry) in entries.into_iter().enumerate() {
        let (tail, head, w) = entry.ok_or(Error::Parse { line: 0, message: format!("edge id {id} missing") })?;
        endpoints.push((tail, head));
        weights.push(w);
    }
    let graph = DirectedGraph::new(vertex_count, endpoints)?;
    let weights = WeightAssignment::new(&graph, weights)?;
    Ok((graph, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeId, VertexId};
    use crate::Rational;

    #[test]
    fn parses_out_of_order_ids_and_comments() {
        let text = "# two-cycle\nvertices 2\n\nedge 1 1 0 1.5\nedge 0 0 1 2\n";
        let (g, w) = parse_weighted_graph::<f64>(text).unwrap();
        assert_eq!(g.edge(EdgeId(1)).tail, VertexId(1));
        assert_eq!(*w.weight(EdgeId(1)), 1.5);
        let again = write_weighted_graph(&g, &w);
        assert_eq!(again, "vertices 2\nedge 0 0 1 2\nedge 1 1 0 1.5\n");
        let (g2, w2) = parse_weighted_graph::<f64>(&again).unwrap();
        assert_eq!(g2, g);
        assert_eq!(w2, w);
    }

    #[test]
    fn exact_weights_keep_fractions() {
        let (g, w) = parse_weighted_graph::<Rational>("vertices 1\nedge 0 0 0 1/3\nedge 1 0 0 0.1\n").unwrap();
        assert_eq!(w.vertex_weight(&g, VertexId(0)), Rational::new(13.into(), 30.into()));
        let text = write_weighted_graph(&g, &w);
        assert_eq!(parse_weighted_graph::<Rational>(&text).unwrap().1, w);
    }

    #[test]
    fn reports_malformed_input() {
        assert!(matches!(parse_weighted_graph::<f64>("edge 0 0 0 1"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_weighted_graph::<f64>("vertices 1\nedge 0 0 0 x").is_err());
        assert!(parse_weighted_graph::<f64>("vertices 1\nedge 1 0 0 1").is_err());
        assert!(parse_weighted_graph::<f64>("vertices 1\nedge 0 0 0 1\nedge 0 0 0 1").is_err());
        assert!(parse_weighted_graph::<f64>("vertices 2\nedge 0 0 1 1").is_err());
        assert!(parse_weighted_graph::<f64>("vertices 1\nedge 0 0 0 -1").is_err());
        assert!(parse_weighted_graph::<f64>("").is_err());
    }
}
