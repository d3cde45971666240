use rand::Rng;

use super::{Environment, Trajectory};
use crate::error::{Error, Result};
use crate::graph::lattice::Geometry;
use crate::graph::{DirectedGraph, EdgeId, Path, VertexId};
use crate::scalar::Scalar;
use crate::stopping::{Observation, StoppingReport, StoppingRule};

#[derive(Clone, Debug, PartialEq)]
pub struct WalkOutcome {
    pub trajectory: Trajectory,
    pub report: StoppingReport,
}

/// Drives a walk until `rule` fires, asking `choose` for the edge to take
/// from the current vertex at each step.
pub fn run_walk(
    graph: &DirectedGraph,
    start: VertexId,
    rule: &StoppingRule,
    geometry: Option<&dyn Geometry>,
    mut choose: impl FnMut(VertexId) -> EdgeId,
) -> Result<WalkOutcome> {
    if !graph.contains_vertex(start) {
        return Err(Error::UnknownVertex(start));
    }
    if rule.needs_geometry() && geometry.is_none() {
        return Err(Error::InvalidArgument("coordinate thresholds need a graph with geometry".into()));
    }
    let observe = |v: VertexId| Observation {
        vertex: Some(v),
        abscissa: geometry.map(|g| g.abscissa(v)),
        transverse_norm_sq: geometry.map(|g| g.transverse_norm_sq(v)),
    };
    let mut trajectory = Path::trivial(start);
    let mut step = 0;
    loop {
        if let Some(reason) = rule.check(step, observe(trajectory.end())) {
            return Ok(WalkOutcome { trajectory, report: StoppingReport { reason, step } });
        }
        let e = choose(trajectory.end());
        trajectory.push_step(e, graph.edge(e).head);
        step += 1;
    }
}

/// Picks an out-edge of `v` with probability proportional to `weight(e)`.
/// `u` is uniform on `[0, 1)`.
pub fn pick_edge(edges: &[EdgeId], u: f64, total: f64, weight: impl Fn(EdgeId) -> f64) -> EdgeId {
    let mut target = u * total;
    for &e in edges {
        let w = weight(e);
        if target < w {
            return e;
        }
        target -= w;
    }
    *edges.last().expect("vertices have out-edges")
}

/// Markov chain with transition probabilities `env`, started at `start`.
pub fn quenched_walk<S: Scalar, R: Rng + ?Sized>(
    graph: &DirectedGraph,
    env: &Environment<S>,
    start: VertexId,
    rule: &StoppingRule,
    geometry: Option<&dyn Geometry>,
    rng: &mut R,
) -> Result<WalkOutcome> {
    if env.len() != graph.edge_count() {
        return Err(Error::LengthMismatch { expected: graph.edge_count(), found: env.len() });
    }
    run_walk(graph, start, rule, geometry, |v| {
        pick_edge(graph.out_edges(v), rng.random(), 1.0, |e| env.prob(e).to_f64())
    })
}
