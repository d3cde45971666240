use crate::annealed::CrossingProfile;
use crate::graph::{DirectedGraph, EdgeId, VertexId};
use crate::scalar::{sum_in_order, Scalar};

use super::Trajectory;

/// The sample environment `p⁽ⁿ⁾` of a trajectory: at each departed vertex,
/// the fraction of departures that used each out-edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalEnvironment<S> {
    frequencies: Vec<Option<S>>,
    profile: CrossingProfile,
}

impl<S: Scalar> EmpiricalEnvironment<S> {
    /// `None` when the tail of `e` was never departed from.
    pub fn frequency(&self, e: EdgeId) -> Option<&S> {
        self.frequencies[e.0].as_ref()
    }

    pub fn is_defined(&self, v: VertexId) -> bool {
        self.profile.departures(v) > 0
    }

    pub fn departures(&self, v: VertexId) -> u64 {
        self.profile.departures(v)
    }

    pub fn profile(&self) -> &CrossingProfile {
        &self.profile
    }

    pub fn row_sum(&self, graph: &DirectedGraph, v: VertexId) -> Option<S> {
        self.is_defined(v)
            .then(|| sum_in_order(graph.out_edges(v).iter().filter_map(|&e| self.frequency(e))))
    }
}

pub fn empirical_environment<S: Scalar>(graph: &DirectedGraph, trajectory: &Trajectory) -> EmpiricalEnvironment<S> {
    let profile = CrossingProfile::from_path(graph, trajectory);
    let frequencies = graph
        .edges()
        .iter()
        .map(|e| {
            let n = profile.departures(e.tail);
            (n > 0).then(|| S::from_u64_count(profile.crossings(e.id)) / S::from_u64_count(n))
        })
        .collect();
    EmpiricalEnvironment { frequencies, profile }
}
