//! Environments: one probability vector over the out-edges of every vertex.

mod empirical;
mod sampling;
mod walk;

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, Path, VertexId};
use crate::scalar::{sum_in_order, Real, Scalar};

pub use empirical::{empirical_environment, EmpiricalEnvironment};
pub use sampling::{log_gamma_variate, sample_dirichlet, sample_environment, sample_environment_stream};
pub use walk::{pick_edge, quenched_walk, run_walk, WalkOutcome};

/// A walk trajectory is a path of the graph it ran on.
pub type Trajectory = Path;

/// Transition probabilities indexed by edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment<S> {
    probs: Vec<S>,
}

impl<S: Scalar> Environment<S> {
    /// Checks entries lie in `(0, 1]` and rows sum to 1 within `1e-12`.
    pub fn new(graph: &DirectedGraph, probs: Vec<S>) -> Result<Self> {
        Self::with_tolerance(graph, probs, 1e-12)
    }

    pub fn with_tolerance(graph: &DirectedGraph, probs: Vec<S>, eps: f64) -> Result<Self> {
        if probs.len() != graph.edge_count() {
            return Err(Error::LengthMismatch { expected: graph.edge_count(), found: probs.len() });
        }
        let tol = S::tolerance(eps);
        if let Some(i) = probs.iter().position(|p| *p <= S::zero() || *p > S::one() + tol.clone()) {
            return Err(Error::InvalidProbability { edge: EdgeId(i), value: probs[i].to_f64() });
        }
        let env = Environment { probs };
        env.check_rows(graph, eps)?;
        Ok(env)
    }

    /// No validation; for samplers whose output is stochastic by construction.
    pub(crate) fn from_raw(probs: Vec<S>) -> Self {
        Environment { probs }
    }

    pub fn check_rows(&self, graph: &DirectedGraph, eps: f64) -> Result<()> {
        let tol = S::tolerance(eps);
        for v in graph.vertices() {
            let sum = self.row_sum(graph, v);
            if (sum.clone() - S::one()).abs() > tol {
                return Err(Error::NotStochastic { vertex: v, sum: sum.to_f64() });
            }
        }
        Ok(())
    }

    pub fn row_sum(&self, graph: &DirectedGraph, v: VertexId) -> S {
        sum_in_order(graph.out_edges(v).iter().map(|e| &self.probs[e.0]))
    }

    pub fn prob(&self, e: EdgeId) -> &S {
        &self.probs[e.0]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `(edge, p_e)` over the out-edges of `v`.
    pub fn row<'a>(&'a self, graph: &'a DirectedGraph, v: VertexId) -> impl Iterator<Item = (EdgeId, &'a S)> + 'a {
        graph.out_edges(v).iter().map(move |&e| (e, &self.probs[e.0]))
    }

    /// Debug dump: `env <vertex> <edge-id> <probability>` with 17 significant digits.
    pub fn dump(&self, graph: &DirectedGraph) -> String {
        let mut out = String::new();
        for v in graph.vertices() {
            for (e, p) in self.row(graph, v) {
                writeln!(out, "env {v} {e} {:.16e}", p.to_f64()).unwrap();
            }
        }
        out
    }
}

impl Environment<f64> {
    /// Reads a dump produced by [`Environment::dump`].
    pub fn parse_dump(graph: &DirectedGraph, text: &str) -> Result<Self> {
        let mut probs: Vec<Option<f64>> = vec![None; graph.edge_count()];
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| Error::Parse { line: i + 1, message };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let ["env", v, e, p] = fields.as_slice() else {
                return Err(err(format!("unrecognized line {line:?}")));
            };
            let v: usize = v.parse().map_err(|_| err(format!("bad vertex {v:?}")))?;
            let e: usize = e.parse().map_err(|_| err(format!("bad edge {e:?}")))?;
            let p: f64 = p.parse().map_err(|_| err(format!("bad probability {p:?}")))?;
            if e >= graph.edge_count() || graph.edge(EdgeId(e)).tail != VertexId(v) {
                return Err(err(format!("edge {e} does not leave vertex {v}")));
            }
            probs[e] = Some(p);
        }
        let probs = probs
            .into_iter()
            .enumerate()
            .map(|(e, p)| p.ok_or(Error::Parse { line: 0, message: format!("edge {e} missing from dump") }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, probs)
    }
}

/// `p(γ)`: the product of transition probabilities along the path; 1 for
/// the empty path.
pub fn path_probability<S: Scalar>(env: &Environment<S>, path: &Path) -> Result<S> {
    path.edges().iter().try_fold(S::one(), |acc, &e| {
        env.probs.get(e.0).map(|p| acc * p.clone()).ok_or(Error::UnknownEdge(e))
    })
}

/// `ln p(γ)`, the representation that survives long paths.
pub fn log_path_probability<F: Real>(env: &Environment<F>, path: &Path) -> Result<F> {
    path.edges().iter().try_fold(F::zero(), |acc, &e| {
        env.probs.get(e.0).map(|p| acc + p.ln()).ok_or(Error::UnknownEdge(e))
    })
}

/// `exp(log_p)` when it is a normal `f64`, `None` when it would underflow.
pub fn linear_probability(log_p: f64) -> Option<f64> {
    (log_p >= f64::MIN_POSITIVE.ln()).then(|| log_p.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn two_cycle_with_loop() -> DirectedGraph {
        // a=0, b=1: a->b, a->a, b->a
        DirectedGraph::new(2, [(0, 1), (0, 0), (1, 0)]).unwrap()
    }

    #[test]
    fn validation() {
        let g = two_cycle_with_loop();
        assert!(Environment::new(&g, vec![0.3, 0.7, 1.0]).is_ok());
        assert!(matches!(Environment::new(&g, vec![0.3, 0.6, 1.0]), Err(Error::NotStochastic { .. })));
        assert!(matches!(Environment::new(&g, vec![0.0, 1.0, 1.0]), Err(Error::InvalidProbability { .. })));
        assert!(Environment::new(&g, vec![0.3, 0.7]).is_err());
    }

    #[test]
    fn path_probability_examples() {
        let g = two_cycle_with_loop();
        let env = Environment::new(&g, vec![0.3, 0.7, 1.0]).unwrap();
        assert_eq!(path_probability(&env, &Path::trivial(VertexId(0))).unwrap(), 1.0);
        let p = Path::parse_vertices(&g, "0,1,0,1").unwrap();
        assert!((path_probability::<f64>(&env, &p).unwrap() - 0.09).abs() < 1e-15);
        let lp = log_path_probability(&env, &p).unwrap();
        assert!((linear_probability(lp).unwrap() - 0.09).abs() < 1e-15);
        assert_eq!(linear_probability(-1e4), None);
    }

    #[test]
    fn exact_path_probability() {
        let g = two_cycle_with_loop();
        let q = |n: i64, d: i64| Rational::new(n.into(), d.into());
        let env = Environment::new(&g, vec![q(3, 10), q(7, 10), q(1, 1)]).unwrap();
        let p = Path::parse_vertices(&g, "0,1,0,1").unwrap();
        assert_eq!(path_probability(&env, &p).unwrap(), q(9, 100));
    }

    #[test]
    fn deterministic_graph_paths_have_probability_one() {
        let g = DirectedGraph::new(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let env = Environment::new(&g, vec![1.0; 3]).unwrap();
        let p = Path::parse_vertices(&g, "0,1,2,0,1,2").unwrap();
        assert_eq!(path_probability(&env, &p).unwrap(), 1.0);
    }

    #[test]
    fn dump_round_trip() {
        let g = two_cycle_with_loop();
        let env = Environment::new(&g, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        let text = env.dump(&g);
        assert_eq!(text.lines().next().unwrap(), "env 0 0 3.3333333333333331e-1");
        assert_eq!(Environment::parse_dump(&g, &text).unwrap(), env);
        assert!(Environment::parse_dump(&g, "env 1 0 0.5").is_err());
        assert!(Environment::parse_dump(&g, "env 0 0 0.5").is_err());
    }
}
