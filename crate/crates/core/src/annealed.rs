//! Annealed path laws under Dirichlet environments.
//!
//! Averaging `p(γ)` over `p ~ Dirichlet(α)` gives
//!
//! ```text
//! E[p(γ)] = Π_e α_e (α_e + 1) ⋯ (α_e + n_e - 1) / Π_x α_x (α_x + 1) ⋯ (α_x + n_x - 1)
//! ```
//!
//! where `n_e` counts crossings of `e` and `n_x` departures from `x`. The
//! same number is the probability that the oriented-edge linearly
//! reinforced walk with initial weights `α` traces `γ`; [`UrnState`] runs
//! that walk one step at a time.

use rand::Rng;

use crate::environment::{path_probability, run_walk, sample_environment, WalkOutcome};
use crate::error::{Error, Result};
use crate::graph::lattice::Geometry;
use crate::graph::{DirectedGraph, EdgeId, Path, VertexId, WeightAssignment};
use crate::parallel::Runner;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::stats::{Estimate, MeanAccumulator};
use crate::stopping::StoppingRule;

/// Crossing counts `n_e` and departure counts `n_x` of a path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingProfile {
    crossings: Vec<u64>,
    departures: Vec<u64>,
}

impl CrossingProfile {
    pub fn empty(graph: &DirectedGraph) -> Self {
        CrossingProfile { crossings: vec![0; graph.edge_count()], departures: vec![0; graph.vertex_count()] }
    }

    pub fn from_path(graph: &DirectedGraph, path: &Path) -> Self {
        let mut profile = Self::empty(graph);
        for &e in path.edges() {
            profile.record(graph, e);
        }
        profile
    }

    /// Counts one crossing of `e` and one departure from its tail.
    pub fn record(&mut self, graph: &DirectedGraph, e: EdgeId) {
        self.crossings[e.0] += 1;
        self.departures[graph.edge(e).tail.0] += 1;
    }

    pub fn crossings(&self, e: EdgeId) -> u64 {
        self.crossings[e.0]
    }

    pub fn departures(&self, v: VertexId) -> u64 {
        self.departures[v.0]
    }

    pub fn crossing_counts(&self) -> &[u64] {
        &self.crossings
    }

    pub fn departure_counts(&self) -> &[u64] {
        &self.departures
    }

    /// Path length.
    pub fn total(&self) -> u64 {
        self.crossings.iter().sum()
    }
}

/// `a (a + 1) ⋯ (a + n - 1)` by repeated multiplication.
pub fn rising_factorial<S: Scalar>(a: &S, n: u64) -> S {
    (0..n).fold(S::one(), |acc, k| acc * (a.clone() + S::from_u64_count(k)))
}

const DIRECT_RISING_LIMIT: u64 = 1000;

/// `ln(a (a + 1) ⋯ (a + n - 1))`: a compensated sum of logarithms up to
/// 1000 factors, `lgamma(a + n) - lgamma(a)` beyond.
pub fn log_rising_factorial(a: f64, n: u64) -> f64 {
    if n > DIRECT_RISING_LIMIT {
        return libm::lgamma(a + n as f64) - libm::lgamma(a);
    }
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for k in 0..n {
        let term = (a + k as f64).ln();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            carry += (sum - t) + term;
        } else {
            carry += (term - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `E^(α)[p(γ)]` in the arithmetic of `S`; exact for rationals.
pub fn annealed_probability<S: Scalar>(graph: &DirectedGraph, weights: &WeightAssignment<S>, path: &Path) -> S {
    let profile = CrossingProfile::from_path(graph, path);
    let mut numerator = S::one();
    for e in graph.edges() {
        numerator = numerator * rising_factorial(weights.weight(e.id), profile.crossings(e.id));
    }
    let mut denominator = S::one();
    for v in graph.vertices() {
        let n = profile.departures(v);
        if n > 0 {
            denominator = denominator * rising_factorial(&weights.vertex_weight(graph, v), n);
        }
    }
    numerator / denominator
}

/// `ln E^(α)[p(γ)]` through log rising factorials.
pub fn annealed_log_probability(graph: &DirectedGraph, weights: &WeightAssignment<f64>, path: &Path) -> f64 {
    let profile = CrossingProfile::from_path(graph, path);
    let mut log_p = 0.0;
    for e in graph.edges() {
        let n = profile.crossings(e.id);
        if n > 0 {
            log_p += log_rising_factorial(*weights.weight(e.id), n);
        }
    }
    for v in graph.vertices() {
        let n = profile.departures(v);
        if n > 0 {
            log_p -= log_rising_factorial(weights.vertex_weight(graph, v), n);
        }
    }
    log_p
}

/// `E^(α)[p(γ)]` in `f64`, computed in log space.
pub fn annealed_path_probability(graph: &DirectedGraph, weights: &WeightAssignment<f64>, path: &Path) -> f64 {
    annealed_log_probability(graph, weights, path).exp()
}

/// Oriented-edge linearly reinforced urn: from `x`, edge `e` is taken with
/// probability `(α_e + n_e) / (α_x + n_x)`.
#[derive(Clone, Debug)]
pub struct UrnState<'a, S> {
    graph: &'a DirectedGraph,
    weights: &'a WeightAssignment<S>,
    vertex_weights: Vec<S>,
    current: VertexId,
    profile: CrossingProfile,
}

impl<'a, S: Scalar> UrnState<'a, S> {
    pub fn new(graph: &'a DirectedGraph, weights: &'a WeightAssignment<S>, start: VertexId) -> Self {
        UrnState {
            graph,
            weights,
            vertex_weights: weights.vertex_weights(graph),
            current: start,
            profile: CrossingProfile::empty(graph),
        }
    }

    pub fn current(&self) -> VertexId {
        self.current
    }

    pub fn profile(&self) -> &CrossingProfile {
        &self.profile
    }

    /// Reinforced weight `α_e + n_e` of an edge.
    pub fn edge_weight(&self, e: EdgeId) -> S {
        self.weights.weight(e).clone() + S::from_u64_count(self.profile.crossings(e))
    }

    /// `α_x + n_x` at the current vertex.
    pub fn total_weight(&self) -> S {
        let x = self.current;
        self.vertex_weights[x.0].clone() + S::from_u64_count(self.profile.departures(x))
    }

    /// Probability that the next step uses `e`; zero if `e` does not leave
    /// the current vertex.
    pub fn step_probability(&self, e: EdgeId) -> S {
        if self.graph.edge(e).tail != self.current {
            return S::zero();
        }
        self.edge_weight(e) / self.total_weight()
    }

    pub fn advance(&mut self, e: EdgeId) {
        debug_assert_eq!(self.graph.edge(e).tail, self.current);
        self.profile.record(self.graph, e);
        self.current = self.graph.edge(e).head;
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> EdgeId {
        let out = self.graph.out_edges(self.current);
        crate::environment::pick_edge(out, rng.random(), self.total_weight().to_f64(), |e| self.edge_weight(e).to_f64())
    }
}

/// Probability that the reinforced walk started at `γ_0` traces `γ`, as the
/// product of its step probabilities.
pub fn urn_path_probability<S: Scalar>(graph: &DirectedGraph, weights: &WeightAssignment<S>, path: &Path) -> S {
    let mut urn = UrnState::new(graph, weights, path.start());
    let mut p = S::one();
    for &e in path.edges() {
        p = p * urn.step_probability(e);
        urn.advance(e);
    }
    p
}

/// Samples the reinforced walk (equivalently, the annealed walk).
pub fn reinforced_walk<S: Scalar, R: Rng + ?Sized>(
    graph: &DirectedGraph,
    weights: &WeightAssignment<S>,
    start: VertexId,
    rule: &StoppingRule,
    geometry: Option<&dyn Geometry>,
    rng: &mut R,
) -> Result<WalkOutcome> {
    let mut urn = UrnState::new(graph, weights, start);
    run_walk(graph, start, rule, geometry, |_| {
        let e = urn.sample_step(rng);
        urn.advance(e);
        e
    })
}

/// Monte Carlo estimate of `E^(α)[p(γ)]` from `replicas` independent
/// environments; replica `i` uses stream `(seed, i)`.
pub fn annealed_path_probability_mc(
    graph: &DirectedGraph,
    weights: &WeightAssignment<f64>,
    path: &Path,
    replicas: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Estimate> {
    if replicas < 100 {
        return Err(Error::InvalidArgument(format!("at least 100 replicas are required, got {replicas}")));
    }
    let acc = runner.map_reduce(replicas, MeanAccumulator::new, |acc, i| {
        let env = sample_environment(graph, weights, &mut RngStream::new(seed, i).rng());
        acc.push(path_probability(&env, path).expect("path belongs to the graph"));
    });
    Ok(acc.estimate())
}

/// Fraction of `replicas` reinforced walks from `γ_0` whose first `|γ|`
/// steps are exactly `γ`. Each walk stops at its first deviation.
pub fn urn_trace_frequency(
    graph: &DirectedGraph,
    weights: &WeightAssignment<f64>,
    path: &Path,
    replicas: u64,
    seed: u64,
    runner: &Runner,
) -> Estimate {
    let acc = runner.map_reduce(replicas, MeanAccumulator::new, |acc, i| {
        let mut rng = RngStream::new(seed, i).with_domain(crate::rng::domain::WALK).rng();
        let mut urn = UrnState::new(graph, weights, path.start());
        let traced = path.edges().iter().all(|&expected| {
            let e = urn.sample_step(&mut rng);
            urn.advance(e);
            e == expected
        });
        acc.push(f64::from(u8::from(traced)));
    });
    acc.estimate()
}

/// Every path of length `≤ max_len` starting at `root`, shortest first,
/// in edge-id order within a length.
pub fn enumerate_paths(graph: &DirectedGraph, root: VertexId, max_len: usize, guard: usize) -> Result<Vec<Path>> {
    if !graph.contains_vertex(root) {
        return Err(Error::UnknownVertex(root));
    }
    let mut all = vec![Path::trivial(root)];
    let mut frontier = 0;
    for _ in 0..max_len {
        let end = all.len();
        for i in frontier..end {
            for &e in graph.out_edges(all[i].end()) {
                if all.len() >= guard {
                    return Err(Error::TooManyPaths(guard));
                }
                let mut next = all[i].clone();
                next.push_step(e, graph.edge(e).head);
                all.push(next);
            }
        }
        frontier = end;
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::lattice::{build_torus, LatticeSpec, Torus};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn line() -> Torus<f64> {
        build_torus(&LatticeSpec::new(vec![2.0, 1.0]).unwrap(), &[4]).unwrap()
    }

    fn exact_line() -> Torus<Rational> {
        build_torus(&LatticeSpec::new(vec![q(2, 1), q(1, 1)]).unwrap(), &[4]).unwrap()
    }

    #[test]
    fn crossing_profile_of_back_and_forth() {
        let t = line();
        let p = t.parse_path(VertexId(0), "0,1,0,1").unwrap();
        let prof = CrossingProfile::from_path(&t.graph, &p);
        assert_eq!(prof.crossings(t.edge(VertexId(0), "+1".parse().unwrap())), 2);
        assert_eq!(prof.crossings(t.edge(VertexId(1), "-1".parse().unwrap())), 1);
        assert_eq!(prof.departures(VertexId(0)), 2);
        assert_eq!(prof.departures(VertexId(1)), 1);
        assert_eq!(prof.total(), 3);
        let empty = CrossingProfile::from_path(&t.graph, &Path::trivial(VertexId(2)));
        assert!(empty.crossing_counts().iter().chain(empty.departure_counts()).all(|&n| n == 0));
    }

    #[test]
    fn cycle_profiles_match_their_reversal() {
        let t = build_torus(&LatticeSpec::new(vec![2.0, 1.0, 1.0, 1.0]).unwrap(), &[3, 3]).unwrap();
        let sigma = t.parse_path(VertexId(0), "+1,+2,-1,+1,+1,-2,+1").unwrap();
        assert!(sigma.is_cycle());
        let rev = t.graph.reversed();
        let a = CrossingProfile::from_path(&t.graph, &sigma);
        let b = CrossingProfile::from_path(&rev, &sigma.reversed());
        assert_eq!(a, b);
    }

    #[test]
    fn rising_factorials() {
        assert_eq!(rising_factorial(&q(2, 1), 3), q(24, 1));
        assert_eq!(rising_factorial(&q(1, 2), 2), q(3, 4));
        assert_eq!(rising_factorial(&q(5, 1), 0), q(1, 1));
        assert!((log_rising_factorial(2.0, 3) - 24f64.ln()).abs() < 1e-15);
        // Both branches agree around the switch-over.
        let direct: f64 = (0..1000).map(|k| (0.3 + k as f64).ln()).sum();
        assert!((log_rising_factorial(0.3, 1000) - direct).abs() < 1e-9);
        let via_lgamma = libm::lgamma(0.3 + 1001.0) - libm::lgamma(0.3);
        assert!((log_rising_factorial(0.3, 1001) - via_lgamma).abs() < 1e-12);
        assert!((log_rising_factorial(0.3, 1001) - (direct + 1000.3f64.ln())).abs() < 1e-8);
    }

    #[test]
    fn single_step_is_beta_mean() {
        let t = line();
        let p = t.parse_path(VertexId(0), "+1").unwrap();
        assert!((annealed_path_probability(&t.graph, &t.weights, &p) - 2.0 / 3.0).abs() < 1e-15);
        let e = exact_line();
        assert_eq!(annealed_probability(&e.graph, &e.weights, &e.parse_path(VertexId(0), "+1").unwrap()), q(2, 3));
    }

    #[test]
    fn back_and_forth_is_one_sixth() {
        let e = exact_line();
        let p = e.parse_path(VertexId(0), "0,1,0,1").unwrap();
        assert_eq!(annealed_probability(&e.graph, &e.weights, &p), q(1, 6));
        assert_eq!(urn_path_probability(&e.graph, &e.weights, &p), q(1, 6));
        // The annealed law does not factorize over steps.
        assert_ne!(q(1, 6), q(2, 3) * q(2, 3) * q(1, 3));
        let t = line();
        let p = t.parse_path(VertexId(0), "0,1,0,1").unwrap();
        assert!((annealed_path_probability(&t.graph, &t.weights, &p) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn urn_step_probabilities() {
        let e = exact_line();
        let mut urn = UrnState::new(&e.graph, &e.weights, VertexId(0));
        let right0 = e.edge(VertexId(0), "+1".parse().unwrap());
        let left1 = e.edge(VertexId(1), "-1".parse().unwrap());
        assert_eq!(urn.step_probability(right0), q(2, 3));
        assert_eq!(urn.step_probability(left1), q(0, 1));
        urn.advance(right0);
        assert_eq!(urn.step_probability(left1), q(1, 3));
        urn.advance(left1);
        assert_eq!(urn.step_probability(right0), q(3, 4));
    }

    #[test]
    fn deterministic_graph_has_annealed_probability_one() {
        let g = DirectedGraph::new(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let w = WeightAssignment::new(&g, vec![0.5, 2.0, 7.0]).unwrap();
        let p = Path::parse_vertices(&g, "0,1,2,0,1,2,0").unwrap();
        assert!((annealed_path_probability(&g, &w, &p) - 1.0).abs() < 1e-15);
        let est = annealed_path_probability_mc(&g, &w, &p, 100, 1, &Runner::sequential()).unwrap();
        assert_eq!((est.mean, est.se), (1.0, 0.0));
    }

    #[test]
    fn mc_requires_enough_replicas() {
        let t = line();
        let p = Path::trivial(VertexId(0));
        assert!(annealed_path_probability_mc(&t.graph, &t.weights, &p, 99, 1, &Runner::sequential()).is_err());
    }

    #[test]
    fn exact_urn_identity_on_all_short_paths() {
        for (weights, periods) in [(vec![2, 1], vec![4]), (vec![2, 1, 1, 1], vec![3, 3])] {
            let lattice = LatticeSpec::new(weights.iter().map(|&w| q(w, 1)).collect()).unwrap();
            let t = build_torus(&lattice, &periods).unwrap();
            let float = t.weights.map(|w| w.to_f64());
            for p in enumerate_paths(&t.graph, VertexId(0), 6, 10_000).unwrap() {
                let exact = annealed_probability(&t.graph, &t.weights, &p);
                assert_eq!(exact, urn_path_probability(&t.graph, &t.weights, &p));
                let f = annealed_path_probability(&t.graph, &float, &p);
                assert!((f - exact.to_f64()).abs() <= 1e-12 * f);
            }
        }
    }

    #[test]
    fn urn_trace_frequency_small_run() {
        let t = line();
        let p = t.parse_path(VertexId(0), "0,1").unwrap();
        let est = urn_trace_frequency(&t.graph, &t.weights, &p, 20_000, 4, &Runner::new(0));
        assert!(est.z_score(2.0 / 3.0).abs() < 4.0, "{est:?}");
        let trivial = urn_trace_frequency(&t.graph, &t.weights, &Path::trivial(VertexId(2)), 10, 4, &Runner::sequential());
        assert_eq!(trivial.mean, 1.0);
    }

    #[test]
    fn enumeration_counts_and_guard() {
        let t = line();
        let paths = enumerate_paths(&t.graph, VertexId(0), 3, 100).unwrap();
        assert_eq!(paths.len(), 1 + 2 + 4 + 8);
        assert!(paths.windows(2).all(|w| w[0].len() <= w[1].len()));
        assert!(matches!(enumerate_paths(&t.graph, VertexId(0), 3, 10), Err(Error::TooManyPaths(10))));
    }

    #[test]
    fn reinforced_first_step_is_uniform_for_equal_weights() {
        let t = build_torus(&LatticeSpec::new(vec![1.0; 4]).unwrap(), &[3, 3]).unwrap();
        let mut counts = [0u64; 4];
        let n = 40_000;
        for i in 0..n {
            let mut rng = RngStream::new(4, i).rng();
            let out = reinforced_walk(&t.graph, &t.weights, VertexId(0), &StoppingRule::steps(1), None, &mut rng).unwrap();
            counts[t.direction(out.trajectory.edges()[0]).index()] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            let se = (0.25 * 0.75 / n as f64).sqrt();
            assert!((f - 0.25).abs() < 4.0 * se, "{counts:?}");
        }
    }
}
