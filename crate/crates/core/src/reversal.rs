//! Time reversal of environments.
//!
//! For an environment `p` with stationary law `π`, the reversed environment
//! on the reversed graph is `p̌_ě = π_tail(e) / π_head(e) · p_e`. When the
//! weights have zero divergence, `p̌` is again Dirichlet with the reversed
//! weights; [`verify_reversal_distribution`] checks this through annealed
//! path functionals.

use std::fmt::Write;

use rand::Rng;
use serde::Serialize;

use crate::annealed::{annealed_path_probability, annealed_probability, enumerate_paths};
use crate::environment::{path_probability, sample_environment, Environment};
use crate::error::{Error, Result};
use crate::graph::{divergence_violations, DirectedGraph, EdgeId, Path, VertexId, WeightAssignment};
use crate::parallel::Runner;
use crate::rng::RngStream;
use crate::scalar::{relative_difference, sum_in_order, Scalar};
use crate::stats::{z_score, MeanAccumulator};

/// Above this many vertices the stationary law is found by power iteration.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;

/// Maximum number of enumerated paths in [`verify_reversal_distribution`].
pub const PATH_GUARD: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution<S> {
    pi: Vec<S>,
}

impl<S: Scalar> StationaryDistribution<S> {
    pub fn get(&self, v: VertexId) -> &S {
        &self.pi[v.0]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.pi
    }

    /// `sup_y |(πP)_y - π_y|`.
    pub fn residual(&self, graph: &DirectedGraph, env: &Environment<S>) -> f64 {
        apply_transition(graph, env, &self.pi)
            .iter()
            .zip(&self.pi)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max)
    }
}

fn apply_transition<S: Scalar>(graph: &DirectedGraph, env: &Environment<S>, mu: &[S]) -> Vec<S> {
    let mut next = vec![S::zero(); graph.vertex_count()];
    for e in graph.edges() {
        next[e.head.0] = next[e.head.0].clone() + mu[e.tail.0].clone() * env.prob(e.id).clone();
    }
    next
}

/// The unique invariant probability of the chain driven by `env`.
///
/// Solves `π (P - I) = 0, Σ π = 1` directly up to [`DIRECT_SOLVE_LIMIT`]
/// vertices; floating types fall back to power iteration on the lazy chain
/// when the solve is inaccurate.
pub fn stationary_distribution<S: Scalar>(graph: &DirectedGraph, env: &Environment<S>) -> Result<StationaryDistribution<S>> {
    if !graph.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    if graph.vertex_count() <= DIRECT_SOLVE_LIMIT {
        if let Some(pi) = direct_solve(graph, env) {
            let candidate = StationaryDistribution { pi };
            if acceptable(graph, env, &candidate) {
                return Ok(candidate);
            }
        }
        if S::EXACT {
            return Err(Error::Stationary("singular system".into()));
        }
        log::debug!("direct stationary solve inaccurate, falling back to power iteration");
    }
    power_iteration(graph, env)
}

fn acceptable<S: Scalar>(graph: &DirectedGraph, env: &Environment<S>, candidate: &StationaryDistribution<S>) -> bool {
    let positive = candidate.pi.iter().all(|p| *p > S::zero());
    let total = sum_in_order(candidate.pi.iter());
    positive
        && (total - S::one()).abs() <= S::tolerance(1e-12)
        && candidate.residual(graph, env) <= S::tolerance(1e-10).to_f64()
}

fn direct_solve<S: Scalar>(graph: &DirectedGraph, env: &Environment<S>) -> Option<Vec<S>> {
    let n = graph.vertex_count();
    // Row y: Σ_x π_x (P_xy - δ_xy) = 0; the last row is replaced by Σ π = 1.
    let mut a = vec![vec![S::zero(); n + 1]; n];
    for e in graph.edges() {
        let (x, y) = (e.tail.0, e.head.0);
        a[y][x] = a[y][x].clone() + env.prob(e.id).clone();
    }
    for (y, row) in a.iter_mut().enumerate() {
        row[y] = row[y].clone() - S::one();
    }
    a[n - 1] = vec![S::one(); n + 1];

    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        a.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for row in lower.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / pivot_row[col].clone();
            for k in col..=n {
                row[k] = row[k].clone() - factor.clone() * pivot_row[k].clone();
            }
        }
    }
    let mut pi = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = a[row][n].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * pi[k].clone();
        }
        pi[row] = acc / a[row][row].clone();
    }
    Some(pi)
}

fn power_iteration<S: Scalar>(graph: &DirectedGraph, env: &Environment<S>) -> Result<StationaryDistribution<S>> {
    const MAX_ITERATIONS: usize = 10_000_000;
    let n = graph.vertex_count();
    let half = S::one() / (S::one() + S::one());
    let mut mu = vec![S::one() / S::from_usize(n).expect("vertex count"); n];
    for _ in 0..MAX_ITERATIONS {
        // Lazy chain (P + I) / 2: same invariant law, aperiodic.
        let moved = apply_transition(graph, env, &mu);
        let next: Vec<S> = moved.iter().zip(&mu).map(|(a, b)| half.clone() * (a.clone() + b.clone())).collect();
        let change = next.iter().zip(&mu).map(|(a, b)| (a.clone() - b.clone()).abs().to_f64()).fold(0.0, f64::max);
        mu = next;
        if change <= 1e-13 {
            let total = sum_in_order(mu.iter());
            let pi = mu.into_iter().map(|p| p / total.clone()).collect();
            return Ok(StationaryDistribution { pi });
        }
    }
    Err(Error::Stationary(format!("power iteration did not converge in {MAX_ITERATIONS} iterations")))
}

/// `p̌` on the reversed graph (same edge ids). Its rows sum to one exactly
/// when `π` is stationary, which is checked to `1e-9`.
pub fn reverse_environment<S: Scalar>(
    graph: &DirectedGraph,
    env: &Environment<S>,
    pi: &StationaryDistribution<S>,
) -> Result<Environment<S>> {
    let probs = graph
        .edges()
        .iter()
        .map(|e| pi.get(e.tail).clone() / pi.get(e.head).clone() * env.prob(e.id).clone())
        .collect();
    let reversed = Environment::from_raw(probs);
    reversed.check_rows(&graph.reversed(), 1e-9).map_err(|err| match err {
        Error::NotStochastic { vertex, sum } => {
            Error::ReversalIdentity(format!("π is not stationary: reversed row at {vertex} sums to {sum}"))
        }
        other => other,
    })?;
    Ok(reversed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathRatio<S> {
    /// `p̌(γ̌)` evaluated on the reversed environment.
    pub reversed: S,
    /// `(π_x / π_y) p(γ)`.
    pub predicted: S,
}

/// Evaluates `p̌(γ̌)` and checks it against `(π_x / π_y) p(γ)` to `1e-10`
/// relative (exactly for rationals).
pub fn reversed_path_ratio<S: Scalar>(
    graph: &DirectedGraph,
    env: &Environment<S>,
    pi: &StationaryDistribution<S>,
    path: &Path,
) -> Result<PathRatio<S>> {
    let reversed_env = reverse_environment(graph, env, pi)?;
    let reversed = path_probability(&reversed_env, &path.reversed())?;
    let predicted = pi.get(path.start()).clone() / pi.get(path.end()).clone() * path_probability(env, path)?;
    let diff = relative_difference(&reversed, &predicted);
    if diff > S::tolerance(1e-10).to_f64() {
        return Err(Error::ReversalIdentity(format!(
            "p̌(γ̌) = {reversed} but (π_x/π_y) p(γ) = {predicted} (relative difference {diff:e})"
        )));
    }
    Ok(PathRatio { reversed, predicted })
}

/// Both sides of `E^(α)[p(σ)] = E^(α̌)[p(σ̌)]` for a cycle `σ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReversal<S> {
    pub forward: S,
    pub reversed: S,
    pub relative_difference: f64,
}

impl<S: Scalar> CycleReversal<S> {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.relative_difference <= tolerance
    }
}

/// Computes both sides without checking the divergence hypothesis.
pub fn cycle_reversal_sides<S: Scalar>(
    graph: &DirectedGraph,
    weights: &WeightAssignment<S>,
    cycle: &Path,
) -> Result<CycleReversal<S>> {
    if !cycle.is_cycle() {
        return Err(Error::NotACycle { start: cycle.start(), end: cycle.end() });
    }
    let forward = annealed_probability(graph, weights, cycle);
    let reversed = annealed_probability(&graph.reversed(), &weights.reversed(), &cycle.reversed());
    let relative_difference = relative_difference(&forward, &reversed);
    Ok(CycleReversal { forward, reversed, relative_difference })
}

/// [`cycle_reversal_sides`] after checking that `α` has zero divergence.
pub fn check_cycle_reversal<S: Scalar>(
    graph: &DirectedGraph,
    weights: &WeightAssignment<S>,
    cycle: &Path,
) -> Result<CycleReversal<S>> {
    let bad = divergence_violations(graph, weights, 1e-12);
    if !bad.is_empty() {
        return Err(Error::NonZeroDivergence(bad));
    }
    cycle_reversal_sides(graph, weights, cycle)
}

/// `count` random cycles of length `1..=max_len`: a uniform random length,
/// then a uniformly random walk of that length from a uniform vertex,
/// kept when it closes.
pub fn random_cycles(graph: &DirectedGraph, count: usize, max_len: usize, stream: RngStream) -> Result<Vec<Path>> {
    const ATTEMPTS_PER_CYCLE: usize = 100_000;
    if max_len == 0 {
        return Err(Error::InvalidArgument("cycle length cap must be positive".into()));
    }
    let mut rng = stream.rng();
    let mut cycles = Vec::with_capacity(count);
    let mut attempts = 0;
    while cycles.len() < count {
        attempts += 1;
        if attempts > ATTEMPTS_PER_CYCLE * count.max(1) {
            return Err(Error::InvalidArgument(format!("no cycles of length ≤ {max_len} found")));
        }
        let len = rng.random_range(1..=max_len);
        let start = VertexId(rng.random_range(0..graph.vertex_count()));
        let mut path = Path::trivial(start);
        for _ in 0..len {
            let out = graph.out_edges(path.end());
            let e = out[rng.random_range(0..out.len())];
            path.push_step(e, graph.edge(e).head);
        }
        if path.is_cycle() {
            cycles.push(path);
        }
    }
    Ok(cycles)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathCheck {
    #[serde(skip)]
    pub path: Path,
    pub literal: String,
    pub exact: f64,
    pub mc: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReversalReport {
    pub paths: Vec<PathCheck>,
    pub replicas: u64,
    pub seed: u64,
    pub outliers: usize,
    pub max_abs_z: f64,
    pub passed: bool,
}

impl ReversalReport {
    fn new(paths: Vec<PathCheck>, replicas: u64, seed: u64) -> Self {
        let outliers = paths.iter().filter(|p| p.z.abs() > 3.0).count();
        let max_abs_z = paths.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
        let passed = multiple_testing_passes(paths.len(), outliers, max_abs_z);
        ReversalReport { paths, replicas, seed, outliers, max_abs_z, passed }
    }

    /// Renames every path with `literal`.
    pub fn relabel(&mut self, literal: impl Fn(&Path) -> String) {
        for p in &mut self.paths {
            p.literal = literal(&p.path);
        }
    }

    /// `path <literal> exact <v> mc <v> se <v> z <v>` per path, then a summary line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.paths {
            writeln!(out, "path {} exact {:.12e} mc {:.12e} se {:.6e} z {:.4}", p.literal, p.exact, p.mc, p.se, p.z).unwrap();
        }
        writeln!(
            out,
            "summary paths {} replicas {} seed {} outliers {} max_abs_z {:.4} passed {}",
            self.paths.len(),
            self.replicas,
            self.seed,
            self.outliers,
            self.max_abs_z,
            self.passed
        )
        .unwrap();
        out
    }
}

/// Fails when more than `max(1, 0.01 m)` of `m` tests exceed `|z| = 3`, or
/// any exceeds `|z| = 6`.
pub fn multiple_testing_passes(tests: usize, outliers: usize, max_abs_z: f64) -> bool {
    let allowed = (0.01 * tests as f64).max(1.0);
    outliers as f64 <= allowed && max_abs_z <= 6.0
}

/// Compares `E^(α)[p̌(γ̌)]` (Monte Carlo over `p ~ Dirichlet(α)`) with the
/// exact `E^(α̌)[p(γ̌)]` for every path `γ̌` of the reversed graph of length
/// `≤ max_len` starting at `root`.
pub fn verify_reversal_distribution(
    graph: &DirectedGraph,
    weights: &WeightAssignment<f64>,
    root: VertexId,
    max_len: usize,
    replicas: u64,
    seed: u64,
    runner: &Runner,
) -> Result<ReversalReport> {
    let bad = divergence_violations(graph, weights, 1e-12);
    if !bad.is_empty() {
        return Err(Error::NonZeroDivergence(bad));
    }
    if !graph.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let reversed_graph = graph.reversed();
    let reversed_weights = weights.reversed();
    let paths = enumerate_paths(&reversed_graph, root, max_len, PATH_GUARD)?;
    let exact: Vec<f64> = paths
        .iter()
        .map(|p| annealed_path_probability(&reversed_graph, &reversed_weights, p))
        .collect();

    let acc = runner.map_reduce(
        replicas,
        || vec![MeanAccumulator::new(); paths.len()],
        |acc, i| {
            let env = sample_environment(graph, weights, &mut RngStream::new(seed, i).rng());
            let pi = stationary_distribution(graph, &env).expect("strongly connected");
            let reversed = reverse_environment(graph, &env, &pi).expect("stationary");
            for (a, p) in acc.iter_mut().zip(&paths) {
                a.push(path_probability(&reversed, p).expect("path of the reversed graph"));
            }
        },
    );
    let checks = paths
        .into_iter()
        .zip(exact)
        .zip(acc)
        .map(|((path, exact), a)| PathCheck {
            literal: path.vertex_literal(),
            path,
            exact,
            mc: a.mean(),
            se: a.standard_error(),
            z: z_score(a.mean() - exact, a.standard_error()),
        })
        .collect();
    Ok(ReversalReport::new(checks, replicas, seed))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentCheck {
    pub edge: EdgeId,
    pub expected: f64,
    pub mean: f64,
    pub se: f64,
    pub z: f64,
}

/// Secondary check: `E[p̌_ě]` against the Dirichlet mean `α̌_ě / α̌_x`.
pub fn reversed_moments(
    graph: &DirectedGraph,
    weights: &WeightAssignment<f64>,
    replicas: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Vec<MomentCheck>> {
    if !graph.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let reversed_graph = graph.reversed();
    let acc = runner.map_reduce(
        replicas,
        || vec![MeanAccumulator::new(); graph.edge_count()],
        |acc, i| {
            let env = sample_environment(graph, weights, &mut RngStream::new(seed, i).rng());
            let pi = stationary_distribution(graph, &env).expect("strongly connected");
            let reversed = reverse_environment(graph, &env, &pi).expect("stationary");
            for (a, p) in acc.iter_mut().zip(reversed.as_slice()) {
                a.push(*p);
            }
        },
    );
    Ok(reversed_graph
        .edges()
        .iter()
        .zip(acc)
        .map(|(e, a)| {
            let expected = weights.weight(e.id) / weights.reversed().vertex_weight(&reversed_graph, e.tail);
            MomentCheck { edge: e.id, expected, mean: a.mean(), se: a.standard_error(), z: z_score(a.mean() - expected, a.standard_error()) }
        })
        .collect())
}
