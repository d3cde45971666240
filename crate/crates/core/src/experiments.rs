//! Monte Carlo experiments on cylinders and on `Z^d`.
//!
//! Every experiment is annealed: replica `i` samples its own environment
//! from stream `(seed, i)` and runs one quenched walk in it. Walks that hit
//! the step cap before their event is decided count as failures in the
//! estimate and are reported separately.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::environment::{pick_edge, sample_dirichlet, sample_environment};
use crate::error::{Error, Result};
use crate::graph::lattice::{build_cylinder_graph, CylinderSpec, Direction, LatticeSpec};
use crate::parallel::Runner;
use crate::rng::{domain, hash_coordinates, RngStream, StreamRng};
use crate::scalar::Scalar;
use crate::stats::MeanAccumulator;
use crate::stopping::{Observation, StopReason, StoppingReport, StoppingRule};

pub use crate::stopping;

/// One line of experiment output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub params: Map<String, Value>,
    pub estimate: f64,
    pub se: f64,
    pub replicas: u64,
    pub truncated: u64,
    pub undecided: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl ExperimentResult {
    fn new(experiment: &str, params: Value, acc: &MeanAccumulator, truncated: u64, undecided: u64, seed: u64) -> Self {
        let Value::Object(params) = params else { unreachable!("params are built as objects") };
        ExperimentResult {
            experiment: experiment.to_string(),
            params,
            estimate: acc.mean(),
            se: acc.standard_error(),
            replicas: acc.count(),
            truncated,
            undecided,
            seed,
            wall_time_s: None,
        }
    }

    pub fn z_score(&self, target: f64) -> f64 {
        crate::stats::z_score(self.estimate - target, self.se)
    }
}

/// `1 - b1 / a1`.
pub fn exit_bound(lattice: &LatticeSpec<f64>) -> f64 {
    1.0 - lattice.backward(0) / lattice.forward(0)
}

fn check_drift(lattice: &LatticeSpec<f64>) -> Result<()> {
    let (a, b) = (*lattice.forward(0), *lattice.backward(0));
    if a <= b {
        return Err(Error::NotDrifting { alpha: a, beta: b });
    }
    Ok(())
}

fn check_steps(max_steps: u64) -> Result<()> {
    if max_steps == 0 {
        return Err(Error::InvalidArgument("step cap must be at least 1".into()));
    }
    Ok(())
}

type Tally = (MeanAccumulator, u64, u64);

fn tally() -> Tally {
    (MeanAccumulator::new(), 0, 0)
}

/// Estimates `E[P_δ(X_{H_δ - 1} ∈ R)]` on `G_{L,N}`: walk from `δ` until
/// its first return and record whether the last vertex before it lies on
/// the right end. The exact value is `1 - b1/a1` for every `N` and `L`.
pub fn cylinder_delta_exit(
    spec: &CylinderSpec<f64>,
    replicas: u64,
    max_steps: u64,
    seed: u64,
    runner: &Runner,
) -> Result<ExperimentResult> {
    check_steps(max_steps)?;
    let cylinder = build_cylinder_graph(spec)?;
    let graph = &cylinder.graph;
    let delta = cylinder.delta();
    let rule = StoppingRule::steps(max_steps).until_hit(delta);
    let (acc, truncated, _) = runner.map_reduce(replicas, tally, |(acc, truncated, _), i| {
        let stream = RngStream::new(seed, i);
        let env = sample_environment(graph, &cylinder.weights, &mut stream.with_domain(domain::ENVIRONMENT).rng());
        let mut rng = stream.with_domain(domain::WALK).rng();
        let (mut previous, mut current) = (delta, delta);
        let mut step = 0;
        let reason = loop {
            let at = Observation { vertex: Some(current), abscissa: None, transverse_norm_sq: None };
            if let Some(reason) = rule.check(step, at) {
                break reason;
            }
            let e = pick_edge(graph.out_edges(current), rng.random(), 1.0, |e| *env.prob(e));
            previous = current;
            current = graph.edge(e).head;
            step += 1;
        };
        let success = reason == StopReason::Target && cylinder.is_right(previous);
        acc.push(f64::from(u8::from(success)));
        *truncated += u64::from(reason == StopReason::StepCap);
    });
    let params = json!({
        "alpha": spec.lattice.to_string(),
        "d": spec.lattice.dimension(),
        "N": spec.n,
        "L": spec.length,
        "steps": max_steps,
        "exact": exit_bound(&spec.lattice),
    });
    Ok(ExperimentResult::new("cylinder-delta", params, &acc, truncated, truncated, seed))
}

/// Estimates `E[P_o(T_L < T̃_{-1})]` on the cylinder `Z × (Z_N)^{d-1}` with
/// weights `α`. Only the window `{0..L-1} × (Z_N)^{d-1}` carries an
/// environment; arrival at abscissa `-1` or `L` ends the walk.
pub fn cylinder_exit_from_origin(
    spec: &CylinderSpec<f64>,
    replicas: u64,
    max_steps: u64,
    seed: u64,
    runner: &Runner,
) -> Result<ExperimentResult> {
    check_steps(max_steps)?;
    check_drift(&spec.lattice)?;
    let d = spec.lattice.dimension();
    let transverse = spec.transverse();
    let width = transverse.size();
    let length = spec.length;
    let alphas = spec.lattice.as_slice();
    let rule = StoppingRule::steps(max_steps).right_at(length as i64).until_backtrack();
    let (acc, truncated, _) = runner.map_reduce(replicas, tally, |(acc, truncated, _), i| {
        let stream = RngStream::new(seed, i);
        let mut env_rng = stream.with_domain(domain::ENVIRONMENT).rng();
        let mut probs = vec![0.0; length * width * 2 * d];
        for row in probs.chunks_exact_mut(2 * d) {
            sample_dirichlet(alphas, &mut env_rng, row);
        }
        let mut rng = stream.with_domain(domain::WALK).rng();
        let (mut x, mut t) = (0i64, 0usize);
        let mut step = 0;
        let reason = loop {
            let at = Observation { vertex: None, abscissa: Some(x), transverse_norm_sq: None };
            if let Some(reason) = rule.check(step, at) {
                break reason;
            }
            let row = &probs[(x as usize * width + t) * 2 * d..][..2 * d];
            let dir = Direction::from_index(sample_index(row, rng.random()));
            if dir.axis == 0 {
                x += dir.sign();
            } else {
                t = transverse.shift(t, dir.axis - 1, dir.sign());
            }
            step += 1;
        };
        acc.push(f64::from(u8::from(reason == StopReason::Right)));
        *truncated += u64::from(reason == StopReason::StepCap);
    });
    let params = json!({
        "alpha": spec.lattice.to_string(),
        "d": d,
        "N": spec.n,
        "L": length,
        "steps": max_steps,
        "bound": exit_bound(&spec.lattice),
    });
    Ok(ExperimentResult::new("cylinder-exit", params, &acc, truncated, truncated, seed))
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut target = u;
    for (i, &p) in probs.iter().enumerate() {
        if target < p {
            return i;
        }
        target -= p;
    }
    probs.len() - 1
}

/// `P^(p)_0(T_L < T̃_{-1})` for a walk on `{-1, ..., L}` stepping right from
/// `x` with probability `right[x]`:
/// `1 / Σ_{k=0}^{L} Π_{j<k} (1 - right[j]) / right[j]`.
pub fn ruin_probability(right: &[f64]) -> f64 {
    let mut log_products = Vec::with_capacity(right.len() + 1);
    let mut log_prod = 0.0;
    log_products.push(0.0);
    for &p in right {
        log_prod += (1.0 - p).ln() - p.ln();
        log_products.push(log_prod);
    }
    let max = log_products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = max + log_products.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    (-log_sum).exp()
}

/// Averages [`ruin_probability`] over `Beta(a1, b1)` environments on
/// `{0, ..., L-1}`: the `d = 1` value of `E[P_o(T_L < T̃_{-1})]`.
pub fn averaged_ruin_probability(
    lattice: &LatticeSpec<f64>,
    length: usize,
    replicas: u64,
    seed: u64,
    runner: &Runner,
) -> Result<ExperimentResult> {
    if lattice.dimension() != 1 {
        return Err(Error::InvalidArgument("the ruin formula needs d = 1".into()));
    }
    if length == 0 {
        return Err(Error::InvalidArgument("L must be positive".into()));
    }
    let alphas = lattice.as_slice();
    let (acc, _, _) = runner.map_reduce(replicas, tally, |(acc, _, _), i| {
        let mut rng = RngStream::new(seed, i).with_domain(domain::ORACLE).rng();
        let mut pair = [0.0; 2];
        let right: Vec<f64> = (0..length)
            .map(|_| {
                sample_dirichlet(alphas, &mut rng, &mut pair);
                pair[0]
            })
            .collect();
        acc.push(ruin_probability(&right));
    });
    let params = json!({ "alpha": lattice.to_string(), "d": 1, "L": length, "bound": exit_bound(lattice) });
    Ok(ExperimentResult::new("ruin-oracle", params, &acc, 0, 0, seed))
}

/// An environment on `Z^d` drawn lazily: the Dirichlet vector at a site is
/// sampled on first visit from a stream keyed by the site, so revisits see
/// the same vector and unvisited sites cost nothing.
pub struct LazyEnvironment<'a> {
    alphas: &'a [f64],
    stream: RngStream,
    index: HashMap<Vec<i64>, usize>,
    probs: Vec<f64>,
}

impl<'a> LazyEnvironment<'a> {
    pub fn new(lattice: &'a LatticeSpec<f64>, stream: RngStream) -> Self {
        LazyEnvironment {
            alphas: lattice.as_slice(),
            stream: stream.with_domain(domain::ENVIRONMENT),
            index: HashMap::new(),
            probs: Vec::new(),
        }
    }

    /// Transition probabilities at `site`, in [`Direction`] index order.
    pub fn at(&mut self, site: &[i64]) -> &[f64] {
        let k = self.alphas.len();
        let offset = match self.index.get(site) {
            Some(&offset) => offset,
            None => {
                let offset = self.probs.len();
                self.probs.resize(offset + k, 0.0);
                let mut rng = self.stream.with_domain(hash_coordinates(site)).rng();
                sample_dirichlet(self.alphas, &mut rng, &mut self.probs[offset..]);
                self.index.insert(site.to_vec(), offset);
                offset
            }
        };
        &self.probs[offset..offset + k]
    }

    pub fn visited_sites(&self) -> usize {
        self.index.len()
    }
}

/// A quenched walk on `Z^d` from the origin in a [`LazyEnvironment`].
pub struct LatticeWalker<'a> {
    env: LazyEnvironment<'a>,
    rng: StreamRng,
    position: Vec<i64>,
    steps: u64,
}

impl<'a> LatticeWalker<'a> {
    pub fn new(lattice: &'a LatticeSpec<f64>, stream: RngStream) -> Self {
        LatticeWalker {
            env: LazyEnvironment::new(lattice, stream),
            rng: stream.with_domain(domain::WALK).rng(),
            position: vec![0; lattice.dimension()],
            steps: 0,
        }
    }

    pub fn position(&self) -> &[i64] {
        &self.position
    }

    pub fn abscissa(&self) -> i64 {
        self.position[0]
    }

    pub fn transverse_norm_sq(&self) -> i64 {
        self.position[1..].iter().map(|c| c * c).sum()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn observation(&self) -> Observation {
        Observation { vertex: None, abscissa: Some(self.abscissa()), transverse_norm_sq: Some(self.transverse_norm_sq()) }
    }

    pub fn step(&mut self) -> Direction {
        let u: f64 = self.rng.random();
        let dir = Direction::from_index(sample_index(self.env.at(&self.position), u));
        self.position[dir.axis] += dir.sign();
        self.steps += 1;
        dir
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeWalkOutcome {
    pub report: StoppingReport,
    pub position: Vec<i64>,
    pub max_abscissa: i64,
    /// Every visited site, including the start, when recording was asked for.
    pub trajectory: Option<Vec<Vec<i64>>>,
}

/// Runs a [`LatticeWalker`] until `rule` fires. Target vertices are not
/// meaningful on `Z^d` and are rejected.
pub fn lattice_walk(
    lattice: &LatticeSpec<f64>,
    rule: &StoppingRule,
    stream: RngStream,
    record: bool,
) -> Result<LatticeWalkOutcome> {
    if rule.target.is_some() {
        return Err(Error::InvalidArgument("lattice walks have no target vertex".into()));
    }
    let mut walker = LatticeWalker::new(lattice, stream);
    let mut trajectory = record.then(|| vec![walker.position().to_vec()]);
    let mut max_abscissa = walker.abscissa();
    let reason = loop {
        if let Some(reason) = rule.check(walker.steps(), walker.observation()) {
            break reason;
        }
        walker.step();
        max_abscissa = max_abscissa.max(walker.abscissa());
        if let Some(t) = trajectory.as_mut() {
            t.push(walker.position().to_vec());
        }
    };
    Ok(LatticeWalkOutcome {
        report: StoppingReport { reason, step: walker.steps() },
        position: walker.position().to_vec(),
        max_abscissa,
        trajectory,
    })
}

/// For each level `L`, estimates `P_o(T_L < D)` on `Z^d` with `D = T̃_{-1}`.
///
/// One walk per replica runs until `D`, `T_{max L}` or the step cap, so the
/// estimates are nested: a replica succeeding at some `L` succeeds at every
/// smaller level. Replicas that hit the cap before deciding a level are
/// that level's `undecided` count and weigh as failures.
pub fn lattice_transience(
    lattice: &LatticeSpec<f64>,
    levels: &[i64],
    replicas: u64,
    max_steps: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Vec<ExperimentResult>> {
    check_steps(max_steps)?;
    check_drift(lattice)?;
    if let Some(l) = levels.iter().find(|&&l| l < 1) {
        return Err(Error::InvalidArgument(format!("levels must be positive, got {l}")));
    }
    let Some(&top) = levels.iter().max() else {
        return Ok(Vec::new());
    };
    let rule = StoppingRule::steps(max_steps).right_at(top).until_backtrack();
    let init = || (vec![MeanAccumulator::new(); levels.len()], vec![0u64; levels.len()], 0u64);
    let (accs, undecided, truncated) = runner.map_reduce(replicas, init, |(accs, undecided, truncated), i| {
        let out = lattice_walk(lattice, &rule, RngStream::new(seed, i), false).expect("rule has no target");
        let capped = out.report.reason == StopReason::StepCap;
        *truncated += u64::from(capped);
        for ((acc, und), &level) in accs.iter_mut().zip(undecided.iter_mut()).zip(levels) {
            let success = out.max_abscissa >= level;
            *und += u64::from(capped && !success);
            acc.push(f64::from(u8::from(success)));
        }
    });
    Ok(levels
        .iter()
        .zip(accs.iter().zip(undecided))
        .map(|(&level, (acc, undecided))| {
            let params = json!({
                "alpha": lattice.to_string(),
                "d": lattice.dimension(),
                "L": level,
                "steps": max_steps,
                "bound": exit_bound(lattice),
            });
            ExperimentResult::new("transience", params, acc, truncated, undecided, seed)
        })
        .collect())
}

/// `2 Σ_j (a_j + b_j) - a_i - b_i ≤ 1` for a 1-based axis `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrapCheck<S> {
    pub axis: usize,
    pub holds: bool,
    pub lhs: S,
    /// `1 - lhs`; nonnegative exactly when the condition holds.
    pub slack: S,
}

#[derive(Serialize)]
struct TrapCheckRecord<'a> {
    experiment: &'static str,
    alpha: &'a str,
    axis: usize,
    holds: bool,
    lhs: f64,
    slack: f64,
}

impl<S: Scalar> TrapCheck<S> {
    pub fn to_json(&self, lattice: &LatticeSpec<S>) -> Result<String> {
        Ok(serde_json::to_string(&TrapCheckRecord {
            experiment: "trap-check",
            alpha: &lattice.map(|w| w.to_f64()).to_string(),
            axis: self.axis,
            holds: self.holds,
            lhs: self.lhs.to_f64(),
            slack: self.slack.to_f64(),
        })?)
    }
}

pub fn trap_condition<S: Scalar>(lattice: &LatticeSpec<S>, axis: usize) -> Result<TrapCheck<S>> {
    if axis == 0 || axis > lattice.dimension() {
        return Err(Error::InvalidArgument(format!("axis {axis} outside 1..={}", lattice.dimension())));
    }
    let two = S::one() + S::one();
    let lhs = two * lattice.total() - lattice.forward(axis - 1).clone() - lattice.backward(axis - 1).clone();
    let slack = S::one() - lhs.clone();
    Ok(TrapCheck { axis, holds: lhs <= S::one(), lhs, slack })
}

/// Estimates `E[X_n · e1] / n` at each horizon `n`, all horizons read off
/// the same walks.
pub fn velocity_probe(
    lattice: &LatticeSpec<f64>,
    horizons: &[u64],
    replicas: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Vec<ExperimentResult>> {
    if horizons.contains(&0) {
        return Err(Error::InvalidArgument("horizons must be positive".into()));
    }
    let mut sorted = horizons.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let Some(&top) = sorted.last() else {
        return Ok(Vec::new());
    };
    let accs = runner.map_reduce(
        replicas,
        || vec![MeanAccumulator::new(); sorted.len()],
        |accs, i| {
            let mut walker = LatticeWalker::new(lattice, RngStream::new(seed, i));
            let mut next = 0;
            while walker.steps() < top {
                walker.step();
                if walker.steps() == sorted[next] {
                    accs[next].push(walker.abscissa() as f64 / walker.steps() as f64);
                    next += 1;
                }
            }
        },
    );
    let by_horizon: HashMap<u64, &MeanAccumulator> = sorted.iter().copied().zip(accs.iter()).collect();
    Ok(horizons
        .iter()
        .map(|n| {
            let params = json!({ "alpha": lattice.to_string(), "d": lattice.dimension(), "n": n });
            ExperimentResult::new("velocity", params, by_horizon[n], 0, 0, seed)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn lattice(w: &[f64]) -> LatticeSpec<f64> {
        LatticeSpec::new(w.to_vec()).unwrap()
    }

    #[test]
    fn trap_condition_examples() {
        let q = |s: &str| Rational::parse_decimal(s).unwrap();
        let check = |w: &str, axis| trap_condition(&LatticeSpec::<Rational>::parse(w).unwrap(), axis).unwrap();
        let a = check("0.1,0.1,0.1,0.1", 1);
        assert!(a.holds);
        assert_eq!((a.lhs, a.slack), (q("0.6"), q("0.4")));
        let b = check("0.05,0.05,0.05,0.05", 1);
        assert!(b.holds);
        assert_eq!((b.lhs.clone(), b.slack.clone()), (q("0.3"), q("0.7")));
        let c = check("0.2,0.1", 1);
        assert!(c.holds);
        assert_eq!((c.lhs, c.slack), (q("0.3"), q("0.7")));
        let e = check("0.3,0.2,0.3,0.2", 2);
        assert!(!e.holds);
        assert_eq!(e.slack, q("-0.5"));
        assert!(trap_condition(&lattice(&[1.0, 1.0]), 2).is_err());
        let json = b.to_json(&LatticeSpec::<Rational>::parse("0.05,0.05,0.05,0.05").unwrap()).unwrap();
        assert!(json.contains("\"holds\":true") && json.contains("\"slack\":0.7"), "{json}");
    }

    #[test]
    fn small_uniform_weights_are_traps() {
        // Every weight below 1/(4d) satisfies the inequality on every axis.
        for d in 1..=4usize {
            let w = Rational::new(1.into(), (4 * d as i64 + 1).into());
            let lattice = LatticeSpec::new(vec![w; 2 * d]).unwrap();
            for axis in 1..=d {
                let check = trap_condition(&lattice, axis).unwrap();
                assert!(check.holds && check.slack > Rational::from_integer(0.into()));
            }
        }
    }

    #[test]
    fn ruin_formula_small_cases() {
        // Symmetric walk on {-1, 0, 1}: hit 1 before -1 with probability 1/2.
        assert!((ruin_probability(&[0.5]) - 0.5).abs() < 1e-15);
        // Deterministic right steps.
        assert!((ruin_probability(&[1.0 - 1e-15; 3]) - 1.0).abs() < 1e-12);
        // Two interior sites, p = (0.6, 0.3): 1 / (1 + 2/3 + (2/3)(7/3)).
        let expected = 1.0 / (1.0 + 2.0 / 3.0 + (2.0 / 3.0) * (7.0 / 3.0));
        assert!((ruin_probability(&[0.6, 0.3]) - expected).abs() < 1e-15);
    }

    #[test]
    fn ruin_formula_matches_first_step_recursion() {
        // Solve h(x) = p_x h(x+1) + (1-p_x) h(x-1), h(-1) = 0, h(L) = 1 by shooting.
        let right = [0.7, 0.2, 0.55, 0.9, 0.35];
        let l = right.len();
        let mut h = vec![0.0; l + 2]; // index x + 1
        h[1] = 1.0; // unnormalized h(0)
        for x in 0..l {
            let p = right[x];
            h[x + 2] = (h[x + 1] - (1.0 - p) * h[x]) / p;
        }
        let oracle = h[1] / h[l + 1];
        assert!((ruin_probability(&right) - oracle).abs() < 1e-13);
    }

    #[test]
    fn delta_exit_requires_drift() {
        let spec = CylinderSpec::new(2, 2, lattice(&[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(matches!(cylinder_delta_exit(&spec, 10, 100, 1, &Runner::sequential()), Err(Error::NotDrifting { .. })));
        assert!(matches!(cylinder_exit_from_origin(&spec, 10, 100, 1, &Runner::sequential()), Err(Error::NotDrifting { .. })));
    }

    #[test]
    fn delta_exit_small_run() {
        let spec = CylinderSpec::new(2, 2, lattice(&[3.0, 1.0, 1.0, 1.0])).unwrap();
        let r = cylinder_delta_exit(&spec, 20_000, 1_000_000, 3, &Runner::new(0)).unwrap();
        assert_eq!(r.truncated, 0);
        assert!(r.z_score(2.0 / 3.0).abs() < 4.0, "{r:?}");
        assert!((r.params["exact"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn truncation_is_counted_as_failure() {
        let spec = CylinderSpec::new(2, 3, lattice(&[2.0, 1.0, 1.0, 1.0])).unwrap();
        // One step can never return to δ.
        let r = cylinder_delta_exit(&spec, 100, 1, 3, &Runner::sequential()).unwrap();
        assert_eq!((r.estimate, r.truncated, r.undecided), (0.0, 100, 100));
        let r = cylinder_exit_from_origin(&spec, 100, 1, 3, &Runner::sequential()).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(r.truncated > 0);
    }

    #[test]
    fn lazy_environment_is_consistent_and_keyed() {
        let l = lattice(&[2.0, 1.0, 1.0, 1.0]);
        let mut a = LazyEnvironment::new(&l, RngStream::new(1, 4));
        let first = a.at(&[3, -2]).to_vec();
        a.at(&[0, 0]);
        assert_eq!(a.at(&[3, -2]), first.as_slice());
        assert_eq!(a.visited_sites(), 2);
        // Independent of visiting order.
        let mut b = LazyEnvironment::new(&l, RngStream::new(1, 4));
        assert_eq!(b.at(&[3, -2]), first.as_slice());
        let mut c = LazyEnvironment::new(&l, RngStream::new(1, 5));
        assert_ne!(c.at(&[3, -2]), first.as_slice());
        assert!((first.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn first_time(traj: &[Vec<i64>], pred: impl Fn(&[i64]) -> bool) -> Option<u64> {
        traj.iter().position(|x| pred(x)).map(|n| n as u64)
    }

    #[test]
    fn lattice_walk_bookkeeping_matches_rescan() {
        let l = lattice(&[1.2, 1.0, 0.8, 0.9]);
        let rule = StoppingRule::steps(400).right_at(6).left_at(-4).transverse(3);
        for i in 0..1000 {
            let out = lattice_walk(&l, &rule, RngStream::new(17, i), true).unwrap();
            let traj = out.trajectory.as_ref().unwrap();
            assert_eq!(traj.len() as u64, out.report.step + 1);
            let t_right = first_time(traj, |x| x[0] >= 6);
            let t_left = first_time(traj, |x| x[0] <= -4);
            let t_perp = first_time(traj, |x| x[1] * x[1] > 9);
            let candidates = [
                (t_right, StopReason::Right),
                (t_left, StopReason::Left),
                (t_perp, StopReason::Transverse),
                (Some(400), StopReason::StepCap),
            ];
            let (time, reason) = candidates
                .iter()
                .filter_map(|(t, r)| t.map(|t| (t, *r)))
                .min_by_key(|(t, _)| *t)
                .unwrap();
            assert_eq!((out.report.step, out.report.reason), (time, reason), "replica {i}");
            assert_eq!(out.max_abscissa, traj.iter().map(|x| x[0]).max().unwrap());
            assert_eq!(&out.position, traj.last().unwrap());
        }
    }

    #[test]
    fn lattice_walk_rejects_targets() {
        let l = lattice(&[2.0, 1.0]);
        let rule = StoppingRule::steps(10).until_hit(crate::VertexId(0));
        assert!(lattice_walk(&l, &rule, RngStream::new(0, 0), false).is_err());
    }

    #[test]
    fn transience_levels_are_nested() {
        let l = lattice(&[2.0, 1.0, 1.0, 1.0]);
        let rs = lattice_transience(&l, &[2, 5, 10], 2000, 100_000, 5, &Runner::new(0)).unwrap();
        assert_eq!(rs.len(), 3);
        assert!(rs[0].estimate >= rs[1].estimate && rs[1].estimate >= rs[2].estimate);
        assert!(rs.iter().all(|r| r.replicas == 2000));
        assert!(lattice_transience(&l, &[], 10, 10, 5, &Runner::sequential()).unwrap().is_empty());
        assert!(lattice_transience(&l, &[0], 10, 10, 5, &Runner::sequential()).is_err());
    }

    #[test]
    fn symmetric_velocity_is_zero() {
        let l = lattice(&[1.0, 1.0, 1.0, 1.0]);
        let rs = velocity_probe(&l, &[100, 10, 1000], 2000, 8, &Runner::new(0)).unwrap();
        assert_eq!(rs[0].params["n"], json!(100));
        for r in &rs {
            assert!(r.z_score(0.0).abs() < 3.0, "{r:?}");
        }
    }

    #[test]
    fn one_dimensional_drift_is_ballistic() {
        let l = lattice(&[2.0, 1.0]);
        let rs = velocity_probe(&l, &[100, 1000], 300, 8, &Runner::new(0)).unwrap();
        assert!(rs.iter().all(|r| r.estimate > 0.0));
    }

    #[test]
    fn ruin_oracle_requires_one_dimension() {
        assert!(averaged_ruin_probability(&lattice(&[2.0, 1.0, 1.0, 1.0]), 4, 10, 1, &Runner::sequential()).is_err());
        let r = averaged_ruin_probability(&lattice(&[2.0, 1.0]), 4, 1000, 1, &Runner::sequential()).unwrap();
        assert!(r.estimate > 0.5);
    }
}
