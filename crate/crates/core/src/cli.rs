//! The `rwre` command-line front end.
//!
//! Weight vectors are always given as `a1,b1,a2,b2,...`: `a_i` sits on the
//! `+e_i` edge and `b_i` on the `-e_i` edge. Swapping `a1` and `b1` flips
//! the direction of the drift.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::annealed::{annealed_path_probability_mc, annealed_probability};
use crate::environment::sample_environment_stream;
use crate::error::{Error, Result};
use crate::experiments::{
    cylinder_delta_exit, cylinder_exit_from_origin, lattice_transience, trap_condition, velocity_probe,
    ExperimentResult,
};
use crate::graph::format::parse_weighted_graph;
use crate::graph::lattice::{build_torus, CylinderSpec, LatticeSpec, Torus};
use crate::graph::{DirectedGraph, Path, VertexId, WeightAssignment};
use crate::parallel::Runner;
use crate::reversal::{check_cycle_reversal, random_cycles, verify_reversal_distribution};
use crate::rng::{domain, RngStream};
use crate::scalar::Scalar;
use crate::Rational;

/// Seed used when neither `--seed` nor `RWRE_SEED` is given.
pub const DEFAULT_SEED: u64 = 2009;

/// Largest number of points a sweep may have.
pub const GRID_GUARD: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "rwre",
    version,
    about = "Random walks in Dirichlet environments: exact annealed laws, time reversal and exit probabilities",
    after_help = "Weight vectors are ordered a1,b1,a2,b2,...: a_i on the +e_i edge, b_i on the -e_i edge.\n\
                  Transposing a1 and b1 reverses the drift."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one Dirichlet environment on a torus or a custom graph.
    SampleEnv {
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, env = "RWRE_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact annealed probability of a path, with a Monte Carlo estimate.
    AnnealedProb {
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        graph: GraphArgs,
        /// Path as steps (`+1,-1,+2`) on a torus or vertex ids (`0,1,0`).
        #[arg(long, default_value = "+1,-1,+1", allow_hyphen_values = true)]
        path: String,
        /// Start vertex for step paths.
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check that reversed environments are Dirichlet with reversed weights.
    ReverseCheck {
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        graph: GraphArgs,
        /// Length of the enumerated paths.
        #[arg(long, default_value_t = 3)]
        length: usize,
        /// Root vertex of the enumerated paths.
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check E[p(σ)] = E[p(σ̌)] exactly on random cycles.
    CycleCheck {
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        graph: GraphArgs,
        /// Number of random cycles.
        #[arg(long, default_value_t = 500)]
        cycles: usize,
        /// Maximum cycle length.
        #[arg(long, default_value_t = 8)]
        length: usize,
        #[arg(long, env = "RWRE_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate the δ-exit probability on G_{L,N} (exactly 1 - b1/a1).
    CylinderDelta {
        #[command(flatten)]
        cylinder: CylinderArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate P(T_L < D) on the cylinder Z × (Z_N)^{d-1}.
    CylinderExit {
        #[command(flatten)]
        cylinder: CylinderArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate P(T_L < D) on Z^d for each level L.
    Transience {
        #[command(flatten)]
        weights: WeightArgs,
        /// Comma-separated levels.
        #[arg(long = "L", default_value = "5,10,20,40")]
        levels: String,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate 2 Σ(a_j + b_j) - a_i - b_i ≤ 1 exactly.
    TrapCheck {
        #[command(flatten)]
        weights: WeightArgs,
        /// Axis i, starting at 1.
        #[arg(long, default_value_t = 1)]
        axis: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate E[X_n · e1] / n on Z^d.
    Velocity {
        #[command(flatten)]
        weights: WeightArgs,
        /// Comma-separated horizons n.
        #[arg(long, default_value = "100,1000,10000")]
        horizons: String,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// Weights a1,b1,a2,b2,... [default: 2,1 then 1,1 for each further axis]
    #[arg(long)]
    pub alpha: Option<String>,
    /// Dimension; must agree with --alpha when both are given [default: 2]
    #[arg(long)]
    pub d: Option<usize>,
}

impl WeightArgs {
    fn text(&self) -> Result<String> {
        match (&self.alpha, self.d) {
            (Some(alpha), None) => Ok(alpha.clone()),
            (Some(alpha), Some(d)) => {
                let count = alpha.split(',').count();
                if count != 2 * d {
                    return Err(Error::InvalidArgument(format!("--d {d} needs {} weights, --alpha has {count}", 2 * d)));
                }
                Ok(alpha.clone())
            }
            (None, d) => {
                let d = d.unwrap_or(2);
                if d == 0 {
                    return Err(Error::InvalidArgument("--d must be at least 1".into()));
                }
                let mut weights = vec!["2", "1"];
                weights.extend(std::iter::repeat_n(["1", "1"], d - 1).flatten());
                Ok(weights.join(","))
            }
        }
    }

    fn lattice<S: Scalar>(&self) -> Result<LatticeSpec<S>> {
        LatticeSpec::parse(&self.text()?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Torus period along every axis.
    #[arg(long = "N", default_value_t = 4)]
    pub n: usize,
    /// Custom weighted graph (`vertices N` / `edge id tail head weight`); replaces the torus.
    #[arg(long)]
    pub graph_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CylinderArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Transverse periods, comma-separated for a sweep.
    #[arg(long = "N", default_value = "4")]
    pub n: String,
    /// Cylinder lengths, comma-separated for a sweep.
    #[arg(long = "L", default_value = "4")]
    pub l: String,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    /// Number of independent replicas.
    #[arg(long, default_value_t = 100_000)]
    pub replicas: u64,
    /// Step cap per walk.
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    #[arg(long, env = "RWRE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; 0 uses every core. Never changes the output.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

impl SamplingArgs {
    fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidArgument("--replicas must be at least 1".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("--steps must be at least 1".into()));
        }
        Ok(())
    }

    fn runner(&self) -> Runner {
        Runner::new(self.workers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Add wall-clock time to results; timed output is not reproducible.
    #[arg(long)]
    pub timing: bool,
}

/// Parses `argv`, runs the command and returns the process exit status:
/// 0 on success, 2 on usage or precondition errors, 1 otherwise.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    let output = cli.command.output().clone();
    let result = run(&cli.command).and_then(|text| emit(&output, &text));
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_precondition() {
                2
            } else {
                1
            }
        }
    }
}

fn emit(output: &OutputArgs, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

impl Command {
    fn output(&self) -> &OutputArgs {
        match self {
            Command::SampleEnv { output, .. }
            | Command::AnnealedProb { output, .. }
            | Command::ReverseCheck { output, .. }
            | Command::CycleCheck { output, .. }
            | Command::CylinderDelta { output, .. }
            | Command::CylinderExit { output, .. }
            | Command::Transience { output, .. }
            | Command::TrapCheck { output, .. }
            | Command::Velocity { output, .. } => output,
        }
    }
}

/// Runs a parsed command and returns what it would write.
pub fn run(command: &Command) -> Result<String> {
    match command {
        Command::SampleEnv { weights, graph, seed, output } => sample_env(weights, graph, *seed, output),
        Command::AnnealedProb { weights, graph, path, start, sampling, output } => {
            annealed_prob(weights, graph, path, *start, sampling, output)
        }
        Command::ReverseCheck { weights, graph, length, root, sampling, output } => {
            reverse_check(weights, graph, *length, *root, sampling, output)
        }
        Command::CycleCheck { weights, graph, cycles, length, seed, output } => {
            cycle_check(weights, graph, *cycles, *length, *seed, output)
        }
        Command::CylinderDelta { cylinder, sampling, output } => {
            cylinder_command(GridExperiment::CylinderDelta, cylinder, sampling, output)
        }
        Command::CylinderExit { cylinder, sampling, output } => {
            cylinder_command(GridExperiment::CylinderExit, cylinder, sampling, output)
        }
        Command::Transience { weights, levels, sampling, output } => {
            sampling.validate()?;
            let lattice = weights.lattice::<f64>()?;
            let levels = parse_list::<i64>(levels, "--L")?;
            let start = Instant::now();
            let mut results =
                lattice_transience(&lattice, &levels, sampling.replicas, sampling.steps, sampling.seed, &sampling.runner())?;
            stamp(&mut results, output, start);
            render_results(&results, &["L", "alpha", "bound", "d", "steps"], output)
        }
        Command::TrapCheck { weights, axis, output } => {
            let lattice = weights.lattice::<Rational>()?;
            let check = trap_condition(&lattice, *axis)?;
            match output.format {
                Format::Json => Ok(format!("{}\n", check.to_json(&lattice)?)),
                _ => Ok(format!(
                    "alpha {} axis {} lhs {} slack {} holds {}\n",
                    lattice, axis, check.lhs, check.slack, check.holds
                )),
            }
        }
        Command::Velocity { weights, horizons, sampling, output } => {
            sampling.validate()?;
            let lattice = weights.lattice::<f64>()?;
            let horizons = parse_list::<u64>(horizons, "--horizons")?;
            let start = Instant::now();
            let mut results = velocity_probe(&lattice, &horizons, sampling.replicas, sampling.seed, &sampling.runner())?;
            stamp(&mut results, output, start);
            render_results(&results, &["alpha", "d", "n"], output)
        }
    }
}

/// Parses and runs `args` (without the program name) in-process.
pub fn run_args<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("rwre")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    run(&cli.command)
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::InvalidArgument(format!("{flag}: cannot parse {s:?}"))))
        .collect()
}

fn stamp(results: &mut [ExperimentResult], output: &OutputArgs, start: Instant) {
    if output.timing {
        let elapsed = start.elapsed().as_secs_f64();
        for r in results {
            r.wall_time_s = Some(elapsed);
        }
    }
}

enum Workspace<S> {
    Torus(Torus<S>),
    Custom(DirectedGraph, WeightAssignment<S>),
}

impl<S: Scalar> Workspace<S> {
    fn load(weights: &WeightArgs, graph: &GraphArgs) -> Result<Self> {
        match &graph.graph_file {
            Some(path) => {
                let (g, w) = parse_weighted_graph(&fs::read_to_string(path)?)?;
                Ok(Workspace::Custom(g, w))
            }
            None => {
                let lattice = weights.lattice::<S>()?;
                let periods = vec![graph.n; lattice.dimension()];
                Ok(Workspace::Torus(build_torus(&lattice, &periods)?))
            }
        }
    }

    fn graph(&self) -> &DirectedGraph {
        match self {
            Workspace::Torus(t) => &t.graph,
            Workspace::Custom(g, _) => g,
        }
    }

    fn weights(&self) -> &WeightAssignment<S> {
        match self {
            Workspace::Torus(t) => &t.weights,
            Workspace::Custom(_, w) => w,
        }
    }

    fn parse_path(&self, start: usize, literal: &str) -> Result<Path> {
        match self {
            Workspace::Torus(t) => t.parse_path(VertexId(start), literal),
            Workspace::Custom(g, _) => Path::parse_vertices(g, literal),
        }
    }

    fn literal(&self, path: &Path) -> String {
        match self {
            Workspace::Torus(t) => t.step_literal(path),
            Workspace::Custom(..) => path.vertex_literal(),
        }
    }

    fn describe(&self, weights: &WeightArgs, graph: &GraphArgs) -> Result<Value> {
        Ok(match graph.graph_file.as_ref() {
            Some(path) => json!({ "graph_file": path.display().to_string() }),
            None => json!({ "alpha": weights.text()?, "N": graph.n }),
        })
    }
}

fn sample_env(weights: &WeightArgs, graph: &GraphArgs, seed: u64, output: &OutputArgs) -> Result<String> {
    let ws = Workspace::<f64>::load(weights, graph)?;
    let env = sample_environment_stream(ws.graph(), ws.weights(), RngStream::new(seed, 0).with_domain(domain::ENVIRONMENT));
    match output.format {
        Format::Text => Ok(env.dump(ws.graph())),
        Format::Json => {
            let record = json!({
                "experiment": "sample-env",
                "params": ws.describe(weights, graph)?,
                "seed": seed,
                "probabilities": env.as_slice(),
            });
            Ok(format!("{record}\n"))
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(["edge", "tail", "head", "probability"])?;
            for e in ws.graph().edges() {
                writer.write_record([
                    e.id.0.to_string(),
                    e.tail.0.to_string(),
                    e.head.0.to_string(),
                    env.prob(e.id).to_string(),
                ])?;
            }
            finish_csv(writer)
        }
    }
}

fn annealed_prob(
    weights: &WeightArgs,
    graph: &GraphArgs,
    literal: &str,
    start: usize,
    sampling: &SamplingArgs,
    output: &OutputArgs,
) -> Result<String> {
    sampling.validate()?;
    let exact_ws = Workspace::<Rational>::load(weights, graph)?;
    let float_ws = Workspace::<f64>::load(weights, graph)?;
    let path = exact_ws.parse_path(start, literal)?;
    let exact = annealed_probability(exact_ws.graph(), exact_ws.weights(), &path);
    let clock = Instant::now();
    let estimate = annealed_path_probability_mc(
        float_ws.graph(),
        float_ws.weights(),
        &path,
        sampling.replicas,
        sampling.seed,
        &sampling.runner(),
    )?;
    let mut params = exact_ws.describe(weights, graph)?;
    params["path"] = json!(exact_ws.literal(&path));
    params["exact"] = json!(exact.to_f64());
    params["exact_fraction"] = json!(exact.to_string());
    let Value::Object(params) = params else { unreachable!() };
    let mut results = vec![ExperimentResult {
        experiment: "annealed-prob".into(),
        params,
        estimate: estimate.mean,
        se: estimate.se,
        replicas: estimate.count,
        truncated: 0,
        undecided: 0,
        seed: sampling.seed,
        wall_time_s: None,
    }];
    stamp(&mut results, output, clock);
    let columns: Vec<String> = results[0].params.keys().cloned().collect();
    render_results(&results, &columns, output)
}

fn reverse_check(
    weights: &WeightArgs,
    graph: &GraphArgs,
    length: usize,
    root: usize,
    sampling: &SamplingArgs,
    output: &OutputArgs,
) -> Result<String> {
    sampling.validate()?;
    let ws = Workspace::<f64>::load(weights, graph)?;
    if !ws.graph().contains_vertex(VertexId(root)) {
        return Err(Error::UnknownVertex(VertexId(root)));
    }
    let mut report = verify_reversal_distribution(
        ws.graph(),
        ws.weights(),
        VertexId(root),
        length,
        sampling.replicas,
        sampling.seed,
        &sampling.runner(),
    )?;
    report.relabel(|p| ws.literal(p));
    let text = match output.format {
        Format::Text => report.to_text(),
        Format::Json => format!("{}\n", serde_json::to_string(&report)?),
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for p in &report.paths {
                writer.serialize(p)?;
            }
            if report.paths.is_empty() {
                writer.write_record(["literal", "exact", "mc", "se", "z"])?;
            }
            finish_csv(writer)?
        }
    };
    if !report.passed {
        emit(output, &text)?;
        return Err(Error::ReversalIdentity(format!(
            "{} of {} paths beyond |z| = 3, max |z| = {:.2}",
            report.outliers,
            report.paths.len(),
            report.max_abs_z
        )));
    }
    Ok(text)
}

#[derive(Serialize)]
struct CycleSummary {
    experiment: &'static str,
    params: Value,
    cycles: usize,
    max_length: usize,
    max_relative_difference: f64,
    passed: bool,
    seed: u64,
}

fn cycle_check(
    weights: &WeightArgs,
    graph: &GraphArgs,
    cycles: usize,
    length: usize,
    seed: u64,
    output: &OutputArgs,
) -> Result<String> {
    let ws = Workspace::<Rational>::load(weights, graph)?;
    let sampled = random_cycles(ws.graph(), cycles, length, RngStream::new(seed, 0).with_domain(domain::AUDIT))?;
    let mut rows = Vec::with_capacity(sampled.len());
    for sigma in &sampled {
        rows.push((ws.literal(sigma), check_cycle_reversal(ws.graph(), ws.weights(), sigma)?));
    }
    let worst = rows.iter().map(|(_, r)| r.relative_difference).fold(0.0, f64::max);
    let passed = worst == 0.0;
    let text = match output.format {
        Format::Json => {
            let summary = CycleSummary {
                experiment: "cycle-check",
                params: ws.describe(weights, graph)?,
                cycles,
                max_length: length,
                max_relative_difference: worst,
                passed,
                seed,
            };
            format!("{}\n", serde_json::to_string(&summary)?)
        }
        Format::Text => {
            let mut out = String::new();
            for (literal, r) in &rows {
                out.push_str(&format!("cycle {literal} forward {} reversed {}\n", r.forward, r.reversed));
            }
            out.push_str(&format!("summary cycles {cycles} max_relative_difference {worst:e} passed {passed}\n"));
            out
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(["cycle", "forward", "reversed", "relative_difference"])?;
            for (literal, r) in &rows {
                writer.write_record([
                    literal.clone(),
                    r.forward.to_string(),
                    r.reversed.to_string(),
                    r.relative_difference.to_string(),
                ])?;
            }
            finish_csv(writer)?
        }
    };
    if !passed {
        emit(output, &text)?;
        return Err(Error::ReversalIdentity(format!("cycle identity off by {worst:e}")));
    }
    Ok(text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridExperiment {
    CylinderDelta,
    CylinderExit,
}

impl GridExperiment {
    /// Parameter columns of the CSV table, in order.
    pub fn param_columns(self) -> &'static [&'static str] {
        match self {
            GridExperiment::CylinderDelta => &["N", "L", "alpha", "d", "exact", "steps"],
            GridExperiment::CylinderExit => &["N", "L", "alpha", "bound", "d", "steps"],
        }
    }
}

/// A sweep over transverse periods and lengths.
#[derive(Clone, Debug)]
pub struct GridConfig {
    pub experiment: GridExperiment,
    pub lattice: LatticeSpec<f64>,
    pub ns: Vec<usize>,
    pub ls: Vec<usize>,
    pub replicas: u64,
    pub steps: u64,
    pub seed: u64,
}

/// Runs every `(N, L)` point, `N` outermost. Point `i` uses seed `seed ^ i`.
pub fn run_grid(config: &GridConfig, runner: &Runner) -> Result<Vec<ExperimentResult>> {
    let points = config.ns.len() * config.ls.len();
    if points > GRID_GUARD {
        return Err(Error::InvalidArgument(format!("sweep has {points} points, more than {GRID_GUARD}")));
    }
    let mut results = Vec::with_capacity(points);
    for (i, (&n, &l)) in config.ns.iter().flat_map(|n| config.ls.iter().map(move |l| (n, l))).enumerate() {
        let spec = CylinderSpec::new(n, l, config.lattice.clone())?;
        let seed = config.seed ^ i as u64;
        let result = match config.experiment {
            GridExperiment::CylinderDelta => cylinder_delta_exit(&spec, config.replicas, config.steps, seed, runner)?,
            GridExperiment::CylinderExit => cylinder_exit_from_origin(&spec, config.replicas, config.steps, seed, runner)?,
        };
        results.push(result);
    }
    Ok(results)
}

fn cylinder_command(
    experiment: GridExperiment,
    cylinder: &CylinderArgs,
    sampling: &SamplingArgs,
    output: &OutputArgs,
) -> Result<String> {
    sampling.validate()?;
    let lattice = cylinder.weights.lattice::<f64>()?;
    // Check the drift before anything else so an empty sweep still rejects it.
    CylinderSpec::new(1, 1, lattice.clone())?.check_drift()?;
    let config = GridConfig {
        experiment,
        lattice,
        ns: parse_list(&cylinder.n, "--N")?,
        ls: parse_list(&cylinder.l, "--L")?,
        replicas: sampling.replicas,
        steps: sampling.steps,
        seed: sampling.seed,
    };
    let start = Instant::now();
    let mut results = run_grid(&config, &sampling.runner())?;
    stamp(&mut results, output, start);
    render_results(&results, experiment.param_columns(), output)
}

const RESULT_COLUMNS: [&str; 6] = ["estimate", "se", "replicas", "truncated", "undecided", "seed"];

/// JSON lines, or a CSV table with one row per result: `experiment`, the
/// parameter columns, then the result fields.
pub fn render_results<C: AsRef<str>>(results: &[ExperimentResult], params: &[C], output: &OutputArgs) -> Result<String> {
    match output.format {
        Format::Json => {
            let mut out = String::new();
            for r in results {
                out.push_str(&serde_json::to_string(r)?);
                out.push('\n');
            }
            Ok(out)
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["experiment".to_string()];
            header.extend(params.iter().map(|p| p.as_ref().to_string()));
            header.extend(RESULT_COLUMNS.iter().map(|c| c.to_string()));
            if output.timing {
                header.push("wall_time_s".into());
            }
            writer.write_record(&header)?;
            for r in results {
                let mut row = vec![r.experiment.clone()];
                row.extend(params.iter().map(|p| match r.params.get(p.as_ref()) {
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                    None => String::new(),
                }));
                row.extend([
                    r.estimate.to_string(),
                    r.se.to_string(),
                    r.replicas.to_string(),
                    r.truncated.to_string(),
                    r.undecided.to_string(),
                    r.seed.to_string(),
                ]);
                if output.timing {
                    row.push(r.wall_time_s.map(|t| t.to_string()).unwrap_or_default());
                }
                writer.write_record(&row)?;
            }
            finish_csv(writer)
        }
        Format::Text => {
            let mut out = String::new();
            for r in results {
                let params: Vec<String> = params
                    .iter()
                    .filter_map(|p| r.params.get(p.as_ref()).map(|v| format!("{}={v}", p.as_ref())))
                    .collect();
                out.push_str(&format!(
                    "{} {} estimate {:.6} se {:.6} replicas {} truncated {} undecided {} seed {}\n",
                    r.experiment,
                    params.join(" "),
                    r.estimate,
                    r.se,
                    r.replicas,
                    r.truncated,
                    r.undecided,
                    r.seed
                ));
            }
            Ok(out)
        }
    }
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> String {
        run_args(args).unwrap_or_else(|e| panic!("{args:?}: {e}"))
    }

    #[test]
    fn help_lists_every_subcommand() {
        use clap::CommandFactory;
        let help = Cli::command().render_long_help().to_string();
        for sub in [
            "sample-env",
            "annealed-prob",
            "reverse-check",
            "cycle-check",
            "cylinder-delta",
            "cylinder-exit",
            "transience",
            "trap-check",
            "velocity",
        ] {
            assert!(help.contains(sub), "{sub} missing from help");
        }
        Cli::command().debug_assert();
    }

    #[test]
    fn default_weights_follow_dimension() {
        let w = WeightArgs { alpha: None, d: Some(3) };
        assert_eq!(w.text().unwrap(), "2,1,1,1,1,1");
        let w = WeightArgs { alpha: Some("2,1".into()), d: Some(2) };
        assert!(w.text().is_err());
    }

    #[test]
    fn trap_check_output() {
        let out = run_ok(&["trap-check", "--alpha", "0.05,0.05,0.05,0.05", "--axis", "1"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["holds"], json!(true));
        assert_eq!(v["lhs"], json!(0.3));
        assert_eq!(v["slack"], json!(0.7));
    }

    #[test]
    fn drift_precondition() {
        let err = run_args(["cylinder-delta", "--alpha", "1,1,1,1", "--replicas", "10"]).unwrap_err();
        assert!(err.is_precondition());
        assert!(err.to_string().contains("a1 > b1"), "{err}");
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let out = run_ok(&["cylinder-delta", "--L", "", "--format", "csv", "--replicas", "10"]);
        assert_eq!(out, "experiment,N,L,alpha,d,exact,steps,estimate,se,replicas,truncated,undecided,seed\n");
    }

    #[test]
    fn grid_guard() {
        let config = GridConfig {
            experiment: GridExperiment::CylinderDelta,
            lattice: LatticeSpec::parse("2,1").unwrap(),
            ns: (1..=101).collect(),
            ls: (1..=100).collect(),
            replicas: 1,
            steps: 1,
            seed: 0,
        };
        assert!(run_grid(&config, &Runner::sequential()).is_err());
    }

    #[test]
    fn grid_rows_and_seeds() {
        let out = run_ok(&["cylinder-delta", "--N", "1,2", "--L", "1,2", "--format", "csv", "--replicas", "200", "--seed", "8"]);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 5);
        let seeds: Vec<&str> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(seeds, ["8", "9", "10", "11"]);
    }

    #[test]
    fn annealed_prob_reports_exact_fraction() {
        let out = run_ok(&["annealed-prob", "--alpha", "2,1", "--path", "0,1,0,1", "--replicas", "1000"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["params"]["exact_fraction"], json!("1/6"));
    }

    #[test]
    fn timing_is_opt_in() {
        let args = ["velocity", "--alpha", "2,1", "--horizons", "10", "--replicas", "10"];
        assert!(!run_ok(&args).contains("wall_time_s"));
        let mut timed = args.to_vec();
        timed.push("--timing");
        assert!(run_ok(&timed).contains("wall_time_s"));
    }

    #[test]
    fn malformed_weights_are_rejected() {
        for alpha in ["2,1,1", "2,-1", "2,x"] {
            let err = run_args(["trap-check", "--alpha", alpha]).unwrap_err();
            assert!(err.is_precondition(), "{alpha}: {err}");
        }
    }
}
