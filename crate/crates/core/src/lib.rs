//! Random walks in i.i.d. Dirichlet random environments on finite directed
//! graphs and on `Z^d`.
//!
//! The crate covers exact annealed path laws (rising factorials and the
//! oriented-edge reinforced walk), time reversal of environments through
//! their stationary distribution, and Monte Carlo experiments on cylinders
//! and lattices probing directional transience.
//!
//! Numerical code is generic over [`Scalar`], so the same routines run in
//! `f64` for simulation and in [`Rational`] when an exact answer is wanted.

pub mod annealed;
pub mod cli;
pub mod environment;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod parallel;
pub mod reversal;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod stopping;

pub use error::{Error, Result};
pub use graph::{DirectedGraph, Edge, EdgeId, Path, VertexId, WeightAssignment};
pub use rng::RngStream;
pub use scalar::{Real, Scalar};

/// Arbitrary precision rational numbers.
pub type Rational = num_rational::BigRational;

/// Floating point edge weights.
pub type Weights = graph::WeightAssignment<f64>;
/// Edge weights in exact arithmetic.
pub type ExactWeights = graph::WeightAssignment<Rational>;
/// Floating point environment.
pub type Env = environment::Environment<f64>;
/// Environment in exact arithmetic.
pub type ExactEnv = environment::Environment<Rational>;
/// Floating point lattice weight vector `(a1, b1, ..., ad, bd)`.
pub type Lattice = graph::lattice::LatticeSpec<f64>;
/// Floating point cylinder description.
pub type Cylinder = graph::lattice::CylinderSpec<f64>;
/// Floating point stationary distribution.
pub type Stationary = reversal::StationaryDistribution<f64>;
