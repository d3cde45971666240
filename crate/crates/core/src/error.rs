use thiserror::Error;

use crate::graph::{EdgeId, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {edge} references vertex {vertex} but the graph has {count} vertices")]
    VertexOutOfRange { edge: usize, vertex: usize, count: usize },
    #[error("vertex {0} has no out-edge")]
    NoOutEdge(VertexId),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("weight of edge {0} is not positive")]
    NonPositiveWeight(EdgeId),
    #[error("lattice weight vector must hold 2d positive entries (a1,b1,...,ad,bd): {0}")]
    LatticeWeights(String),
    #[error("period {period} on axis {axis} is invalid: periods must be at least 1")]
    InvalidPeriod { axis: usize, period: usize },
    #[error("cylinder size must be positive (N = {n}, L = {length})")]
    InvalidCylinder { n: usize, length: usize },
    #[error("precondition a1 > b1 violated: a1 = {alpha}, b1 = {beta} makes the right exit weight a1 - b1 nonpositive")]
    NotDrifting { alpha: f64, beta: f64 },
    #[error("no edge from {tail} to {head}")]
    NoSuchStep { tail: VertexId, head: VertexId },
    #[error("step from {tail} to {head} is ambiguous: {count} parallel edges")]
    AmbiguousStep { tail: VertexId, head: VertexId, count: usize },
    #[error("edge {edge} does not start at {at}")]
    Discontinuous { edge: EdgeId, at: VertexId },
    #[error("edge {0} is not an edge of this graph")]
    UnknownEdge(EdgeId),
    #[error("vertex {0} is not a vertex of this graph")]
    UnknownVertex(VertexId),
    #[error("environment row at vertex {vertex} sums to {sum}")]
    NotStochastic { vertex: VertexId, sum: f64 },
    #[error("environment entry for edge {edge} is outside (0, 1]: {value}")]
    InvalidProbability { edge: EdgeId, value: f64 },
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("weights have nonzero divergence at vertices {0:?}")]
    NonZeroDivergence(Vec<VertexId>),
    #[error("path is not a cycle: starts at {start}, ends at {end}")]
    NotACycle { start: VertexId, end: VertexId },
    #[error("stationary distribution could not be computed: {0}")]
    Stationary(String),
    #[error("reversal identity violated: {0}")]
    ReversalIdentity(String),
    #[error("enumeration guard exceeded: more than {0} paths")]
    TooManyPaths(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by invalid input rather than by a failure of the code.
    pub fn is_precondition(&self) -> bool {
        !matches!(
            self,
            Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::Stationary(_)
                | Error::ReversalIdentity(_)
        )
    }
}
