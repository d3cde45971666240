//! Nearest-neighbour structures built from a lattice weight vector
//! `(a1, b1, ..., ad, bd)`: finite tori standing in for `Z^d`, and the
//! cylinder graph `G_{L,N}` closed by an extra vertex `δ`.
//!
//! Every non-`δ` vertex `v` owns the edge ids `2d·v .. 2d·v + 2d`, one per
//! [`Direction`] in index order, so a direction and a vertex determine the edge.

use std::fmt;
use std::str::FromStr;

use super::{DirectedGraph, EdgeId, Path, VertexId, WeightAssignment};
use crate::error::{Error, Result};
use crate::scalar::{sum_in_order, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec<S> {
    weights: Vec<S>,
}

impl<S: Scalar> LatticeSpec<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() || !weights.len().is_multiple_of(2) {
            return Err(Error::LatticeWeights(format!("got {} entries", weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| **w <= S::zero()) {
            return Err(Error::LatticeWeights(format!("entry {w} is not positive")));
        }
        Ok(LatticeSpec { weights })
    }

    /// Parses a comma-separated list such as `2,1,1,1`.
    pub fn parse(text: &str) -> Result<Self> {
        let weights = text
            .split(',')
            .map(|t| S::parse_decimal(t).ok_or_else(|| Error::LatticeWeights(format!("cannot parse {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights)
    }

    pub fn dimension(&self) -> usize {
        self.weights.len() / 2
    }

    /// `a_i` for the 0-based axis `i`.
    pub fn forward(&self, axis: usize) -> &S {
        &self.weights[2 * axis]
    }

    /// `b_i` for the 0-based axis `i`.
    pub fn backward(&self, axis: usize) -> &S {
        &self.weights[2 * axis + 1]
    }

    pub fn weight(&self, dir: Direction) -> &S {
        &self.weights[dir.index()]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.weights
    }

    /// `Σ_j (a_j + b_j)`, the out-weight of every lattice vertex.
    pub fn total(&self) -> S {
        sum_in_order(self.weights.iter())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LatticeSpec<T> {
        LatticeSpec { weights: self.weights.iter().map(f).collect() }
    }
}

impl<S: Scalar> fmt::Display for LatticeSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

/// A unit step `±e_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Direction {
    pub axis: usize,
    pub forward: bool,
}

impl Direction {
    pub fn new(axis: usize, forward: bool) -> Self {
        Direction { axis, forward }
    }

    /// `2·axis` for `+e_axis`, `2·axis + 1` for `-e_axis`.
    pub fn index(self) -> usize {
        2 * self.axis + usize::from(!self.forward)
    }

    pub fn from_index(index: usize) -> Self {
        Direction { axis: index / 2, forward: index.is_multiple_of(2) }
    }

    pub fn sign(self) -> i64 {
        if self.forward {
            1
        } else {
            -1
        }
    }

    pub fn all(dimension: usize) -> impl Iterator<Item = Direction> {
        (0..2 * dimension).map(Direction::from_index)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.forward { '+' } else { '-' }, self.axis + 1)
    }
}

impl FromStr for Direction {
    type Err = Error;

    /// `+1`, `-2`, ... with 1-based axes.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("bad step {s:?}: expected +i or -i"));
        let forward = match s.as_bytes().first() {
            Some(b'+') => true,
            Some(b'-') => false,
            _ => return Err(bad()),
        };
        let axis: usize = s[1..].parse().map_err(|_| bad())?;
        if axis == 0 {
            return Err(bad());
        }
        Ok(Direction { axis: axis - 1, forward })
    }
}

/// Positions the stopping rules can read off a vertex.
pub trait Geometry {
    /// `x · e1`.
    fn abscissa(&self, v: VertexId) -> i64;
    /// `|x - (x·e1) e1|²`.
    fn transverse_norm_sq(&self, v: VertexId) -> i64;
}

/// Mixed-radix indexing of a product of cycles `Z_{p_0} × ... × Z_{p_k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusIndex {
    periods: Vec<usize>,
    strides: Vec<usize>,
}

impl TorusIndex {
    pub fn new(periods: Vec<usize>) -> Self {
        let mut strides = Vec::with_capacity(periods.len());
        let mut stride = 1;
        for &p in &periods {
            strides.push(stride);
            stride *= p;
        }
        TorusIndex { periods, strides }
    }

    pub fn size(&self) -> usize {
        self.periods.iter().product()
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    pub fn index(&self, coords: &[i64]) -> usize {
        coords
            .iter()
            .zip(&self.periods)
            .zip(&self.strides)
            .map(|((&c, &p), &s)| c.rem_euclid(p as i64) as usize * s)
            .sum()
    }

    pub fn coordinates(&self, index: usize) -> Vec<i64> {
        self.periods
            .iter()
            .zip(&self.strides)
            .map(|(&p, &s)| ((index / s) % p) as i64)
            .collect()
    }

    /// Index after moving by `sign` along `axis`, wrapping around.
    pub fn shift(&self, index: usize, axis: usize, sign: i64) -> usize {
        let p = self.periods[axis];
        let s = self.strides[axis];
        let c = (index / s) % p;
        let moved = (c as i64 + sign).rem_euclid(p as i64) as usize;
        index - c * s + moved * s
    }
}

/// A finite torus `Z_{p_1} × ... × Z_{p_d}` with i.i.d. directional weights.
#[derive(Clone, Debug)]
pub struct Torus<S> {
    lattice: LatticeSpec<S>,
    index: TorusIndex,
    pub graph: DirectedGraph,
    pub weights: WeightAssignment<S>,
}

/// Builds the torus with the given per-axis periods.
///
/// A period of 1 turns `±e_i` into two self-loops; a period of 2 makes them
/// parallel edges.
pub fn build_torus<S: Scalar>(lattice: &LatticeSpec<S>, periods: &[usize]) -> Result<Torus<S>> {
    let d = lattice.dimension();
    if periods.len() != d {
        return Err(Error::LengthMismatch { expected: d, found: periods.len() });
    }
    if let Some(axis) = periods.iter().position(|&p| p == 0) {
        return Err(Error::InvalidPeriod { axis: axis + 1, period: 0 });
    }
    let index = TorusIndex::new(periods.to_vec());
    let n = index.size();
    let mut endpoints = Vec::with_capacity(n * 2 * d);
    let mut weights = Vec::with_capacity(n * 2 * d);
    for v in 0..n {
        for dir in Direction::all(d) {
            endpoints.push((v, index.shift(v, dir.axis, dir.sign())));
            weights.push(lattice.weight(dir).clone());
        }
    }
    let graph = DirectedGraph::new(n, endpoints)?;
    let weights = WeightAssignment::new(&graph, weights)?;
    Ok(Torus { lattice: lattice.clone(), index, graph, weights })
}

impl<S: Scalar> Torus<S> {
    pub fn lattice(&self) -> &LatticeSpec<S> {
        &self.lattice
    }

    pub fn dimension(&self) -> usize {
        self.lattice.dimension()
    }

    pub fn periods(&self) -> &[usize] {
        self.index.periods()
    }

    /// Vertex at the given coordinates, reduced modulo the periods.
    pub fn vertex(&self, coords: &[i64]) -> VertexId {
        VertexId(self.index.index(coords))
    }

    pub fn coordinates(&self, v: VertexId) -> Vec<i64> {
        self.index.coordinates(v.0)
    }

    pub fn edge(&self, v: VertexId, dir: Direction) -> EdgeId {
        EdgeId(v.0 * 2 * self.dimension() + dir.index())
    }

    pub fn direction(&self, e: EdgeId) -> Direction {
        Direction::from_index(e.0 % (2 * self.dimension()))
    }

    /// Path from `start` following a step literal such as `+1,-1,+2`.
    pub fn steps_path(&self, start: VertexId, literal: &str) -> Result<Path> {
        let mut path = Path::trivial(start);
        if literal.trim().is_empty() {
            return Ok(path);
        }
        for token in literal.split(',') {
            let dir: Direction = token.parse()?;
            if dir.axis >= self.dimension() {
                return Err(Error::InvalidArgument(format!("step {token:?} exceeds dimension {}", self.dimension())));
            }
            path.push_checked(&self.graph, self.edge(path.end(), dir))?;
        }
        Ok(path)
    }

    /// Parses either a step literal (`+1,-1`) starting at `start` or a
    /// vertex literal (`0,1,0`).
    pub fn parse_path(&self, start: VertexId, literal: &str) -> Result<Path> {
        match literal.trim().as_bytes().first() {
            Some(b'+') | Some(b'-') => self.steps_path(start, literal),
            None => Ok(Path::trivial(start)),
            _ => Path::parse_vertices(&self.graph, literal),
        }
    }

    /// Step literal of a path on this torus (or on its reverse, read backwards).
    pub fn step_literal(&self, path: &Path) -> String {
        path.edges().iter().map(|&e| self.direction(e).to_string()).collect::<Vec<_>>().join(",")
    }
}

fn centered(c: i64, period: usize) -> i64 {
    let p = period as i64;
    if 2 * c > p {
        c - p
    } else {
        c
    }
}

impl<S: Scalar> Geometry for Torus<S> {
    fn abscissa(&self, v: VertexId) -> i64 {
        self.coordinates(v)[0]
    }

    fn transverse_norm_sq(&self, v: VertexId) -> i64 {
        let coords = self.coordinates(v);
        coords[1..]
            .iter()
            .zip(&self.periods()[1..])
            .map(|(&c, &p)| centered(c, p).pow(2))
            .sum()
    }
}

/// Cylinder `{0, ..., L-1} × (Z_N)^{d-1}` and the lattice weights on it.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderSpec<S> {
    pub n: usize,
    pub length: usize,
    pub lattice: LatticeSpec<S>,
}

impl<S: Scalar> CylinderSpec<S> {
    pub fn new(n: usize, length: usize, lattice: LatticeSpec<S>) -> Result<Self> {
        if n == 0 || length == 0 {
            return Err(Error::InvalidCylinder { n, length });
        }
        if lattice.dimension() == 1 && n != 1 {
            log::warn!("d = 1: the transverse torus is a point, N = {n} is ignored");
        }
        Ok(CylinderSpec { n, length, lattice })
    }

    /// The transverse torus `(Z_N)^{d-1}`; a single point when `d = 1`.
    pub fn transverse(&self) -> TorusIndex {
        TorusIndex::new(vec![self.n; self.lattice.dimension() - 1])
    }

    /// Fails unless `a1 > b1`.
    pub fn check_drift(&self) -> Result<()> {
        let (a, b) = (self.lattice.forward(0), self.lattice.backward(0));
        if a <= b {
            return Err(Error::NotDrifting { alpha: a.to_f64(), beta: b.to_f64() });
        }
        Ok(())
    }
}

/// The graph `G_{L,N}`: vertices `{0..=L} × (Z_N)^{d-1}` plus `δ`.
///
/// Leftward edges out of abscissa 0 and rightward edges out of abscissa `L`
/// end at `δ` (weights `b1` and `a1 - b1`), and `δ` has one edge of weight
/// `a1` to every vertex of abscissa 0. The resulting weights have zero
/// divergence everywhere.
#[derive(Clone, Debug)]
pub struct CylinderGraph<S> {
    spec: CylinderSpec<S>,
    transverse: TorusIndex,
    pub graph: DirectedGraph,
    pub weights: WeightAssignment<S>,
}

pub fn build_cylinder_graph<S: Scalar>(spec: &CylinderSpec<S>) -> Result<CylinderGraph<S>> {
    spec.check_drift()?;
    let lattice = &spec.lattice;
    let d = lattice.dimension();
    let transverse = spec.transverse();
    let width = transverse.size();
    let columns = spec.length + 1;
    let delta = columns * width;
    let right_exit = lattice.forward(0).clone() - lattice.backward(0).clone();

    let mut endpoints = Vec::new();
    let mut weights = Vec::new();
    for v in 0..delta {
        let (x, t) = (v / width, v % width);
        for dir in Direction::all(d) {
            let (head, w) = match (dir.axis, dir.forward) {
                (0, true) if x == spec.length => (delta, right_exit.clone()),
                (0, true) => (v + width, lattice.weight(dir).clone()),
                (0, false) if x == 0 => (delta, lattice.weight(dir).clone()),
                (0, false) => (v - width, lattice.weight(dir).clone()),
                (axis, _) => (x * width + transverse.shift(t, axis - 1, dir.sign()), lattice.weight(dir).clone()),
            };
            endpoints.push((v, head));
            weights.push(w);
        }
    }
    for t in 0..width {
        endpoints.push((delta, t));
        weights.push(lattice.forward(0).clone());
    }
    let graph = DirectedGraph::new(delta + 1, endpoints)?;
    let weights = WeightAssignment::new(&graph, weights)?;
    Ok(CylinderGraph { spec: spec.clone(), transverse, graph, weights })
}

impl<S: Scalar> CylinderGraph<S> {
    pub fn spec(&self) -> &CylinderSpec<S> {
        &self.spec
    }

    /// Number of vertices in one column, `N^{d-1}`.
    pub fn width(&self) -> usize {
        self.transverse.size()
    }

    pub fn delta(&self) -> VertexId {
        VertexId(self.graph.vertex_count() - 1)
    }

    /// The vertex at abscissa `x` (`0..=L`) and transverse index `t`.
    pub fn vertex(&self, x: usize, t: usize) -> VertexId {
        VertexId(x * self.width() + t)
    }

    /// `None` for `δ`.
    pub fn abscissa(&self, v: VertexId) -> Option<usize> {
        (v != self.delta()).then(|| v.0 / self.width())
    }

    pub fn is_left(&self, v: VertexId) -> bool {
        self.abscissa(v) == Some(0)
    }

    pub fn is_right(&self, v: VertexId) -> bool {
        self.abscissa(v) == Some(self.spec.length)
    }

    pub fn left_end(&self) -> Vec<VertexId> {
        (0..self.width()).map(|t| self.vertex(0, t)).collect()
    }

    pub fn right_end(&self) -> Vec<VertexId> {
        (0..self.width()).map(|t| self.vertex(self.spec.length, t)).collect()
    }
}
