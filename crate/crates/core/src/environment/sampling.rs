use rand::Rng;
use rand_distr::StandardNormal;

use super::Environment;
use crate::graph::{DirectedGraph, WeightAssignment};
use crate::rng::RngStream;
use crate::scalar::{Real, Scalar};

/// `ln G` for `G ~ Gamma(shape, 1)`.
///
/// Marsaglia–Tsang for `shape ≥ 1`. Below 1 the draw is boosted:
/// `G = G' · U^{1/shape}` with `G' ~ Gamma(shape + 1)`, kept in log form so
/// that very small shapes do not underflow.
pub fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    assert!(shape > 0.0, "gamma shape must be positive, got {shape}");
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return log_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = 1.0 - rng.random::<f64>();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

/// Fills `out` with a `Dirichlet(alphas)` draw (normalized Gamma variates).
pub fn sample_dirichlet<R: Rng + ?Sized>(alphas: &[f64], rng: &mut R, out: &mut [f64]) {
    debug_assert_eq!(alphas.len(), out.len());
    if let [_] = alphas {
        out[0] = 1.0;
        return;
    }
    let mut max = f64::NEG_INFINITY;
    for (o, &a) in out.iter_mut().zip(alphas) {
        *o = log_gamma_variate(a, rng);
        max = max.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Independent `Dirichlet((α_e)_{e out of x})` vectors at every vertex `x`.
pub fn sample_environment<F: Real, R: Rng + ?Sized>(
    graph: &DirectedGraph,
    weights: &WeightAssignment<F>,
    rng: &mut R,
) -> Environment<F> {
    let mut probs = vec![F::zero(); graph.edge_count()];
    let mut alphas = Vec::new();
    let mut draw = Vec::new();
    for v in graph.vertices() {
        let out = graph.out_edges(v);
        alphas.clear();
        alphas.extend(out.iter().map(|&e| Scalar::to_f64(weights.weight(e))));
        draw.resize(out.len(), 0.0);
        sample_dirichlet(&alphas, rng, &mut draw);
        for (&e, &p) in out.iter().zip(&draw) {
            probs[e.0] = F::from(p).expect("probability fits the float type");
        }
    }
    Environment::from_raw(probs)
}

pub fn sample_environment_stream(
    graph: &DirectedGraph,
    weights: &WeightAssignment<f64>,
    stream: RngStream,
) -> Environment<f64> {
    sample_environment(graph, weights, &mut stream.rng())
}
