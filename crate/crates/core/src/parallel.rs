//! Deterministic replica execution.
//!
//! Replicas are grouped into fixed-size chunks. Each chunk is folded
//! sequentially in replica order, and chunk results are merged in chunk
//! order, so the output never depends on the number of workers.

use rayon::prelude::*;

use crate::stats::MeanAccumulator;

const CHUNK: u64 = 512;

pub trait Merge: Send {
    fn merge(&mut self, other: Self);
}

impl Merge for MeanAccumulator {
    fn merge(&mut self, other: Self) {
        MeanAccumulator::merge(self, &other);
    }
}

impl<T: Merge> Merge for Vec<T> {
    fn merge(&mut self, other: Self) {
        assert_eq!(self.len(), other.len(), "merging accumulators of different shapes");
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

impl Merge for u64 {
    fn merge(&mut self, other: Self) {
        *self += other;
    }
}

impl<A: Merge, B: Merge> Merge for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

impl<A: Merge, B: Merge, C: Merge> Merge for (A, B, C) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
        self.2.merge(other.2);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Runner {
    workers: usize,
}

impl Runner {
    /// `workers == 0` uses rayon's global pool.
    pub fn new(workers: usize) -> Self {
        Runner { workers }
    }

    pub fn sequential() -> Self {
        Runner { workers: 1 }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `replica(acc, index)` for every index in `0..replicas`.
    pub fn map_reduce<A, I, F>(&self, replicas: u64, init: I, replica: F) -> A
    where
        A: Merge,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64) + Sync,
    {
        let chunks = replicas.div_ceil(CHUNK);
        let run_chunk = |c: u64| {
            let mut acc = init();
            for index in c * CHUNK..((c + 1) * CHUNK).min(replicas) {
                replica(&mut acc, index);
            }
            acc
        };
        let partials: Vec<A> = if self.workers == 1 {
            (0..chunks).map(run_chunk).collect()
        } else if self.workers == 0 {
            (0..chunks).into_par_iter().map(run_chunk).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .expect("thread pool");
            pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect())
        };
        let mut total = init();
        for partial in partials {
            total.merge(partial);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_results() {
        let run = |w| {
            Runner::new(w).map_reduce(5000, MeanAccumulator::new, |acc, i| {
                acc.push(((i * 7919) % 1013) as f64 / 1013.0)
            })
        };
        let one = run(1);
        assert_eq!(one.count(), 5000);
        for w in [0, 2, 4, 7] {
            let other = run(w);
            assert_eq!(one.mean().to_bits(), other.mean().to_bits());
            assert_eq!(one.standard_error().to_bits(), other.standard_error().to_bits());
        }
    }

    #[test]
    fn zero_replicas_yield_empty_accumulator() {
        let acc = Runner::new(2).map_reduce(0, || 0u64, |a, _| *a += 1);
        assert_eq!(acc, 0);
    }
}
