//! Replication accounting: streaming moments, standard errors, and a
//! deterministic parallel reduction.
//!
//! Replications are processed in fixed-width chunks and chunk partials are
//! merged in chunk order, so the reduction tree is defined by the chunk width
//! alone. A run with one thread and a run with N threads therefore produce
//! bit-identical estimates.

use rayon::prelude::*;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// One-pass moment accumulator for i.i.d. replication outputs.
#[derive(Clone, Copy, Debug, Default)]
pub struct SampleMoments {
    n: u64,
    sum: CompensatedSum,
    sumsq: CompensatedSum,
}

impl SampleMoments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sumsq.add(x * x);
    }

    pub fn merge(&mut self, other: &SampleMoments) {
        self.n += other.n;
        self.sum.add(other.sum.value());
        self.sumsq.add(other.sumsq.value());
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.sum.value() / self.n as f64
    }

    /// Unbiased sample variance, clamped at zero against cancellation.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mean = self.mean();
        ((self.sumsq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the sample mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Point estimate with its Monte Carlo standard error and the number of
/// replications that hit the simulation horizon before stopping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub reps: u64,
    pub horizon_hits: u64,
}

impl Estimate {
    /// An estimate of a structurally impossible event.
    pub fn exact_zero(reps: u64) -> Self {
        Estimate {
            value: 0.0,
            std_error: 0.0,
            reps,
            horizon_hits: 0,
        }
    }

    pub fn from_accum(acc: &ReplicationAccum) -> Self {
        Estimate {
            value: acc.moments.mean(),
            std_error: acc.moments.std_error(),
            reps: acc.moments.count(),
            horizon_hits: acc.horizon_hits,
        }
    }
}

/// Chunk accumulator: moments of the per-replication output plus a horizon
/// counter.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReplicationAccum {
    pub moments: SampleMoments,
    pub horizon_hits: u64,
}

impl ReplicationAccum {
    #[inline]
    pub fn push(&mut self, value: f64, horizon_hit: bool) {
        self.moments.push(value);
        self.horizon_hits += u64::from(horizon_hit);
    }

    pub fn merge(&mut self, other: &ReplicationAccum) {
        self.moments.merge(&other.moments);
        self.horizon_hits += other.horizon_hits;
    }
}

/// Fixed chunk width for replication loops; part of the output contract, do
/// not tie it to the thread count.
pub const REPLICATION_CHUNK: u64 = 1024;

/// Runs `body` for replications `0..reps` (possibly in parallel) and reduces
/// the outputs in replication order. `body` returns the replication value and
/// whether the trial was truncated at the horizon.
pub fn accumulate_replications<F>(reps: u64, body: F) -> ReplicationAccum
where
    F: Fn(u64) -> (f64, bool) + Sync,
{
    let chunks = reps.div_ceil(REPLICATION_CHUNK);
    let partials: Vec<ReplicationAccum> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * REPLICATION_CHUNK;
            let hi = ((ci + 1) * REPLICATION_CHUNK).min(reps);
            let mut acc = ReplicationAccum::default();
            for rep in lo..hi {
                let (value, horizon_hit) = body(rep);
                acc.push(value, horizon_hit);
            }
            acc
        })
        .collect();
    let mut total = ReplicationAccum::default();
    for p in &partials {
        total.merge(p);
    }
    total
}
