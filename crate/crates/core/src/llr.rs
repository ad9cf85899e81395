//! Cumulative log-likelihood-ratio statistics for a panel of streams.
//!
//! `LlrState` tracks the vector of cumulative LLRs, the descending order
//! statistics lambda^(1) >= ... >= lambda^(K) (ties broken toward the smaller
//! stream index), and the count of positive statistics. Ranks 0 and K+1 are
//! sentinels fixed at -inf and +inf; this sign choice makes the boundary
//! variants of the gap-intersection rule disable themselves (a gap against a
//! sentinel is -inf, so it never reaches a positive threshold).

use std::cmp::Ordering;

use crate::streams::SignalConfiguration;

#[derive(Clone, Debug)]
pub struct LlrState {
    time: u64,
    lambda: Vec<f64>,
    // stream indices sorted by (lambda descending, index ascending)
    order: Vec<u32>,
    positive: usize,
}

impl LlrState {
    /// Fresh state at time 0 with all statistics zero.
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "need at least one stream");
        assert!(k <= u32::MAX as usize);
        LlrState {
            time: 0,
            lambda: vec![0.0; k],
            order: (0..k as u32).collect(),
            positive: 0,
        }
    }

    /// Assembles a state directly from statistic values, for procedures that
    /// freeze each stream at its own stopping time. Time is left at 0; the
    /// caller owns the notion of elapsed samples.
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        for &v in &values {
            assert!(v.is_finite(), "non-finite LLR value");
        }
        let mut state = LlrState {
            time: 0,
            lambda: values,
            order: Vec::new(),
            positive: 0,
        };
        state.order = (0..state.lambda.len() as u32).collect();
        state.resort();
        state
    }

    pub fn num_streams(&self) -> usize {
        self.lambda.len()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn value(&self, index: usize) -> f64 {
        self.lambda[index]
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda
    }

    /// Number of strictly positive statistics, p(n).
    pub fn positive_count(&self) -> usize {
        self.positive
    }

    /// Adds one increment per stream and advances time by one. Panics on a
    /// non-finite increment: that signals a broken stream model, not a
    /// recoverable condition.
    pub fn update(&mut self, increments: &[f64]) {
        assert_eq!(
            increments.len(),
            self.lambda.len(),
            "increment vector length mismatch"
        );
        for (l, &inc) in self.lambda.iter_mut().zip(increments) {
            assert!(inc.is_finite(), "non-finite LLR increment");
            *l += inc;
        }
        self.time += 1;
        self.resort();
    }

    fn resort(&mut self) {
        let lambda = &self.lambda;
        self.order.sort_unstable_by(|&i, &j| {
            match lambda[j as usize].partial_cmp(&lambda[i as usize]).unwrap() {
                Ordering::Equal => i.cmp(&j),
                other => other,
            }
        });
        self.positive = lambda.iter().filter(|&&l| l > 0.0).count();
    }

    /// lambda^(rank), the rank-th largest statistic. Rank 0 yields -inf and
    /// rank K+1 yields +inf (see module docs); other out-of-range ranks panic.
    pub fn ordered_value(&self, rank: usize) -> f64 {
        let k = self.lambda.len();
        if rank == 0 {
            f64::NEG_INFINITY
        } else if rank <= k {
            self.lambda[self.order[rank - 1] as usize]
        } else if rank == k + 1 {
            f64::INFINITY
        } else {
            panic!("rank {rank} outside [0, {}]", k + 1);
        }
    }

    /// Stream index holding rank `rank` (1-based, ties toward smaller index).
    pub fn ordered_index(&self, rank: usize) -> usize {
        assert!(
            (1..=self.lambda.len()).contains(&rank),
            "rank {rank} outside [1, {}]",
            self.lambda.len()
        );
        self.order[rank - 1] as usize
    }

    /// The `count` streams with the largest statistics.
    pub fn top_set(&self, count: usize) -> SignalConfiguration {
        assert!(count <= self.lambda.len());
        let mut cfg = SignalConfiguration::empty(self.lambda.len());
        for &i in &self.order[..count] {
            cfg.insert(i as usize);
        }
        cfg
    }

    /// All streams with strictly positive statistics.
    pub fn positive_set(&self) -> SignalConfiguration {
        self.top_set(self.positive)
    }

    /// lambda^{A,C} = sum_{k in A\C} lambda^k - sum_{k in C\A} lambda^k, the
    /// log-likelihood ratio of configuration `a` against configuration `c`.
    /// The two configurations must differ.
    pub fn pairwise_llr(&self, a: &SignalConfiguration, c: &SignalConfiguration) -> f64 {
        assert_eq!(a.num_streams(), self.lambda.len());
        assert_eq!(c.num_streams(), self.lambda.len());
        assert!(a != c, "pairwise LLR needs distinct configurations");
        let mut total = 0.0;
        for (w, (&aw, &cw)) in a.words().iter().zip(c.words()).enumerate() {
            let mut plus = aw & !cw;
            while plus != 0 {
                let bit = plus.trailing_zeros() as usize;
                total += self.lambda[w * 64 + bit];
                plus &= plus - 1;
            }
            let mut minus = cw & !aw;
            while minus != 0 {
                let bit = minus.trailing_zeros() as usize;
                total -= self.lambda[w * 64 + bit];
                minus &= minus - 1;
            }
        }
        total
    }
}
