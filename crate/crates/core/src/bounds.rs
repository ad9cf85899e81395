//! Analytic side of the problem: prior classes on the signal count, error
//! bounds for each procedure, conservative threshold choices, and the
//! information-theoretic lower bound on the expected sample size.

use thiserror::Error;

use crate::procedures::ProcedureSpec;
use crate::streams::{Panel, SignalConfiguration};

/// Prior knowledge about the number of signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorClass {
    /// Exactly m signals.
    Exact { m: usize },
    /// Between l and u signals inclusive.
    Bounded { l: usize, u: usize },
}

#[derive(Error, Debug)]
pub enum BoundsError {
    #[error("prior class must satisfy 0 <= l <= u <= K, got l={l}, u={u} with K={k}")]
    PriorRange { l: usize, u: usize, k: usize },
    #[error("error probability {name} must lie in (0, 1), got {value}")]
    ErrorProbability { name: &'static str, value: f64 },
}

impl PriorClass {
    /// Smallest admissible signal count.
    pub fn lower(&self) -> usize {
        match *self {
            PriorClass::Exact { m } => m,
            PriorClass::Bounded { l, .. } => l,
        }
    }

    /// Largest admissible signal count.
    pub fn upper(&self) -> usize {
        match *self {
            PriorClass::Exact { m } => m,
            PriorClass::Bounded { u, .. } => u,
        }
    }

    pub fn validate(&self, k: usize) -> Result<(), BoundsError> {
        let (l, u) = (self.lower(), self.upper());
        if l <= u && u <= k {
            Ok(())
        } else {
            Err(BoundsError::PriorRange { l, u, k })
        }
    }

    pub fn contains(&self, config: &SignalConfiguration) -> bool {
        let s = config.cardinality();
        self.lower() <= s && s <= self.upper()
    }

    pub fn label(&self) -> String {
        match *self {
            PriorClass::Exact { m } => format!("exact-{m}"),
            PriorClass::Bounded { l, u } => format!("bounded-{l}-{u}"),
        }
    }
}

/// Target familywise error probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl ErrorSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, BoundsError> {
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(BoundsError::ErrorProbability { name, value });
            }
        }
        Ok(ErrorSpec { alpha, beta })
    }

    pub fn symmetric(alpha: f64) -> Result<Self, BoundsError> {
        Self::new(alpha, alpha)
    }

    pub fn abs_log_alpha(&self) -> f64 {
        -libm::log(self.alpha)
    }

    pub fn abs_log_beta(&self) -> f64 {
        -libm::log(self.beta)
    }

    /// |log(alpha min beta)|.
    pub fn abs_log_min(&self) -> f64 {
        self.abs_log_alpha().max(self.abs_log_beta())
    }
}

/// Binary relative entropy between Bernoulli(x) and Bernoulli(1-y):
/// x log(x/(1-y)) + (1-x) log((1-x)/y), the exact constant in the sample-size
/// lower bound for a test with error probabilities x and y.
pub fn phi(x: f64, y: f64) -> f64 {
    assert!(
        x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0,
        "phi needs arguments in (0,1)"
    );
    x * libm::log(x / (1.0 - y)) + (1.0 - x) * libm::log((1.0 - x) / y)
}

/// Minimal KL numbers of a configuration: the easiest-to-lose signal and the
/// easiest-to-confuse null. Infinite when the respective side is empty.
#[derive(Clone, Copy, Debug)]
pub struct KlSummary {
    /// min over signal streams of KL(signal || null); +inf for no signals.
    pub min_signal_kl: f64,
    /// min over null streams of KL(null || signal); +inf for no nulls.
    pub min_null_kl: f64,
    pub arg_signal: Option<usize>,
    pub arg_null: Option<usize>,
}

pub fn kl_summary(panel: &Panel, truth: &SignalConfiguration) -> KlSummary {
    assert_eq!(panel.num_streams(), truth.num_streams());
    let mut summary = KlSummary {
        min_signal_kl: f64::INFINITY,
        min_null_kl: f64::INFINITY,
        arg_signal: None,
        arg_null: None,
    };
    for s in 0..panel.num_streams() {
        if truth.contains(s) {
            let d1 = panel.stream(s).kl_signal();
            if d1 < summary.min_signal_kl {
                summary.min_signal_kl = d1;
                summary.arg_signal = Some(s);
            }
        } else {
            let d0 = panel.stream(s).kl_null();
            if d0 < summary.min_null_kl {
                summary.min_null_kl = d0;
                summary.arg_null = Some(s);
            }
        }
    }
    summary
}

/// Conservative gap threshold c = |log(alpha min beta)| + log(m (K - m)).
pub fn conservative_gap_threshold(k: usize, m: usize, errors: &ErrorSpec) -> f64 {
    assert!(m >= 1 && m < k);
    errors.abs_log_min() + libm::log((m * (k - m)) as f64)
}

/// Conservative intersection thresholds (a, b) = (|log beta| + log K,
/// |log alpha| + log K).
pub fn conservative_intersection_thresholds(k: usize, errors: &ErrorSpec) -> (f64, f64) {
    assert!(k >= 1);
    let log_k = libm::log(k as f64);
    (
        errors.abs_log_beta() + log_k,
        errors.abs_log_alpha() + log_k,
    )
}

/// Conservative gap-intersection thresholds (a, b, c, d) for prior bounds
/// (l, u): a and b as for the intersection rule, c = |log alpha| +
/// log((K - l) K), d = |log beta| + log(u K).
pub fn conservative_gi_thresholds(
    k: usize,
    l: usize,
    u: usize,
    errors: &ErrorSpec,
) -> (f64, f64, f64, f64) {
    assert!(l < u && u <= k);
    let (a, b) = conservative_intersection_thresholds(k, errors);
    let c = errors.abs_log_alpha() + libm::log(((k - l) * k) as f64);
    let d = errors.abs_log_beta() + libm::log((u * k) as f64);
    (a, b, c, d)
}

/// Familywise error bounds (type I, type II) for a procedure run against a
/// configuration with `s` signals out of `k`. Raw values; they may exceed 1
/// for small thresholds (see `cap_probability`).
///
/// Gap rule: both error types are bounded by m (K - m) e^{-c}; any wrong
/// fixed-size decision commits both kinds of error at once. Intersection and
/// incomplete rules: (K - s) e^{-b} and s e^{-a}. Gap-intersection:
/// (K - s)(e^{-b} + s e^{-c}) and s(e^{-a} + (K - s) e^{-d}).
pub fn fwe_bounds(spec: &ProcedureSpec, k: usize, s: usize) -> (f64, f64) {
    assert!(s <= k);
    let sf = s as f64;
    let nf = (k - s) as f64;
    match *spec {
        ProcedureSpec::Gap { m, c } => {
            assert_eq!(s, m, "gap rule error bound assumes exactly m signals");
            let bound = (m * (k - m)) as f64 * libm::exp(-c);
            (bound, bound)
        }
        ProcedureSpec::GapIntersection { a, b, c, d, .. } => (
            nf * (libm::exp(-b) + sf * libm::exp(-c)),
            sf * (libm::exp(-a) + nf * libm::exp(-d)),
        ),
        ProcedureSpec::Intersection { a, b } | ProcedureSpec::Incomplete { a, b } => {
            (nf * libm::exp(-b), sf * libm::exp(-a))
        }
    }
}

/// Worst-case error bounds over every signal count the prior admits.
pub fn worst_fwe_bounds(spec: &ProcedureSpec, k: usize, prior: &PriorClass) -> (f64, f64) {
    prior.validate(k).expect("invalid prior class");
    if let ProcedureSpec::Gap { m, .. } = spec {
        assert!(
            prior.lower() == *m && prior.upper() == *m,
            "gap rule error bound assumes exactly m signals"
        );
    }
    let mut worst = (0.0f64, 0.0f64);
    for s in prior.lower()..=prior.upper() {
        let (t1, t2) = fwe_bounds(spec, k, s);
        worst.0 = worst.0.max(t1);
        worst.1 = worst.1.max(t2);
    }
    worst
}

pub fn cap_probability(x: f64) -> f64 {
    x.min(1.0)
}

// The sample-size lower bound compares the true configuration A against
// alternatives B in the prior class. Its value is max over B of
// gamma(A, B) / D(A, B) with D(A, B) the total KL divergence of the streams
// where A and B disagree, and gamma depending on the direction of the
// disagreement: phi(alpha, beta) when B only adds streams, phi(beta, alpha)
// when B only removes, the larger of the two when it does both. For a fixed
// direction the numerator is constant and D is a sum of positive per-stream
// terms, so the maximum is attained by a single added stream (the smallest
// null KL), a single removed stream (the smallest signal KL), or the single
// swap combining both; anything larger only inflates D.

/// First-order lower bound on the expected sample size of any procedure with
/// familywise errors at most (alpha, beta) over `prior`, evaluated at the
/// true configuration `truth`. Returns 0 when the prior admits no alternative.
pub fn ess_lower_bound(
    panel: &Panel,
    truth: &SignalConfiguration,
    prior: &PriorClass,
    errors: &ErrorSpec,
) -> f64 {
    let k = panel.num_streams();
    prior.validate(k).expect("invalid prior class");
    assert!(
        prior.contains(truth),
        "true configuration outside the prior class"
    );
    let s = truth.cardinality();
    let kl = kl_summary(panel, truth);
    let gamma_add = phi(errors.alpha, errors.beta);
    let gamma_remove = phi(errors.beta, errors.alpha);

    let mut best = 0.0f64;
    if s < prior.upper() {
        best = best.max(gamma_add / kl.min_null_kl);
    }
    if s > prior.lower() {
        best = best.max(gamma_remove / kl.min_signal_kl);
    }
    if s > 0 && s < k {
        best = best.max(gamma_add.max(gamma_remove) / (kl.min_signal_kl + kl.min_null_kl));
    }
    best
}

/// First-order asymptotic expected sample size of the optimal procedure as
/// alpha, beta -> 0: the lower bound with phi replaced by its leading term
/// (phi(alpha, beta) ~ |log beta| and vice versa).
pub fn first_order_ess(
    panel: &Panel,
    truth: &SignalConfiguration,
    prior: &PriorClass,
    errors: &ErrorSpec,
) -> f64 {
    let k = panel.num_streams();
    prior.validate(k).expect("invalid prior class");
    assert!(
        prior.contains(truth),
        "true configuration outside the prior class"
    );
    let s = truth.cardinality();
    let kl = kl_summary(panel, truth);

    let mut best = 0.0f64;
    if s < prior.upper() {
        best = best.max(errors.abs_log_beta() / kl.min_null_kl);
    }
    if s > prior.lower() {
        best = best.max(errors.abs_log_alpha() / kl.min_signal_kl);
    }
    if s > 0 && s < k {
        best = best.max(errors.abs_log_min() / (kl.min_signal_kl + kl.min_null_kl));
    }
    best
}
