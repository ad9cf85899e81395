//! Data-stream models and signal configurations.
//!
//! Each stream is a simple-vs-simple testing problem: observations are i.i.d.
//! from `f0` (noise) or `f1` (signal), and the model knows how to sample its
//! own log-likelihood-ratio increment under either hypothesis. Stream indices
//! are 0-based throughout.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rng::{standard_normal, uniform_open01, MAX_SUBSTREAMS};

/// Which distribution drives a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    Null,
    Signal,
}

/// User-supplied increment model: samples LLR increments directly and
/// declares its Kullback-Leibler numbers.
pub trait IncrementModel: Send + Sync {
    fn sample(&self, hyp: Hypothesis, rng: &mut ChaCha8Rng) -> f64;
    /// KL(f0 || f1), the mean downward drift under noise.
    fn kl_null(&self) -> f64;
    /// KL(f1 || f0), the mean upward drift under signal.
    fn kl_signal(&self) -> f64;
}

#[derive(Error, Debug)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("panel needs at least 2 streams, got {0}")]
    PanelTooSmall(usize),
    #[error("panel supports at most {max} streams, got {got}")]
    PanelTooLarge { got: usize, max: usize },
    #[error("stream index {index} out of range for {k} streams")]
    StreamIndex { index: usize, k: usize },
}

#[derive(Clone)]
enum ModelKind {
    // increment = drift ± D with slope * z noise; precomputed from (theta0, theta1, sigma)
    Gaussian {
        theta0: f64,
        theta1: f64,
        sigma: f64,
        kl: f64,    // Delta^2 / (2 sigma^2), both directions
        slope: f64, // Delta / sigma
    },
    Bernoulli {
        p0: f64,
        p1: f64,
        l1: f64, // log(p1/p0), increment for observation 1
        l0: f64, // log((1-p1)/(1-p0)), increment for observation 0
        d0: f64,
        d1: f64,
    },
    Generic {
        model: Arc<dyn IncrementModel>,
        d0: f64,
        d1: f64,
    },
}

/// One stream's observation model.
#[derive(Clone)]
pub struct StreamModel {
    kind: ModelKind,
}

impl StreamModel {
    /// Gaussian observations N(theta0, sigma^2) vs N(theta1, sigma^2).
    pub fn gaussian_mean_shift(theta0: f64, theta1: f64, sigma: f64) -> Result<Self, ModelError> {
        if !theta0.is_finite() || !theta1.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "gaussian(theta0={theta0}, theta1={theta1}, sigma={sigma})"
            )));
        }
        if theta0 == theta1 {
            return Err(ModelError::InvalidParameter(
                "gaussian means must differ".into(),
            ));
        }
        let delta = theta1 - theta0;
        Ok(StreamModel {
            kind: ModelKind::Gaussian {
                theta0,
                theta1,
                sigma,
                kl: delta * delta / (2.0 * sigma * sigma),
                slope: delta / sigma,
            },
        })
    }

    /// Bernoulli observations with success probability p0 vs p1.
    pub fn bernoulli(p0: f64, p1: f64) -> Result<Self, ModelError> {
        let open01 = |p: f64| p.is_finite() && p > 0.0 && p < 1.0;
        if !open01(p0) || !open01(p1) {
            return Err(ModelError::InvalidParameter(format!(
                "bernoulli(p0={p0}, p1={p1}) needs probabilities in (0,1)"
            )));
        }
        if p0 == p1 {
            return Err(ModelError::InvalidParameter(
                "bernoulli probabilities must differ".into(),
            ));
        }
        let l1 = libm::log(p1 / p0);
        let l0 = libm::log((1.0 - p1) / (1.0 - p0));
        let d1 = p1 * l1 + (1.0 - p1) * l0;
        let d0 = -(p0 * l1 + (1.0 - p0) * l0);
        Ok(StreamModel {
            kind: ModelKind::Bernoulli {
                p0,
                p1,
                l1,
                l0,
                d0,
                d1,
            },
        })
    }

    /// Wraps a user-supplied increment sampler. The declared KL numbers must
    /// be positive and finite.
    pub fn generic(model: Arc<dyn IncrementModel>) -> Result<Self, ModelError> {
        let d0 = model.kl_null();
        let d1 = model.kl_signal();
        if !(d0.is_finite() && d0 > 0.0 && d1.is_finite() && d1 > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "generic model KL numbers must be positive and finite, got ({d0}, {d1})"
            )));
        }
        Ok(StreamModel {
            kind: ModelKind::Generic { model, d0, d1 },
        })
    }

    /// Samples one LLR increment under the given hypothesis.
    #[inline]
    pub fn sample_increment(&self, hyp: Hypothesis, rng: &mut ChaCha8Rng) -> f64 {
        match &self.kind {
            ModelKind::Gaussian { kl, slope, .. } => {
                let drift = match hyp {
                    Hypothesis::Signal => *kl,
                    Hypothesis::Null => -*kl,
                };
                drift + slope * standard_normal(rng)
            }
            ModelKind::Bernoulli { p0, p1, l1, l0, .. } => {
                let p = match hyp {
                    Hypothesis::Signal => *p1,
                    Hypothesis::Null => *p0,
                };
                if uniform_open01(rng) < p {
                    *l1
                } else {
                    *l0
                }
            }
            ModelKind::Generic { model, .. } => model.sample(hyp, rng),
        }
    }

    /// LLR increment of a raw observation, for the parametric models.
    /// Gaussian: ((theta1-theta0)/sigma^2) * (x - (theta0+theta1)/2).
    /// Bernoulli: log(p1/p0) for x=1, log((1-p1)/(1-p0)) for x=0.
    pub fn llr_increment(&self, x: f64) -> Option<f64> {
        match &self.kind {
            ModelKind::Gaussian {
                theta0,
                theta1,
                sigma,
                ..
            } => Some((theta1 - theta0) / (sigma * sigma) * (x - (theta0 + theta1) / 2.0)),
            ModelKind::Bernoulli { l1, l0, .. } => {
                if x == 1.0 {
                    Some(*l1)
                } else if x == 0.0 {
                    Some(*l0)
                } else {
                    None
                }
            }
            ModelKind::Generic { .. } => None,
        }
    }

    /// KL(f0 || f1): expected decrease of the LLR per observation under noise.
    pub fn kl_null(&self) -> f64 {
        match &self.kind {
            ModelKind::Gaussian { kl, .. } => *kl,
            ModelKind::Bernoulli { d0, .. } => *d0,
            ModelKind::Generic { d0, .. } => *d0,
        }
    }

    /// KL(f1 || f0): expected increase of the LLR per observation under signal.
    pub fn kl_signal(&self) -> f64 {
        match &self.kind {
            ModelKind::Gaussian { kl, .. } => *kl,
            ModelKind::Bernoulli { d1, .. } => *d1,
            ModelKind::Generic { d1, .. } => *d1,
        }
    }
}

impl fmt::Debug for StreamModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::Gaussian {
                theta0,
                theta1,
                sigma,
                ..
            } => write!(f, "Gaussian({theta0}, {theta1}, sigma={sigma})"),
            ModelKind::Bernoulli { p0, p1, .. } => write!(f, "Bernoulli({p0}, {p1})"),
            ModelKind::Generic { d0, d1, .. } => write!(f, "Generic(d0={d0}, d1={d1})"),
        }
    }
}

impl PartialEq for StreamModel {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (
                ModelKind::Gaussian {
                    theta0: a0,
                    theta1: a1,
                    sigma: s,
                    ..
                },
                ModelKind::Gaussian {
                    theta0: b0,
                    theta1: b1,
                    sigma: t,
                    ..
                },
            ) => a0 == b0 && a1 == b1 && s == t,
            (
                ModelKind::Bernoulli { p0: a0, p1: a1, .. },
                ModelKind::Bernoulli { p0: b0, p1: b1, .. },
            ) => a0 == b0 && a1 == b1,
            (ModelKind::Generic { model: a, .. }, ModelKind::Generic { model: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            _ => false,
        }
    }
}

/// A bank of independent streams. At least 2; the upper bound keeps stream
/// indices within the RNG substream space (one substream is reserved for
/// trial-level draws).
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    streams: Vec<StreamModel>,
}

pub const MAX_STREAMS: usize = (MAX_SUBSTREAMS - 1) as usize;

impl Panel {
    pub fn new(streams: Vec<StreamModel>) -> Result<Self, ModelError> {
        if streams.len() < 2 {
            return Err(ModelError::PanelTooSmall(streams.len()));
        }
        if streams.len() > MAX_STREAMS {
            return Err(ModelError::PanelTooLarge {
                got: streams.len(),
                max: MAX_STREAMS,
            });
        }
        Ok(Panel { streams })
    }

    /// K copies of the same model.
    pub fn homogeneous(model: StreamModel, k: usize) -> Result<Self, ModelError> {
        Panel::new(vec![model; k])
    }

    pub fn num_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn stream(&self, index: usize) -> &StreamModel {
        &self.streams[index]
    }

    pub fn streams(&self) -> &[StreamModel] {
        &self.streams
    }

    /// True when all streams share one model, so error probabilities and
    /// sample sizes depend on a signal configuration only through its size.
    pub fn is_exchangeable(&self) -> bool {
        self.streams.iter().all(|s| *s == self.streams[0])
    }
}

/// A subset of streams carrying signal, as a bitset over 0..K.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignalConfiguration {
    words: Vec<u64>,
    k: usize,
}

impl SignalConfiguration {
    pub fn empty(k: usize) -> Self {
        SignalConfiguration {
            words: vec![0; k.div_ceil(64)],
            k,
        }
    }

    pub fn full(k: usize) -> Self {
        let mut cfg = SignalConfiguration::empty(k);
        for i in 0..k {
            cfg.insert(i);
        }
        cfg
    }

    /// The first `count` streams: the canonical representative of its size
    /// class on an exchangeable panel.
    pub fn prefix(k: usize, count: usize) -> Self {
        assert!(count <= k, "prefix size {count} exceeds {k} streams");
        let mut cfg = SignalConfiguration::empty(k);
        for i in 0..count {
            cfg.insert(i);
        }
        cfg
    }

    pub fn from_indices<I>(k: usize, indices: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut cfg = SignalConfiguration::empty(k);
        for index in indices {
            if index >= k {
                return Err(ModelError::StreamIndex { index, k });
            }
            cfg.insert(index);
        }
        Ok(cfg)
    }

    pub fn num_streams(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        debug_assert!(index < self.k);
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn insert(&mut self, index: usize) {
        assert!(index < self.k, "stream index {index} out of range");
        self.words[index / 64] |= 1 << (index % 64);
    }

    pub fn remove(&mut self, index: usize) {
        assert!(index < self.k, "stream index {index} out of range");
        self.words[index / 64] &= !(1 << (index % 64));
    }

    pub fn cardinality(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hypothesis(&self, index: usize) -> Hypothesis {
        if self.contains(index) {
            Hypothesis::Signal
        } else {
            Hypothesis::Null
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&i| self.contains(i))
    }

    pub fn complement_iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&i| !self.contains(i))
    }

    /// True when every member of `self` is also in `other`.
    pub fn is_subset(&self, other: &SignalConfiguration) -> bool {
        assert_eq!(self.k, other.k);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Copy with `add` inserted and `drop` removed.
    pub fn with_swapped(&self, drop: usize, add: usize) -> SignalConfiguration {
        let mut cfg = self.clone();
        cfg.remove(drop);
        cfg.insert(add);
        cfg
    }

    pub fn with_inserted(&self, add: usize) -> SignalConfiguration {
        let mut cfg = self.clone();
        cfg.insert(add);
        cfg
    }

    pub fn with_removed(&self, drop: usize) -> SignalConfiguration {
        let mut cfg = self.clone();
        cfg.remove(drop);
        cfg
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Plus-separated stream indices, e.g. "0+2+5"; "none" when empty.
    /// Comma-free so it can sit in a CSV field.
    pub fn descriptor(&self) -> String {
        if self.cardinality() == 0 {
            return "none".into();
        }
        let mut out = String::new();
        for i in self.iter() {
            if !out.is_empty() {
                out.push('+');
            }
            out.push_str(&i.to_string());
        }
        out
    }
}

impl fmt::Debug for SignalConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
