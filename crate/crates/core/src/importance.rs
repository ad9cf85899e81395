//! Importance-sampling estimation of familywise error probabilities.
//!
//! The error events are rare at realistic thresholds, so each replication is
//! simulated under a mixture of alternative configurations chosen to make the
//! event likely, and reweighted by the inverse mixture likelihood ratio:
//! P_A(error) = E*[1/Lambda* ; error]. The mixture is sampled by drawing a
//! component first and simulating the whole path under it.

use thiserror::Error;

use crate::llr::LlrState;
use crate::procedures::{run_procedure, ProcedureSpec, StopCause};
use crate::rng::{uniform_open01, SeedSchedule};
use crate::stats::{accumulate_replications, Estimate};
use crate::streams::{Panel, SignalConfiguration};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorType {
    /// Some declared stream is a null: d \ A nonempty.
    TypeI,
    /// Some signal is not declared: A \ d nonempty.
    TypeII,
}

impl ErrorType {
    pub fn label(&self) -> &'static str {
        match self {
            ErrorType::TypeI => "type-i",
            ErrorType::TypeII => "type-ii",
        }
    }
}

#[derive(Error, Debug)]
pub enum ProposalError {
    #[error("the requested error event has probability zero for this configuration")]
    ImpossibleEvent,
}

/// Sampling mixture over alternative configurations.
#[derive(Clone, Debug)]
pub struct Proposal {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    configs: Vec<SignalConfiguration>,
    cumulative: Vec<f64>,
}

impl Proposal {
    pub fn new(components: Vec<(f64, SignalConfiguration)>) -> Self {
        assert!(
            !components.is_empty(),
            "proposal needs at least one component"
        );
        let mut weights = Vec::with_capacity(components.len());
        let mut configs = Vec::with_capacity(components.len());
        for (w, config) in components {
            assert!(
                w > 0.0 && w.is_finite(),
                "component weights must be positive"
            );
            assert!(
                !configs.contains(&config),
                "proposal components must be distinct"
            );
            weights.push(w);
            configs.push(config);
        }
        let total: f64 = weights.iter().sum();
        assert!(
            (total - 1.0).abs() <= 1e-12,
            "weights must sum to 1, got {total}"
        );
        let log_weights = weights.iter().map(|&w| libm::log(w)).collect();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Proposal {
            weights,
            log_weights,
            configs,
            cumulative,
        }
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn config(&self, i: usize) -> &SignalConfiguration {
        &self.configs[i]
    }

    pub fn components(&self) -> impl Iterator<Item = (f64, &SignalConfiguration)> {
        self.weights.iter().copied().zip(self.configs.iter())
    }

    pub fn sample_component(&self, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        let u = uniform_open01(rng);
        self.cumulative
            .iter()
            .position(|&c| u <= c)
            .unwrap_or(self.configs.len() - 1)
    }
}

fn swap_components(
    truth: &SignalConfiguration,
    total_weight: f64,
) -> Vec<(f64, SignalConfiguration)> {
    let s = truth.cardinality();
    let k = truth.num_streams();
    let count = s * (k - s);
    if count == 0 || total_weight == 0.0 {
        return Vec::new();
    }
    let w = total_weight / count as f64;
    let mut out = Vec::with_capacity(count);
    for k_out in truth.iter() {
        for j_in in truth.complement_iter() {
            out.push((w, truth.with_swapped(k_out, j_in)));
        }
    }
    out
}

fn one_sided_components(
    truth: &SignalConfiguration,
    error_type: ErrorType,
    total_weight: f64,
) -> Vec<(f64, SignalConfiguration)> {
    let s = truth.cardinality();
    let k = truth.num_streams();
    let count = match error_type {
        ErrorType::TypeI => k - s,
        ErrorType::TypeII => s,
    };
    if count == 0 || total_weight == 0.0 {
        return Vec::new();
    }
    let w = total_weight / count as f64;
    match error_type {
        ErrorType::TypeI => truth
            .complement_iter()
            .map(|j| (w, truth.with_inserted(j)))
            .collect(),
        ErrorType::TypeII => truth.iter().map(|j| (w, truth.with_removed(j))).collect(),
    }
}

/// The mixture proposal for estimating `error_type` of `spec` at the true
/// configuration `truth`.
///
/// Gap rule: uniform over the single swaps A\{k} + {j} (the only error event
/// is d != A, approached equally from both sides). Intersection, incomplete,
/// and gap-intersection strictly inside the prior bounds: uniform over single
/// additions (type I) or single removals (type II). Gap-intersection at a
/// prior boundary |A| in {l, u}: weight |A|/(1+|A|) on the swap mixture and
/// 1/(1+|A|) on the one-sided mixture; whichever half has no members loses
/// its weight to the other.
pub fn build_proposal(
    spec: &ProcedureSpec,
    truth: &SignalConfiguration,
    error_type: ErrorType,
) -> Result<Proposal, ProposalError> {
    let s = truth.cardinality();
    let components = match *spec {
        ProcedureSpec::Gap { m, .. } => {
            assert_eq!(s, m, "gap rule assumes exactly m signals");
            swap_components(truth, 1.0)
        }
        ProcedureSpec::Intersection { .. } | ProcedureSpec::Incomplete { .. } => {
            one_sided_components(truth, error_type, 1.0)
        }
        ProcedureSpec::GapIntersection { l, u, .. } => {
            assert!(l <= s && s <= u, "configuration outside the prior bounds");
            if s > l && s < u {
                one_sided_components(truth, error_type, 1.0)
            } else {
                let sf = s as f64;
                let mut swaps = swap_components(truth, sf / (1.0 + sf));
                let mut sided = one_sided_components(truth, error_type, 1.0 / (1.0 + sf));
                if swaps.is_empty() {
                    sided = one_sided_components(truth, error_type, 1.0);
                } else if sided.is_empty() {
                    swaps = swap_components(truth, 1.0);
                }
                swaps.extend(sided);
                swaps
            }
        }
    };
    if components.is_empty() {
        return Err(ProposalError::ImpossibleEvent);
    }
    Ok(Proposal::new(components))
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|&t| libm::exp(t - max)).sum();
    max + libm::log(sum)
}

/// log Lambda*_A at the stopping epoch: the log of
/// sum_i w_i exp(lambda^{C_i, A}) evaluated stably.
pub fn log_likelihood_ratio_at_stop(
    proposal: &Proposal,
    truth: &SignalConfiguration,
    state: &LlrState,
) -> f64 {
    let terms: Vec<f64> = proposal
        .log_weights
        .iter()
        .zip(&proposal.configs)
        .map(|(&lw, config)| lw + state.pairwise_llr(config, truth))
        .collect();
    log_sum_exp(&terms)
}

pub fn likelihood_ratio_at_stop(
    proposal: &Proposal,
    truth: &SignalConfiguration,
    state: &LlrState,
) -> f64 {
    libm::exp(log_likelihood_ratio_at_stop(proposal, truth, state))
}

/// Did the procedure's decision commit the given error against `truth`?
/// For the gap rule any wrong decision is simultaneously both error types, so
/// the event is d != A regardless of `error_type`.
pub fn is_error_event(
    spec: &ProcedureSpec,
    truth: &SignalConfiguration,
    decision: &SignalConfiguration,
    error_type: ErrorType,
) -> bool {
    match spec {
        ProcedureSpec::Gap { .. } => decision != truth,
        _ => match error_type {
            ErrorType::TypeI => !decision.is_subset(truth),
            ErrorType::TypeII => !truth.is_subset(decision),
        },
    }
}

/// Importance-sampling estimate of the familywise error probability.
///
/// Each replication draws a mixture component from the trial-level substream
/// (index K, never used by the data streams), simulates the full trial under
/// that component, and accumulates 1/Lambda* on the error event. Impossible
/// events (type I with no nulls, type II with no signals) return an exact 0.
/// Trials truncated at the horizon are counted in `horizon_hits` and scored
/// by their truncated decision.
pub fn estimate_fwe(
    panel: &Panel,
    truth: &SignalConfiguration,
    spec: ProcedureSpec,
    error_type: ErrorType,
    schedule: &SeedSchedule,
    reps: u64,
    horizon: u64,
) -> Estimate {
    let k = panel.num_streams();
    spec.validate(k).expect("invalid procedure spec");
    assert_eq!(truth.num_streams(), k, "configuration/panel size mismatch");
    assert!(reps >= 2, "need at least 2 replications");
    let proposal = match build_proposal(&spec, truth, error_type) {
        Ok(p) => p,
        Err(ProposalError::ImpossibleEvent) => return Estimate::exact_zero(reps),
    };
    let trial_substream = k as u32;
    let accum = accumulate_replications(reps, |rep| {
        let mut trial_rng = schedule.stream_rng(rep, trial_substream);
        let component = proposal.sample_component(&mut trial_rng);
        let (outcome, state) = run_procedure(
            panel,
            proposal.config(component),
            spec,
            schedule,
            rep,
            horizon,
        );
        let hit = outcome.stopped_by == StopCause::Horizon;
        let value = if is_error_event(&spec, truth, &outcome.decision, error_type) {
            libm::exp(-log_likelihood_ratio_at_stop(&proposal, truth, &state))
        } else {
            0.0
        };
        (value, hit)
    });
    Estimate::from_accum(&accum)
}
