//! Sequential multiple hypothesis testing across independent data streams.
//!
//! Each of K streams carries a simple null-vs-signal testing problem; the
//! goal is to observe all streams sequentially, stop as early as possible,
//! and declare the signal subset with familywise control of both false
//! alarms and misses, exploiting prior knowledge on the number of signals
//! (exactly m, or between l and u).
//!
//! The crate provides:
//!
//! - stream models with log-likelihood-ratio increments and KL numbers
//!   ([`streams`]);
//! - the running LLR statistics with their order structure ([`llr`]);
//! - the gap, gap-intersection, intersection, and incomplete stopping rules
//!   ([`procedures`]);
//! - analytic error bounds, conservative thresholds, and the optimality
//!   lower bound on the expected sample size ([`bounds`]);
//! - importance-sampling estimation of the rare error probabilities
//!   ([`importance`]);
//! - plain Monte Carlo, worst-case search over a prior class, and threshold
//!   calibration ([`montecarlo`]).
//!
//! Every simulation is deterministic given a seed: replications and streams
//! draw from disjoint counter-based substreams, and parallel reductions are
//! ordered, so results are identical across thread counts.

pub mod bounds;
pub mod importance;
pub mod llr;
pub mod montecarlo;
pub mod procedures;
pub mod rng;
pub mod stats;
pub mod streams;

pub use bounds::{
    cap_probability, conservative_gap_threshold, conservative_gi_thresholds,
    conservative_intersection_thresholds, ess_lower_bound, first_order_ess, fwe_bounds, kl_summary,
    phi, worst_fwe_bounds, BoundsError, ErrorSpec, KlSummary, PriorClass,
};
pub use importance::{
    build_proposal, estimate_fwe, is_error_event, likelihood_ratio_at_stop,
    log_likelihood_ratio_at_stop, ErrorType, Proposal, ProposalError,
};
pub use llr::LlrState;
pub use montecarlo::{
    calibrate, class_representatives, estimate_ess, estimate_fwe_plain, max_fwe_over_class,
    simulate_summary, CalibrationOptions, CalibrationResult, MonteCarloError, ProcedureFamily,
    SimulationSummary, ENUMERATION_CAP,
};
pub use procedures::{
    decide, incomplete_run, run_procedure, stop_cause, ProcedureError, ProcedureSpec, StopCause,
    TrialOutcome,
};
pub use rng::SeedSchedule;
pub use stats::Estimate;
pub use streams::{
    Hypothesis, IncrementModel, ModelError, Panel, SignalConfiguration, StreamModel,
};
