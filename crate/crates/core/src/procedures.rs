//! Sequential multiple-testing procedures.
//!
//! All rules observe every stream in lockstep (one observation per stream per
//! time step) except the incomplete rule, which runs one SPRT per stream and
//! freezes each statistic when its own test exits. Stopping criteria are
//! checked after each update, at integer times n >= 1.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::llr::LlrState;
use crate::rng::SeedSchedule;
use crate::streams::{Panel, SignalConfiguration};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProcedureSpec {
    /// Stop when the m-th and (m+1)-th order statistics separate by c;
    /// declare the top m streams.
    Gap { m: usize, c: f64 },
    /// Prior bounds l <= |A| <= u; stop at the earliest of tau1 (lower
    /// boundary), tau2 (everyone clear of (-a, b) with a plausible positive
    /// count), tau3 (upper boundary); declare the top p' streams where p' is
    /// the positive count clamped to [l, u].
    GapIntersection {
        l: usize,
        u: usize,
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    /// Stop when every statistic leaves (-a, b); declare the positive ones.
    Intersection { a: f64, b: f64 },
    /// One SPRT per stream with boundaries (-a, b); overall stopping time is
    /// the last exit, each stream is decided by its own exit side.
    Incomplete { a: f64, b: f64 },
}

#[derive(Error, Debug)]
pub enum ProcedureError {
    #[error("threshold {name} must be positive and finite, got {value}")]
    Threshold { name: &'static str, value: f64 },
    #[error("gap rule needs 1 <= m <= K-1, got m={m} with K={k}")]
    GapSize { m: usize, k: usize },
    #[error("gap-intersection rule needs 0 <= l < u <= K, got l={l}, u={u} with K={k}")]
    GiBounds { l: usize, u: usize, k: usize },
}

impl ProcedureSpec {
    pub fn validate(&self, k: usize) -> Result<(), ProcedureError> {
        fn pos(name: &'static str, value: f64) -> Result<(), ProcedureError> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ProcedureError::Threshold { name, value })
            }
        }
        match *self {
            ProcedureSpec::Gap { m, c } => {
                if m == 0 || m >= k {
                    return Err(ProcedureError::GapSize { m, k });
                }
                pos("c", c)
            }
            ProcedureSpec::GapIntersection { l, u, a, b, c, d } => {
                if l >= u || u > k {
                    return Err(ProcedureError::GiBounds { l, u, k });
                }
                pos("a", a)?;
                pos("b", b)?;
                pos("c", c)?;
                pos("d", d)
            }
            ProcedureSpec::Intersection { a, b } | ProcedureSpec::Incomplete { a, b } => {
                pos("a", a)?;
                pos("b", b)
            }
        }
    }

    pub fn kind_label(&self) -> &'static str {
        match self {
            ProcedureSpec::Gap { .. } => "gap",
            ProcedureSpec::GapIntersection { .. } => "gap-intersection",
            ProcedureSpec::Intersection { .. } => "intersection",
            ProcedureSpec::Incomplete { .. } => "incomplete",
        }
    }

    /// Thresholds as (a, b, c, d); entries the rule does not use are None.
    pub fn thresholds_abcd(&self) -> [Option<f64>; 4] {
        match *self {
            ProcedureSpec::Gap { c, .. } => [None, None, Some(c), None],
            ProcedureSpec::GapIntersection { a, b, c, d, .. } => {
                [Some(a), Some(b), Some(c), Some(d)]
            }
            ProcedureSpec::Intersection { a, b } | ProcedureSpec::Incomplete { a, b } => {
                [Some(a), Some(b), None, None]
            }
        }
    }
}

/// Which criterion ended a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopCause {
    Tau1,
    Tau2,
    Tau3,
    Gap,
    Intersection,
    Incomplete,
    Horizon,
}

impl StopCause {
    pub fn label(&self) -> &'static str {
        match self {
            StopCause::Tau1 => "tau1",
            StopCause::Tau2 => "tau2",
            StopCause::Tau3 => "tau3",
            StopCause::Gap => "gap",
            StopCause::Intersection => "intersection",
            StopCause::Incomplete => "incomplete",
            StopCause::Horizon => "horizon",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub stopping_time: u64,
    pub decision: SignalConfiguration,
    pub stopped_by: StopCause,
}

/// Gap rule stopping criterion: lambda^(m) - lambda^(m+1) >= c.
#[inline]
pub fn gap_should_stop(state: &LlrState, m: usize, c: f64) -> bool {
    state.ordered_value(m) - state.ordered_value(m + 1) >= c
}

/// Gap rule decision: the m streams with the largest statistics.
pub fn gap_decide(state: &LlrState, m: usize) -> SignalConfiguration {
    state.top_set(m)
}

/// Every statistic outside the continuation interval (-a, b).
#[inline]
pub fn all_outside(state: &LlrState, a: f64, b: f64) -> bool {
    state.values().iter().all(|&l| l <= -a || l >= b)
}

/// Gap-intersection stopping criterion; returns which component fired, with
/// tau1 taking priority over tau2 over tau3 when several hold at once.
#[inline]
pub fn gi_stop_cause(
    state: &LlrState,
    l: usize,
    u: usize,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
) -> Option<StopCause> {
    // tau1: the (l+1)-th statistic is decisively negative and separated from
    // the l-th. With l = 0 the rank-0 sentinel (-inf) keeps this off.
    if state.ordered_value(l + 1) <= -a && state.ordered_value(l) - state.ordered_value(l + 1) >= c
    {
        return Some(StopCause::Tau1);
    }
    let p = state.positive_count();
    if p >= l && p <= u && all_outside(state, a, b) {
        return Some(StopCause::Tau2);
    }
    // tau3: the u-th statistic is decisively positive and separated from the
    // (u+1)-th. With u = K the rank-(K+1) sentinel (+inf) keeps this off.
    if state.ordered_value(u) >= b && state.ordered_value(u) - state.ordered_value(u + 1) >= d {
        return Some(StopCause::Tau3);
    }
    None
}

/// Gap-intersection decision: the top p' statistics, p' = clamp(p(n), l, u).
pub fn gi_decide(state: &LlrState, l: usize, u: usize) -> SignalConfiguration {
    state.top_set(state.positive_count().clamp(l, u))
}

#[inline]
pub fn intersection_should_stop(state: &LlrState, a: f64, b: f64) -> bool {
    all_outside(state, a, b)
}

/// Intersection decision: the streams with positive statistics (equivalently,
/// those at or above b once stopped).
pub fn intersection_decide(state: &LlrState) -> SignalConfiguration {
    state.positive_set()
}

/// Per-step stopping dispatch for the lockstep rules. The incomplete rule has
/// no lockstep criterion and panics here; use `incomplete_run`.
pub fn stop_cause(spec: &ProcedureSpec, state: &LlrState) -> Option<StopCause> {
    match *spec {
        ProcedureSpec::Gap { m, c } => gap_should_stop(state, m, c).then_some(StopCause::Gap),
        ProcedureSpec::GapIntersection { l, u, a, b, c, d } => {
            gi_stop_cause(state, l, u, a, b, c, d)
        }
        ProcedureSpec::Intersection { a, b } => {
            intersection_should_stop(state, a, b).then_some(StopCause::Intersection)
        }
        ProcedureSpec::Incomplete { .. } => {
            panic!("incomplete rule stops per stream; use incomplete_run")
        }
    }
}

/// Decision of a lockstep rule at the current state (also used for trials
/// truncated at the horizon).
pub fn decide(spec: &ProcedureSpec, state: &LlrState) -> SignalConfiguration {
    match *spec {
        ProcedureSpec::Gap { m, .. } => gap_decide(state, m),
        ProcedureSpec::GapIntersection { l, u, .. } => gi_decide(state, l, u),
        ProcedureSpec::Intersection { .. } => intersection_decide(state),
        ProcedureSpec::Incomplete { .. } => {
            panic!("incomplete rule decides per stream; use incomplete_run")
        }
    }
}

/// Simulates one trial of `spec` on `panel` under the configuration `truth`.
/// Stream s of replication `replication` reads substream s of the schedule,
/// so trials couple across procedures sharing (schedule, replication). If no
/// stop occurs by `horizon` the outcome is flagged `StopCause::Horizon` and
/// carries the rule's current decision. Returns the outcome together with the
/// final statistic state (the importance-sampling weight is a function of it).
pub fn run_procedure(
    panel: &Panel,
    truth: &SignalConfiguration,
    spec: ProcedureSpec,
    schedule: &SeedSchedule,
    replication: u64,
    horizon: u64,
) -> (TrialOutcome, LlrState) {
    let k = panel.num_streams();
    spec.validate(k).expect("invalid procedure spec");
    assert_eq!(truth.num_streams(), k, "configuration/panel size mismatch");
    assert!(horizon >= 1, "horizon must be at least 1");
    if let ProcedureSpec::Incomplete { a, b } = spec {
        return incomplete_run(panel, truth, a, b, schedule, replication, horizon);
    }
    let mut rngs: Vec<ChaCha8Rng> = (0..k)
        .map(|s| schedule.stream_rng(replication, s as u32))
        .collect();
    let mut state = LlrState::new(k);
    let mut inc = vec![0.0; k];
    for _ in 1..=horizon {
        for (s, slot) in inc.iter_mut().enumerate() {
            *slot = panel
                .stream(s)
                .sample_increment(truth.hypothesis(s), &mut rngs[s]);
        }
        state.update(&inc);
        if let Some(cause) = stop_cause(&spec, &state) {
            let outcome = TrialOutcome {
                stopping_time: state.time(),
                decision: decide(&spec, &state),
                stopped_by: cause,
            };
            return (outcome, state);
        }
    }
    let outcome = TrialOutcome {
        stopping_time: horizon,
        decision: decide(&spec, &state),
        stopped_by: StopCause::Horizon,
    };
    (outcome, state)
}

/// The incomplete rule: stream s runs its own SPRT with boundaries (-a, b)
/// and keeps its statistic frozen after exiting; the trial ends at the last
/// exit. Streams that have not exited by the horizon are decided by the sign
/// of their statistic and the outcome is flagged. The returned state holds
/// each statistic at its own freezing time, which is exactly the quantity the
/// likelihood ratio of this procedure is built from.
pub fn incomplete_run(
    panel: &Panel,
    truth: &SignalConfiguration,
    a: f64,
    b: f64,
    schedule: &SeedSchedule,
    replication: u64,
    horizon: u64,
) -> (TrialOutcome, LlrState) {
    let k = panel.num_streams();
    ProcedureSpec::Incomplete { a, b }
        .validate(k)
        .expect("invalid procedure spec");
    assert_eq!(truth.num_streams(), k, "configuration/panel size mismatch");
    assert!(horizon >= 1, "horizon must be at least 1");
    let mut values = vec![0.0; k];
    let mut decision = SignalConfiguration::empty(k);
    let mut stopping_time = 0u64;
    let mut truncated = false;
    for (s, value) in values.iter_mut().enumerate() {
        let mut rng = schedule.stream_rng(replication, s as u32);
        let model = panel.stream(s);
        let hyp = truth.hypothesis(s);
        let mut lam = 0.0;
        let mut exited = false;
        for n in 1..=horizon {
            let inc = model.sample_increment(hyp, &mut rng);
            assert!(inc.is_finite(), "non-finite LLR increment");
            lam += inc;
            if lam <= -a || lam >= b {
                exited = true;
                stopping_time = stopping_time.max(n);
                if lam >= b {
                    decision.insert(s);
                }
                break;
            }
        }
        if !exited {
            truncated = true;
            stopping_time = horizon;
            if lam > 0.0 {
                decision.insert(s);
            }
        }
        *value = lam;
    }
    let outcome = TrialOutcome {
        stopping_time,
        decision,
        stopped_by: if truncated {
            StopCause::Horizon
        } else {
            StopCause::Incomplete
        },
    };
    (outcome, LlrState::from_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{Hypothesis, StreamModel};

    fn state_of(values: &[f64]) -> LlrState {
        LlrState::from_values(values.to_vec())
    }

    fn gaussian_panel(k: usize) -> Panel {
        Panel::homogeneous(StreamModel::gaussian_mean_shift(0.0, 0.5, 1.0).unwrap(), k).unwrap()
    }

    fn bernoulli_panel(k: usize) -> Panel {
        Panel::homogeneous(StreamModel::bernoulli(0.3, 0.7).unwrap(), k).unwrap()
    }

    #[test]
    fn gap_predicate_and_decision() {
        let s = state_of(&[0.2, -0.1, 0.5]);
        assert!(gap_should_stop(&s, 1, 0.3));
        assert!(!gap_should_stop(&s, 1, 0.31));
        assert!(gap_should_stop(&s, 2, 0.3));
        assert_eq!(gap_decide(&s, 2).iter().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn gi_example_fires_tau1_before_tau2() {
        // both tau1 and tau2 hold here; priority picks tau1
        let s = state_of(&[4.0, -3.0, -3.5]);
        let cause = gi_stop_cause(&s, 1, 2, 2.0, 2.0, 3.0, 3.0);
        assert_eq!(cause, Some(StopCause::Tau1));
        assert_eq!(gi_decide(&s, 1, 2).iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn gi_tau2_beats_tau3() {
        let s = state_of(&[5.0, 3.0, -2.0]);
        // p = 2 in [1,2], all outside (-1,1): tau2; tau3 also holds
        assert_eq!(
            gi_stop_cause(&s, 1, 2, 1.0, 1.0, 10.0, 0.5),
            Some(StopCause::Tau2)
        );
        // with a larger `a` tau2 fails (|-2| < 3) and tau3 fires alone
        assert_eq!(
            gi_stop_cause(&s, 1, 2, 3.0, 1.0, 10.0, 0.5),
            Some(StopCause::Tau3)
        );
    }

    #[test]
    fn gi_boundary_variants_disable_themselves() {
        // l = 0: tau1 must never fire even with everything decisively negative
        let s = state_of(&[-9.0, -8.0]);
        assert_eq!(
            gi_stop_cause(&s, 0, 1, 1.0, 1.0, 0.1, 0.1),
            Some(StopCause::Tau2)
        );
        // u = K: tau3 must never fire even with everything decisively positive
        let s = state_of(&[9.0, 8.0]);
        assert_eq!(
            gi_stop_cause(&s, 1, 2, 1.0, 1.0, 0.1, 0.1),
            Some(StopCause::Tau2)
        );
    }

    #[test]
    fn gi_decision_clamps_positive_count() {
        let low = state_of(&[1.0, -1.0, -2.0, -3.0, -4.0, -5.0, -6.0, -7.0, -8.0, -9.0]);
        assert_eq!(gi_decide(&low, 3, 7).cardinality(), 3);
        let high = state_of(&[9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.5]);
        assert_eq!(gi_decide(&high, 3, 7).cardinality(), 7);
        let mid = state_of(&[9.0, 8.0, 7.0, 6.0, 5.0, -4.0, -3.0, -2.0, -1.0, -0.5]);
        assert_eq!(gi_decide(&mid, 3, 7).cardinality(), 5);
    }

    #[test]
    fn intersection_predicate_and_decision() {
        let going = state_of(&[2.5, -0.5]);
        assert!(!intersection_should_stop(&going, 2.0, 2.0));
        let done = state_of(&[2.5, -2.0]);
        assert!(intersection_should_stop(&done, 2.0, 2.0));
        assert_eq!(intersection_decide(&done).iter().collect::<Vec<_>>(), [0]);
    }

    #[test]
    fn validation_catches_bad_specs() {
        assert!(ProcedureSpec::Gap { m: 0, c: 1.0 }.validate(5).is_err());
        assert!(ProcedureSpec::Gap { m: 5, c: 1.0 }.validate(5).is_err());
        assert!(ProcedureSpec::Gap { m: 2, c: -1.0 }.validate(5).is_err());
        assert!(ProcedureSpec::Gap {
            m: 2,
            c: f64::INFINITY
        }
        .validate(5)
        .is_err());
        assert!(ProcedureSpec::GapIntersection {
            l: 3,
            u: 3,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            d: 1.0
        }
        .validate(5)
        .is_err());
        assert!(ProcedureSpec::GapIntersection {
            l: 0,
            u: 6,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            d: 1.0
        }
        .validate(5)
        .is_err());
        assert!(ProcedureSpec::Intersection { a: 1.0, b: 0.0 }
            .validate(5)
            .is_err());
        assert!(ProcedureSpec::Gap { m: 2, c: 3.0 }.validate(5).is_ok());
    }

    // Exhaustive lattice oracle: walk every Bernoulli outcome path and check
    // the incremental state's stopping answers against a from-scratch
    // evaluation of the defining inequalities on the raw sums.
    #[test]
    fn bernoulli_lattice_matches_brute_force() {
        let l1 = libm::log(0.7 / 0.3);
        let l0 = -l1;
        let k = 3;
        let gap = ProcedureSpec::Gap { m: 1, c: 1.2 };
        let gi = ProcedureSpec::GapIntersection {
            l: 1,
            u: 2,
            a: 1.2,
            b: 1.2,
            c: 1.5,
            d: 1.5,
        };
        let inter = ProcedureSpec::Intersection { a: 1.2, b: 1.2 };

        fn brute_stop(spec: &ProcedureSpec, raw: &[f64]) -> Option<StopCause> {
            let mut sorted: Vec<usize> = (0..raw.len()).collect();
            sorted.sort_by(|&i, &j| raw[j].partial_cmp(&raw[i]).unwrap().then(i.cmp(&j)));
            let val = |rank: usize| -> f64 {
                if rank == 0 {
                    f64::NEG_INFINITY
                } else if rank <= raw.len() {
                    raw[sorted[rank - 1]]
                } else {
                    f64::INFINITY
                }
            };
            let p = raw.iter().filter(|&&x| x > 0.0).count();
            match *spec {
                ProcedureSpec::Gap { m, c } => (val(m) - val(m + 1) >= c).then_some(StopCause::Gap),
                ProcedureSpec::GapIntersection { l, u, a, b, c, d } => {
                    if val(l + 1) <= -a && val(l) - val(l + 1) >= c {
                        Some(StopCause::Tau1)
                    } else if p >= l && p <= u && raw.iter().all(|&x| x <= -a || x >= b) {
                        Some(StopCause::Tau2)
                    } else if val(u) >= b && val(u) - val(u + 1) >= d {
                        Some(StopCause::Tau3)
                    } else {
                        None
                    }
                }
                ProcedureSpec::Intersection { a, b } => raw
                    .iter()
                    .all(|&x| x <= -a || x >= b)
                    .then_some(StopCause::Intersection),
                ProcedureSpec::Incomplete { .. } => unreachable!(),
            }
        }

        // depth-first over all outcome combinations, 8 branches per step
        #[allow(clippy::too_many_arguments)]
        fn walk(
            specs: &[ProcedureSpec],
            l1: f64,
            l0: f64,
            k: usize,
            depth: usize,
            state: &LlrState,
            raw: &[f64],
            active: &[bool],
        ) {
            if depth == 0 {
                return;
            }
            for mask in 0..(1u32 << k) {
                let inc: Vec<f64> = (0..k)
                    .map(|s| if mask >> s & 1 == 1 { l1 } else { l0 })
                    .collect();
                let mut next = state.clone();
                next.update(&inc);
                let next_raw: Vec<f64> = raw.iter().zip(&inc).map(|(r, i)| r + i).collect();
                let mut next_active = active.to_vec();
                for (si, spec) in specs.iter().enumerate() {
                    if !active[si] {
                        continue;
                    }
                    let fast = stop_cause(spec, &next);
                    let slow = brute_stop(spec, &next_raw);
                    assert_eq!(fast, slow, "{spec:?} raw={next_raw:?}");
                    if let Some(_cause) = fast {
                        // decisions must match a from-scratch sort as well
                        let mut sorted: Vec<usize> = (0..k).collect();
                        sorted.sort_by(|&i, &j| {
                            next_raw[j]
                                .partial_cmp(&next_raw[i])
                                .unwrap()
                                .then(i.cmp(&j))
                        });
                        let want: Vec<usize> = match *spec {
                            ProcedureSpec::Gap { m, .. } => {
                                let mut v = sorted[..m].to_vec();
                                v.sort_unstable();
                                v
                            }
                            ProcedureSpec::GapIntersection { l, u, .. } => {
                                let p = next_raw.iter().filter(|&&x| x > 0.0).count().clamp(l, u);
                                let mut v = sorted[..p].to_vec();
                                v.sort_unstable();
                                v
                            }
                            ProcedureSpec::Intersection { .. } => {
                                (0..k).filter(|&s| next_raw[s] > 0.0).collect()
                            }
                            ProcedureSpec::Incomplete { .. } => unreachable!(),
                        };
                        assert_eq!(
                            decide(spec, &next).iter().collect::<Vec<_>>(),
                            want,
                            "{spec:?} decision at raw={next_raw:?}"
                        );
                        next_active[si] = false;
                    }
                }
                if next_active.iter().any(|&a| a) {
                    walk(specs, l1, l0, k, depth - 1, &next, &next_raw, &next_active);
                }
            }
        }

        let specs = [gap, gi, inter];
        let state = LlrState::new(k);
        let raw = vec![0.0; k];
        walk(&specs, l1, l0, k, 4, &state, &raw, &[true; 3]);
    }

    #[test]
    fn horizon_truncation_is_flagged() {
        let panel = gaussian_panel(4);
        let truth = SignalConfiguration::prefix(4, 1);
        let schedule = SeedSchedule::new(3);
        let spec = ProcedureSpec::Gap { m: 1, c: 1e6 };
        let (outcome, state) = run_procedure(&panel, &truth, spec, &schedule, 0, 7);
        assert_eq!(outcome.stopped_by, StopCause::Horizon);
        assert_eq!(outcome.stopping_time, 7);
        assert_eq!(state.time(), 7);
        assert_eq!(outcome.decision.cardinality(), 1);
    }

    #[test]
    fn gap_stop_satisfies_gap_invariant() {
        let panel = gaussian_panel(6);
        let truth = SignalConfiguration::prefix(6, 2);
        let schedule = SeedSchedule::new(9);
        let spec = ProcedureSpec::Gap { m: 2, c: 2.5 };
        for rep in 0..200 {
            let (outcome, state) = run_procedure(&panel, &truth, spec, &schedule, rep, 100_000);
            assert_eq!(outcome.stopped_by, StopCause::Gap);
            assert!(state.ordered_value(2) - state.ordered_value(3) >= 2.5);
            assert_eq!(outcome.decision.cardinality(), 2);
            // first stop: one step earlier the criterion must fail; replay
            let (earlier, _) = run_procedure(
                &panel,
                &truth,
                spec,
                &schedule,
                rep,
                outcome.stopping_time - 1,
            );
            assert_eq!(earlier.stopped_by, StopCause::Horizon);
        }
    }

    #[test]
    fn incomplete_matches_manual_sprts() {
        let panel = bernoulli_panel(3);
        let truth = SignalConfiguration::prefix(3, 1);
        let schedule = SeedSchedule::new(21);
        for rep in 0..300 {
            let (outcome, state) = incomplete_run(&panel, &truth, 1.5, 1.5, &schedule, rep, 10_000);
            let mut t_max = 0u64;
            for s in 0..3 {
                let mut rng = schedule.stream_rng(rep, s as u32);
                let mut lam = 0.0;
                let mut t = 0u64;
                loop {
                    t += 1;
                    lam += panel
                        .stream(s)
                        .sample_increment(truth.hypothesis(s), &mut rng);
                    if lam <= -1.5 || lam >= 1.5 {
                        break;
                    }
                }
                t_max = t_max.max(t);
                assert_eq!(state.value(s), lam, "stream {s} frozen value");
                assert_eq!(outcome.decision.contains(s), lam >= 1.5);
            }
            assert_eq!(outcome.stopping_time, t_max);
            assert_eq!(outcome.stopped_by, StopCause::Incomplete);
        }
    }

    #[test]
    fn incomplete_never_outlasts_intersection() {
        let panel = gaussian_panel(5);
        let truth = SignalConfiguration::prefix(5, 2);
        let schedule = SeedSchedule::new(33);
        for rep in 0..500 {
            let (inc, _) = run_procedure(
                &panel,
                &truth,
                ProcedureSpec::Incomplete { a: 3.0, b: 3.0 },
                &schedule,
                rep,
                100_000,
            );
            let (int, _) = run_procedure(
                &panel,
                &truth,
                ProcedureSpec::Intersection { a: 3.0, b: 3.0 },
                &schedule,
                rep,
                100_000,
            );
            assert!(inc.stopping_time <= int.stopping_time, "rep {rep}");
        }
    }

    #[test]
    fn gi_with_trivial_bounds_is_intersection() {
        let panel = gaussian_panel(5);
        let truth = SignalConfiguration::prefix(5, 3);
        let schedule = SeedSchedule::new(55);
        let gi = ProcedureSpec::GapIntersection {
            l: 0,
            u: 5,
            a: 2.5,
            b: 2.5,
            c: 9.0,
            d: 9.0,
        };
        let inter = ProcedureSpec::Intersection { a: 2.5, b: 2.5 };
        for rep in 0..500 {
            let (g, _) = run_procedure(&panel, &truth, gi, &schedule, rep, 100_000);
            let (i, _) = run_procedure(&panel, &truth, inter, &schedule, rep, 100_000);
            assert_eq!(g.stopping_time, i.stopping_time, "rep {rep}");
            assert_eq!(g.decision, i.decision, "rep {rep}");
            assert_eq!(g.stopped_by, StopCause::Tau2);
        }
    }

    #[test]
    fn coupled_trials_share_increments_across_specs() {
        // same (schedule, replication) => same sample paths, so the gap rule
        // with a larger threshold can only stop later
        let panel = gaussian_panel(4);
        let truth = SignalConfiguration::prefix(4, 1);
        let schedule = SeedSchedule::new(77);
        for rep in 0..200 {
            let (small, _) = run_procedure(
                &panel,
                &truth,
                ProcedureSpec::Gap { m: 1, c: 2.0 },
                &schedule,
                rep,
                100_000,
            );
            let (large, _) = run_procedure(
                &panel,
                &truth,
                ProcedureSpec::Gap { m: 1, c: 4.0 },
                &schedule,
                rep,
                100_000,
            );
            assert!(small.stopping_time <= large.stopping_time);
        }
    }

    #[test]
    fn hypothesis_assignment_follows_truth() {
        let truth = SignalConfiguration::from_indices(2, [1]).unwrap();
        assert_eq!(truth.hypothesis(0), Hypothesis::Null);
        assert_eq!(truth.hypothesis(1), Hypothesis::Signal);
    }
}
