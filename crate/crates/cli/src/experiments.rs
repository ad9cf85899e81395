//! The two canned studies behind the `table1` and `figures` subcommands.
//!
//! Both return typed rows rather than text so the CSV layer and the
//! acceptance tests consume the same numbers. All randomness descends from
//! a single seed through fixed schedule labels, so reruns are bitwise
//! identical regardless of thread count.

use anyhow::{ensure, Result};
use seqmht::{
    calibrate, ess_lower_bound, estimate_ess, estimate_fwe, first_order_ess, fwe_bounds,
    CalibrationOptions, ErrorSpec, ErrorType, Estimate, Panel, ProcedureFamily, ProcedureSpec,
    SeedSchedule, SignalConfiguration,
};

/// Gap-rule sizes tabulated by `table1`.
pub const TABLE_GAP_SIZES: [usize; 3] = [1, 3, 5];
/// Signal cardinalities tabulated for the gap-intersection rule.
pub const TABLE_GI_CARDS: [usize; 4] = [3, 4, 5, 7];
/// Cardinality bounds of the gap-intersection rule in the table.
pub const TABLE_GI_BOUNDS: (usize, usize) = (3, 7);
/// Fixed threshold scalar used for every row of the table.
pub const TABLE_SCALAR: f64 = 10.0;

/// One row of the fixed-threshold benchmark table: a procedure evaluated at
/// a single true signal cardinality.
#[derive(Clone, Debug)]
pub struct TableRow {
    pub procedure: &'static str,
    /// m for gap rows; the true signal cardinality for gap-intersection rows.
    pub card: usize,
    /// The threshold scalar (c for the gap rule, b for gap-intersection).
    pub threshold: f64,
    /// Importance-sampled probability that the decision errs.
    pub error: Estimate,
    pub ess: Estimate,
    /// Closed-form type-I familywise error bound at this configuration.
    pub analytic_bound: f64,
}

/// Benchmark table on a homogeneous panel: the gap rule at c = 10 for
/// m in {1, 3, 5}, and the gap-intersection rule with cardinality bounds
/// (3, 7) at a = b = 10, c = d = 10 + log 7, for four true cardinalities.
pub fn run_table1(panel: &Panel, reps: u64, horizon: u64, seed: u64) -> Vec<TableRow> {
    let k = panel.num_streams();
    let base = SeedSchedule::new(seed);
    let mut rows = Vec::new();
    let mut row_index = 0u64;

    let push = |spec: ProcedureSpec,
                label: &'static str,
                card: usize,
                rows: &mut Vec<TableRow>,
                row_index: &mut u64| {
        let truth = SignalConfiguration::prefix(k, card);
        let error_schedule = base.derive(10 + 2 * *row_index);
        let ess_schedule = base.derive(11 + 2 * *row_index);
        *row_index += 1;
        rows.push(TableRow {
            procedure: label,
            card,
            threshold: TABLE_SCALAR,
            error: estimate_fwe(
                panel,
                &truth,
                spec,
                ErrorType::TypeI,
                &error_schedule,
                reps,
                horizon,
            ),
            ess: estimate_ess(panel, &truth, spec, &ess_schedule, reps, horizon),
            analytic_bound: fwe_bounds(&spec, k, card).0,
        });
    };

    for m in TABLE_GAP_SIZES {
        let spec = ProcedureSpec::Gap { m, c: TABLE_SCALAR };
        push(spec, "gap", m, &mut rows, &mut row_index);
    }

    let (l, u) = TABLE_GI_BOUNDS;
    let gi = ProcedureSpec::GapIntersection {
        l,
        u,
        a: TABLE_SCALAR,
        b: TABLE_SCALAR,
        c: TABLE_SCALAR + libm::log(u as f64),
        d: TABLE_SCALAR + libm::log(u as f64),
    };
    for card in TABLE_GI_CARDS {
        push(gi, "gap-intersection", card, &mut rows, &mut row_index);
    }
    rows
}

/// Replication counts for the three kinds of estimator runs in a sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepReps {
    /// Per threshold evaluation inside calibration.
    pub calibration: u64,
    /// For expected-sample-size estimates.
    pub ess: u64,
    /// For importance-sampled error estimates.
    pub error: u64,
}

#[derive(Clone, Debug)]
pub struct SweepParams {
    /// Symmetric error targets, strictly decreasing.
    pub alpha_grid: Vec<f64>,
    pub families: Vec<ProcedureFamily>,
    /// True signal cardinalities to report; rows are emitted only for
    /// cardinalities the rule's prior class allows.
    pub cards: Vec<usize>,
    pub reps: SweepReps,
    /// Relative calibration tolerance on the worst-case error.
    pub tol: f64,
    pub horizon: u64,
    pub seed: u64,
}

/// Whether thresholds in a sweep row are closed-form or calibrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdSource {
    Conservative,
    Calibrated,
}

impl ThresholdSource {
    pub fn label(self) -> &'static str {
        match self {
            ThresholdSource::Conservative => "conservative",
            ThresholdSource::Calibrated => "calibrated",
        }
    }
}

/// One sweep row: a rule at one error level, threshold source, and true
/// signal cardinality. When calibration fails, the row carries the failure
/// message and no estimates.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub rule: &'static str,
    pub alpha: f64,
    pub card: usize,
    pub source: ThresholdSource,
    /// The free threshold scalar; absent when calibration failed.
    pub scalar: Option<f64>,
    pub ess: Option<Estimate>,
    /// Importance-sampled type-I familywise error at this configuration.
    pub error: Option<Estimate>,
    /// First-order optimal expected sample size as the targets shrink.
    pub first_order: f64,
    /// Information-theoretic expected sample size lower bound.
    pub lower_bound: f64,
    /// Empty on success; the calibration failure message otherwise.
    pub failure: Option<String>,
}

impl SweepRow {
    /// Estimated expected sample size over its first-order approximation.
    pub fn ess_ratio(&self) -> Option<f64> {
        let ess = self.ess.as_ref()?;
        (self.first_order > 0.0).then(|| ess.value / self.first_order)
    }

    /// Standard error of the error estimate relative to its value.
    pub fn relative_error(&self) -> Option<f64> {
        let error = self.error.as_ref()?;
        (error.value > 0.0).then(|| error.std_error / error.value)
    }
}

/// Sweeps each rule across the error-level grid, reporting conservative and
/// calibrated thresholds side by side: expected sample sizes, their
/// first-order approximations and lower bounds, and the accuracy of the
/// importance-sampled error estimates.
///
/// Common random numbers are reused across the whole grid (one schedule per
/// purpose), so curves along alpha are directly comparable.
pub fn run_figure_sweep(panel: &Panel, params: &SweepParams) -> Result<Vec<SweepRow>> {
    ensure!(
        params.alpha_grid.windows(2).all(|w| w[0] > w[1]),
        "alpha grid must be strictly decreasing"
    );
    ensure!(!params.families.is_empty(), "no rules selected");
    ensure!(!params.cards.is_empty(), "no cardinalities selected");

    let k = panel.num_streams();
    let base = SeedSchedule::new(params.seed);
    let calibration_schedule = base.derive(1);
    let ess_schedule = base.derive(2);
    let error_schedule = base.derive(3);

    let mut rows = Vec::new();
    for &family in &params.families {
        let prior = family.prior(k);
        let cards: Vec<usize> = params
            .cards
            .iter()
            .copied()
            .filter(|&s| prior.lower() <= s && s <= prior.upper())
            .collect();
        if cards.is_empty() {
            continue;
        }
        for &alpha in &params.alpha_grid {
            let errors = ErrorSpec::symmetric(alpha)?;

            let conservative = family.conservative_scalar(k, &errors);
            push_source_rows(
                panel,
                family,
                &errors,
                &cards,
                ThresholdSource::Conservative,
                Ok(conservative),
                params,
                (&ess_schedule, &error_schedule),
                &mut rows,
            );

            let opts = CalibrationOptions {
                reps: params.reps.calibration,
                tol: params.tol,
                horizon: params.horizon,
                ..CalibrationOptions::default()
            };
            let calibrated = calibrate(panel, family, &errors, &calibration_schedule, &opts)
                .map(|result| result.scalar)
                .map_err(|err| err.to_string());
            push_source_rows(
                panel,
                family,
                &errors,
                &cards,
                ThresholdSource::Calibrated,
                calibrated,
                params,
                (&ess_schedule, &error_schedule),
                &mut rows,
            );
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn push_source_rows(
    panel: &Panel,
    family: ProcedureFamily,
    errors: &ErrorSpec,
    cards: &[usize],
    source: ThresholdSource,
    scalar: Result<f64, String>,
    params: &SweepParams,
    (ess_schedule, error_schedule): (&SeedSchedule, &SeedSchedule),
    rows: &mut Vec<SweepRow>,
) {
    let k = panel.num_streams();
    let prior = family.prior(k);
    for &card in cards {
        let truth = SignalConfiguration::prefix(k, card);
        let first_order = first_order_ess(panel, &truth, &prior, errors);
        let lower_bound = ess_lower_bound(panel, &truth, &prior, errors);
        let row = match &scalar {
            Ok(value) => {
                let spec = family.spec_at(k, errors, *value);
                SweepRow {
                    rule: family.label(),
                    alpha: errors.alpha,
                    card,
                    source,
                    scalar: Some(*value),
                    ess: Some(estimate_ess(
                        panel,
                        &truth,
                        spec,
                        ess_schedule,
                        params.reps.ess,
                        params.horizon,
                    )),
                    error: Some(estimate_fwe(
                        panel,
                        &truth,
                        spec,
                        ErrorType::TypeI,
                        error_schedule,
                        params.reps.error,
                        params.horizon,
                    )),
                    first_order,
                    lower_bound,
                    failure: None,
                }
            }
            Err(message) => SweepRow {
                rule: family.label(),
                alpha: errors.alpha,
                card,
                source,
                scalar: None,
                ess: None,
                error: None,
                first_order,
                lower_bound,
                failure: Some(message.clone()),
            },
        };
        rows.push(row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use seqmht::StreamModel;

    fn small_panel(k: usize) -> Panel {
        let model = StreamModel::gaussian_mean_shift(0.0, 1.0, 1.0).unwrap();
        Panel::homogeneous(model, k).unwrap()
    }

    #[test]
    fn table_rows_come_in_fixed_order() {
        let panel = small_panel(10);
        let rows = run_table1(&panel, 200, 10_000, 9);
        let labels: Vec<(&str, usize)> = rows.iter().map(|r| (r.procedure, r.card)).collect();
        assert_eq!(
            labels,
            vec![
                ("gap", 1),
                ("gap", 3),
                ("gap", 5),
                ("gap-intersection", 3),
                ("gap-intersection", 4),
                ("gap-intersection", 5),
                ("gap-intersection", 7),
            ]
        );
        // The analytic column holds the closed-form type-I bound.
        let e10 = libm::exp(-10.0);
        assert!((rows[0].analytic_bound - 9.0 * e10).abs() < 1e-18);
        assert!((rows[3].analytic_bound - 10.0 * e10).abs() < 1e-18);
        for row in &rows {
            assert_eq!(row.threshold, 10.0);
            assert!(row.ess.value > 0.0);
        }
    }

    #[test]
    fn table_is_reproducible() {
        let panel = small_panel(10);
        let a = run_table1(&panel, 300, 10_000, 42);
        let b = run_table1(&panel, 300, 10_000, 42);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.error.value.to_bits(), y.error.value.to_bits());
            assert_eq!(x.ess.value.to_bits(), y.ess.value.to_bits());
        }
    }

    #[test]
    fn sweep_emits_both_sources_and_respects_priors() {
        let panel = small_panel(4);
        let params = SweepParams {
            alpha_grid: vec![5e-2],
            families: vec![ProcedureFamily::Gap { m: 2 }, ProcedureFamily::Intersection],
            cards: vec![1, 2],
            reps: SweepReps {
                calibration: 400,
                ess: 400,
                error: 400,
            },
            tol: 0.2,
            horizon: 10_000,
            seed: 3,
        };
        let rows = run_figure_sweep(&panel, &params).unwrap();
        // Gap keeps only card 2 (its exact prior); intersection keeps both.
        let shape: Vec<(&str, &str, usize)> = rows
            .iter()
            .map(|r| (r.rule, r.source.label(), r.card))
            .collect();
        assert_eq!(
            shape,
            vec![
                ("gap", "conservative", 2),
                ("gap", "calibrated", 2),
                ("intersection", "conservative", 1),
                ("intersection", "conservative", 2),
                ("intersection", "calibrated", 1),
                ("intersection", "calibrated", 2),
            ]
        );
        for row in &rows {
            if row.failure.is_none() {
                assert!(row.scalar.is_some() && row.ess.is_some() && row.error.is_some());
                assert!(row.first_order > 0.0);
                assert!(row.ess_ratio().is_some());
            }
        }
        // Calibrated thresholds sit at or below the conservative ones.
        let conservative = rows[0].scalar.unwrap();
        if let Some(calibrated) = rows[1].scalar {
            assert!(calibrated <= conservative + 1e-12);
        }
    }

    #[test]
    fn sweep_flags_calibration_failure_per_row() {
        let panel = small_panel(4);
        let params = SweepParams {
            // So lax that even the floor threshold overshoots the target:
            // calibration cannot bracket and must fail.
            alpha_grid: vec![0.9],
            families: vec![ProcedureFamily::Gap { m: 1 }],
            cards: vec![1],
            reps: SweepReps {
                calibration: 300,
                ess: 300,
                error: 300,
            },
            tol: 0.1,
            horizon: 10_000,
            seed: 5,
        };
        let rows = run_figure_sweep(&panel, &params).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].failure.is_none(), "conservative row still works");
        let failed = &rows[1];
        assert_eq!(failed.source, ThresholdSource::Calibrated);
        assert!(failed.failure.is_some());
        assert!(failed.scalar.is_none() && failed.ess.is_none() && failed.error.is_none());
    }
}
