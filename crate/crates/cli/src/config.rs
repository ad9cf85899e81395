//! Run configuration: a flat key-value file with `[panel]`, `[procedure]`,
//! and `[run]` sections. Every key has a default, so an empty file (or no
//! file at all) describes the ten-stream symmetric Gaussian benchmark.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use seqmht::{
    ErrorSpec, Panel, PriorClass, ProcedureFamily, ProcedureSpec, SignalConfiguration, StreamModel,
};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub panel: PanelSection,
    pub procedure: ProcedureSection,
    pub run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSection {
    pub k: usize,
    pub model: String,
    pub theta0: f64,
    pub theta1: f64,
    pub sigma: f64,
    pub p0: f64,
    pub p1: f64,
}

impl Default for PanelSection {
    fn default() -> Self {
        PanelSection {
            k: 10,
            model: "gaussian".to_string(),
            theta0: 0.0,
            theta1: 0.5,
            sigma: 1.0,
            p0: 0.3,
            p1: 0.7,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcedureSection {
    pub rule: String,
    pub m: usize,
    pub l: usize,
    pub u: usize,
    /// "conservative", "calibrated", or "explicit".
    pub thresholds: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub tol: f64,
}

impl Default for ProcedureSection {
    fn default() -> Self {
        ProcedureSection {
            rule: "gap".to_string(),
            m: 5,
            l: 3,
            u: 7,
            thresholds: "conservative".to_string(),
            a: None,
            b: None,
            c: None,
            d: None,
            alpha: 1e-4,
            beta: None,
            tol: 0.05,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub reps: u64,
    pub horizon: u64,
    pub truth: TruthSpec,
    /// Error levels for sweeps, strictly decreasing.
    pub alpha_grid: Vec<f64>,
    /// Signal cardinalities to report in sweeps and bound tables; empty
    /// means "pick from the prior class".
    pub cards: Vec<usize>,
    /// Rules included in the `figures` sweep.
    pub rules: Vec<String>,
    /// "type-i", "type-ii", or "both".
    pub error_type: String,
    /// Replications per threshold evaluation during calibration; defaults
    /// to `reps`.
    pub calibration_reps: Option<u64>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 1,
            reps: 100_000,
            horizon: 100_000,
            truth: TruthSpec::Cardinality(5),
            alpha_grid: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
            cards: Vec::new(),
            rules: vec![
                "gap".to_string(),
                "gap-intersection".to_string(),
                "intersection".to_string(),
                "incomplete".to_string(),
            ],
            error_type: "both".to_string(),
            calibration_reps: None,
        }
    }
}

/// The true signal set: either a cardinality (the first `n` streams) or an
/// explicit list of stream indices.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum TruthSpec {
    Cardinality(usize),
    Members(Vec<usize>),
}

impl Default for TruthSpec {
    fn default() -> Self {
        TruthSpec::Cardinality(5)
    }
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let config = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if !(self.run.alpha_grid.windows(2)).all(|w| w[0] > w[1]) {
            bail!("run.alpha_grid must be strictly decreasing");
        }
        if self.run.alpha_grid.iter().any(|&a| !(0.0 < a && a < 1.0)) {
            bail!("run.alpha_grid entries must lie in (0, 1)");
        }
        match self.procedure.thresholds.as_str() {
            "conservative" | "calibrated" | "explicit" => {}
            other => bail!(
                "procedure.thresholds must be conservative, calibrated, or explicit (got {other:?})"
            ),
        }
        match self.run.error_type.as_str() {
            "type-i" | "type-ii" | "both" => {}
            other => bail!("run.error_type must be type-i, type-ii, or both (got {other:?})"),
        }
        Ok(())
    }

    pub fn panel(&self) -> Result<Panel> {
        let p = &self.panel;
        let model = match p.model.as_str() {
            "gaussian" => StreamModel::gaussian_mean_shift(p.theta0, p.theta1, p.sigma)
                .context("panel model")?,
            "bernoulli" => StreamModel::bernoulli(p.p0, p.p1).context("panel model")?,
            other => bail!("panel.model must be gaussian or bernoulli (got {other:?})"),
        };
        Panel::homogeneous(model, p.k).context("panel")
    }

    pub fn errors(&self) -> Result<ErrorSpec> {
        let alpha = self.procedure.alpha;
        let beta = self.procedure.beta.unwrap_or(alpha);
        ErrorSpec::new(alpha, beta).context("error targets")
    }

    pub fn family(&self) -> Result<ProcedureFamily> {
        family_from_rule(&self.procedure.rule, &self.procedure)
    }

    /// The prior class the configured rule is designed for.
    pub fn prior(&self, k: usize) -> Result<PriorClass> {
        Ok(self.family()?.prior(k))
    }

    /// Resolves thresholds without running any simulation: explicit values
    /// or the conservative closed forms. Calibrated thresholds are produced
    /// by the caller, which owns the seed schedule.
    pub fn static_spec(&self, panel: &Panel) -> Result<ProcedureSpec> {
        let k = panel.num_streams();
        let spec = match self.procedure.thresholds.as_str() {
            "explicit" => self.explicit_spec()?,
            _ => {
                let family = self.family()?;
                let errors = self.errors()?;
                family.spec_at(k, &errors, family.conservative_scalar(k, &errors))
            }
        };
        spec.validate(k).context("procedure thresholds")?;
        Ok(spec)
    }

    fn explicit_spec(&self) -> Result<ProcedureSpec> {
        let p = &self.procedure;
        let need = |value: Option<f64>, name: &str| {
            value.with_context(|| format!("explicit thresholds require procedure.{name}"))
        };
        Ok(match p.rule.as_str() {
            "gap" => ProcedureSpec::Gap {
                m: p.m,
                c: need(p.c, "c")?,
            },
            "gap-intersection" => ProcedureSpec::GapIntersection {
                l: p.l,
                u: p.u,
                a: need(p.a, "a")?,
                b: need(p.b, "b")?,
                c: need(p.c, "c")?,
                d: need(p.d, "d")?,
            },
            "intersection" => ProcedureSpec::Intersection {
                a: need(p.a, "a")?,
                b: need(p.b, "b")?,
            },
            "incomplete" => ProcedureSpec::Incomplete {
                a: need(p.a, "a")?,
                b: need(p.b, "b")?,
            },
            other => bail!("unknown procedure.rule {other:?}"),
        })
    }

    pub fn truth(&self, k: usize) -> Result<SignalConfiguration> {
        match &self.run.truth {
            TruthSpec::Cardinality(n) => {
                if *n > k {
                    bail!("run.truth cardinality {n} exceeds the number of streams {k}");
                }
                Ok(SignalConfiguration::prefix(k, *n))
            }
            TruthSpec::Members(indices) => {
                SignalConfiguration::from_indices(k, indices.iter().copied()).context("run.truth")
            }
        }
    }

    /// Cardinalities to tabulate: the configured list, or every cardinality
    /// the prior class allows.
    pub fn report_cards(&self, k: usize) -> Result<Vec<usize>> {
        if !self.run.cards.is_empty() {
            if let Some(&bad) = self.run.cards.iter().find(|&&s| s > k) {
                bail!("run.cards entry {bad} exceeds the number of streams {k}");
            }
            return Ok(self.run.cards.clone());
        }
        let prior = self.prior(k)?;
        Ok((prior.lower()..=prior.upper()).collect())
    }

    /// Cardinalities for the `figures` sweep. Defaults to the gap size plus
    /// the ends and midpoint of the gap-intersection range; each rule keeps
    /// only the entries its prior class allows.
    pub fn sweep_cards(&self, k: usize) -> Result<Vec<usize>> {
        if !self.run.cards.is_empty() {
            return self.report_cards(k);
        }
        let p = &self.procedure;
        let mut cards = vec![p.m, p.l, (p.l + p.u) / 2, p.u];
        cards.retain(|&s| s <= k);
        cards.sort_unstable();
        cards.dedup();
        Ok(cards)
    }

    pub fn sweep_families(&self) -> Result<Vec<ProcedureFamily>> {
        self.run
            .rules
            .iter()
            .map(|rule| family_from_rule(rule, &self.procedure))
            .collect()
    }

    pub fn calibration_reps(&self) -> u64 {
        self.run.calibration_reps.unwrap_or(self.run.reps)
    }
}

fn family_from_rule(rule: &str, p: &ProcedureSection) -> Result<ProcedureFamily> {
    Ok(match rule {
        "gap" => ProcedureFamily::Gap { m: p.m },
        "gap-intersection" => ProcedureFamily::GapIntersection { l: p.l, u: p.u },
        "intersection" => ProcedureFamily::Intersection,
        "incomplete" => ProcedureFamily::Incomplete,
        other => bail!("unknown rule {other:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_describe_the_benchmark_panel() {
        let config = FileConfig::load(None).unwrap();
        let panel = config.panel().unwrap();
        assert_eq!(panel.num_streams(), 10);
        assert!(panel.is_exchangeable());
        let errors = config.errors().unwrap();
        assert_eq!(errors.alpha, 1e-4);
        assert_eq!(errors.beta, 1e-4);
        assert_eq!(config.run.seed, 1);
        assert_eq!(config.run.alpha_grid.len(), 7);
    }

    #[test]
    fn parses_sections_and_overrides() {
        let text = r#"
            [panel]
            k = 4
            model = "bernoulli"
            p0 = 0.2
            p1 = 0.6

            [procedure]
            rule = "gap-intersection"
            l = 1
            u = 3
            alpha = 1e-3

            [run]
            seed = 7
            truth = [0, 2]
            cards = [1, 3]
        "#;
        let config: FileConfig = toml::from_str(text).unwrap();
        config.validate().unwrap();
        let panel = config.panel().unwrap();
        assert_eq!(panel.num_streams(), 4);
        let truth = config.truth(4).unwrap();
        assert_eq!(truth.cardinality(), 2);
        assert!(truth.contains(0) && truth.contains(2));
        assert_eq!(config.report_cards(4).unwrap(), vec![1, 3]);
        match config.prior(4).unwrap() {
            PriorClass::Bounded { l, u } => {
                assert_eq!((l, u), (1, 3));
            }
            other => panic!("unexpected prior {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_grids_and_unknown_keys() {
        let decreasing = "[run]\nalpha_grid = [1e-3, 1e-2]";
        let config: FileConfig = toml::from_str(decreasing).unwrap();
        assert!(config.validate().is_err());

        assert!(toml::from_str::<FileConfig>("[panel]\nstreams = 4").is_err());
    }

    #[test]
    fn explicit_thresholds_are_required_when_selected() {
        let text = "[procedure]\nthresholds = \"explicit\"\nrule = \"intersection\"\na = 3.0";
        let config: FileConfig = toml::from_str(text).unwrap();
        config.validate().unwrap();
        let panel = config.panel().unwrap();
        assert!(config.static_spec(&panel).is_err());

        let text =
            "[procedure]\nthresholds = \"explicit\"\nrule = \"intersection\"\na = 3.0\nb = 2.0";
        let config: FileConfig = toml::from_str(text).unwrap();
        let spec = config.static_spec(&panel).unwrap();
        assert_eq!(spec.thresholds_abcd(), [Some(3.0), Some(2.0), None, None]);
    }
}
