//! The bootstrap test engine.
//!
//! The observed statistic is computed from `Z_n` (simple null) or `Y_n`
//! (composite null). Replicate `b` draws a nonparametric resample from
//! sub-stream `(seed, b + 1)`, builds `Z*_n` or `Y*_n` (refitting `θ̂*` on the
//! resample), and evaluates the same statistic. Replicates run in parallel
//! and are collected by index, so results do not depend on the worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{fit, fit_sample, CopulaCdf, CopulaModel, EstimatorKind, Family};
use crate::empirical::{
    default_resolution, resample_indices, CopulaProcess, EmpiricalCopula, PseudoObservations,
    Sample,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, Purpose};
use crate::statistics::{
    box_count_rule, chi2_resolution, chi2_statistic, cvm_of_process, ks_statistic, AtvConfig,
    BoxFamily, BoxIndex,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Atv,
    Ks,
    Cvm,
    Chi2,
    Kuiper,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 5] = [
        StatisticKind::Atv,
        StatisticKind::Ks,
        StatisticKind::Cvm,
        StatisticKind::Chi2,
        StatisticKind::Kuiper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Atv => "atv",
            StatisticKind::Ks => "ks",
            StatisticKind::Cvm => "cvm",
            StatisticKind::Chi2 => "chi2",
            StatisticKind::Kuiper => "kuiper",
        }
    }

    /// Parses a comma-separated list such as `atv,ks,cvm`.
    pub fn parse_list(s: &str) -> Result<Vec<StatisticKind>> {
        let mut kinds = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let kind: StatisticKind = part.parse()?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        if kinds.is_empty() {
            return Err(Error::Config("no statistic given".into()));
        }
        Ok(kinds)
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatisticKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown statistic `{s}`")))
    }
}

/// Settings of one bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub statistic: StatisticKind,
    /// Bootstrap replicates `B`.
    pub replicates: usize,
    pub alpha: f64,
    /// Margin added to the bootstrap critical value.
    pub epsilon: f64,
    /// Number of boxes `L`; `None` applies [`box_count_rule`].
    pub boxes: Option<usize>,
    /// Shortlist size `m`; `None` means `n`.
    pub shortlist: Option<usize>,
    /// Random-search draws `K`.
    pub draws: usize,
    /// Lattice resolution; `None` means `⌊n^{1/d}⌋`.
    pub grid: Option<usize>,
    pub seed: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
    /// Keep every replicate value in the result.
    pub full: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            statistic: StatisticKind::Atv,
            replicates: 1000,
            alpha: 0.05,
            epsilon: 0.0,
            boxes: None,
            shortlist: None,
            draws: 10_000,
            grid: None,
            seed: 0,
            workers: None,
            full: false,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config(
                "the number of bootstrap replicates must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be ≥ 0, got {}",
                self.epsilon
            )));
        }
        if self.boxes == Some(0) {
            return Err(Error::Config(
                "the number of boxes L must be at least 1".into(),
            ));
        }
        if self.shortlist == Some(0) {
            return Err(Error::Config(
                "the shortlist size m must be at least 1".into(),
            ));
        }
        if self.draws == 0 {
            return Err(Error::Config(
                "the number of draws K must be at least 1".into(),
            ));
        }
        if matches!(self.grid, Some(p) if p < 1) {
            return Err(Error::Config(
                "the grid resolution must be at least 1".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("the worker count must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of boxes used for a sample of size `n`.
    pub fn boxes_for(&self, n: usize) -> usize {
        self.boxes.unwrap_or_else(|| box_count_rule(n))
    }

    /// Random-search settings for a sample of size `n` and a search seed.
    pub fn atv_for(&self, n: usize, seed: u64) -> AtvConfig {
        let boxes = self.boxes_for(n);
        AtvConfig {
            boxes,
            shortlist: self.shortlist.unwrap_or(n).max(boxes),
            draws: self.draws,
            seed,
        }
    }
}

/// The null hypothesis of a test.
#[derive(Clone, Copy)]
pub enum NullHypothesis<'a> {
    /// `C = C₀` for a parametric model.
    Model(CopulaModel),
    /// `C = C₀` for an arbitrary copula cdf.
    Cdf(&'a dyn CopulaCdf),
    /// `C ∈ {C_θ}`, fitted with the given estimator.
    Composite {
        family: Family,
        estimator: EstimatorKind,
    },
}

impl NullHypothesis<'_> {
    pub fn label(&self) -> String {
        match self {
            NullHypothesis::Model(m) => m.to_string(),
            NullHypothesis::Cdf(_) => "explicit".into(),
            NullHypothesis::Composite { family, .. } => family.to_string(),
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self, NullHypothesis::Composite { .. })
    }
}

impl fmt::Debug for NullHypothesis<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NullHypothesis::Composite { family, estimator } => {
                write!(f, "Composite({family}, {estimator})")
            }
            _ => write!(f, "Simple({})", self.label()),
        }
    }
}

/// Summary of the refitted parameters `θ̂*` over the replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl ThetaSummary {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Self {
            mean,
            sd: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Outcome of one bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic_kind: StatisticKind,
    pub statistic: f64,
    pub p_value: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(rename = "B")]
    pub replicates_requested: usize,
    #[serde(rename = "L")]
    pub boxes: usize,
    pub null: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<ThetaSummary>,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub grid: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    pub failed_replicates: usize,
    /// Maximizing boxes of the observed ATV or Kuiper statistic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_boxes: Option<BoxFamily>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<f64>>,
}

/// `t* + ε`, where `t*` is the `⌈(1−α)B⌉`-th smallest replicate.
pub fn critical_value(replicates: &[f64], alpha: f64, epsilon: f64) -> Result<f64> {
    if replicates.is_empty() {
        return Err(Error::Config("no bootstrap replicates".into()));
    }
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len();
    let k = ((1.0 - alpha) * b as f64 - 1e-9)
        .ceil()
        .clamp(1.0, b as f64) as usize;
    Ok(sorted[k - 1] + epsilon)
}

/// `(1 + #{T*_b ≥ T}) / (B + 1)`.
pub fn p_value(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&t| t >= observed).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Test of a simple null with the statistic named in `config`.
pub fn gof_test_simple(
    sample: &Sample,
    null: &dyn CopulaCdf,
    config: &TestConfig,
) -> Result<TestResult> {
    first(gof_test(
        sample,
        NullHypothesis::Cdf(null),
        &[config.statistic],
        config,
    )?)
}

/// Test of a composite null with the statistic named in `config`.
pub fn gof_test_composite(
    sample: &Sample,
    family: Family,
    estimator: EstimatorKind,
    config: &TestConfig,
) -> Result<TestResult> {
    first(gof_test(
        sample,
        NullHypothesis::Composite { family, estimator },
        &[config.statistic],
        config,
    )?)
}

fn first(mut results: Vec<TestResult>) -> Result<TestResult> {
    Ok(results.remove(0))
}

/// Runs several statistics on the same observed process and the same
/// bootstrap resamples. `config.statistic` is ignored; one result is
/// returned per entry of `kinds`, in order.
pub fn gof_test(
    sample: &Sample,
    null: NullHypothesis<'_>,
    kinds: &[StatisticKind],
    config: &TestConfig,
) -> Result<Vec<TestResult>> {
    config.validate()?;
    if kinds.is_empty() {
        return Err(Error::Config("no statistic requested".into()));
    }
    match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?
            .install(|| run(sample, null, kinds, config)),
        None => run(sample, null, kinds, config),
    }
}

/// What every replicate needs to evaluate the requested statistics.
struct Evaluator<'a> {
    kinds: &'a [StatisticKind],
    p: usize,
    chi_p: usize,
    boxes: usize,
    index: Option<BoxIndex>,
    config: &'a TestConfig,
    n: usize,
}

struct Evaluation {
    values: Vec<f64>,
    families: Vec<Option<BoxFamily>>,
}

impl Evaluator<'_> {
    fn evaluate(&self, process: &CopulaProcess<'_>, index: u64) -> Result<Evaluation> {
        let needs_field = self.kinds.iter().any(|k| {
            matches!(
                k,
                StatisticKind::Atv | StatisticKind::Ks | StatisticKind::Kuiper
            )
        });
        let field = if needs_field {
            Some(process.grid(self.p)?)
        } else {
            None
        };
        let mut values = Vec::with_capacity(self.kinds.len());
        let mut families = Vec::with_capacity(self.kinds.len());
        for kind in self.kinds {
            let (value, family) = match kind {
                StatisticKind::Ks => (ks_statistic(field.as_ref().expect("field")), None),
                StatisticKind::Cvm => (cvm_of_process(process), None),
                StatisticKind::Chi2 => {
                    let coarse = process.grid(self.chi_p)?;
                    (chi2_statistic(&coarse, self.boxes)?, None)
                }
                StatisticKind::Atv => {
                    let seed = derive_seed(self.config.seed, index, Purpose::Search);
                    let atv = self.config.atv_for(self.n, seed);
                    let bx = self.index.as_ref().expect("box index");
                    let family = bx
                        .rank(field.as_ref().expect("field"), atv.shortlist)?
                        .prs(&atv)?;
                    (family.score, Some(family))
                }
                StatisticKind::Kuiper => {
                    let bx = self.index.as_ref().expect("box index");
                    let family = bx.greedy(field.as_ref().expect("field"), self.boxes);
                    (family.score, Some(family))
                }
            };
            values.push(value);
            families.push(family);
        }
        Ok(Evaluation { values, families })
    }
}

enum Replicate {
    Done {
        values: Vec<f64>,
        theta: Option<f64>,
    },
    Failed,
}

fn run(
    sample: &Sample,
    null: NullHypothesis<'_>,
    kinds: &[StatisticKind],
    config: &TestConfig,
) -> Result<Vec<TestResult>> {
    let (n, d) = (sample.n(), sample.d());
    let p = match config.grid {
        Some(p) => p,
        None => default_resolution(n, d),
    };
    let boxes = config.boxes_for(n);
    let needs_index = kinds
        .iter()
        .any(|k| matches!(k, StatisticKind::Atv | StatisticKind::Kuiper));
    let index = if needs_index {
        Some(BoxIndex::new(p, d)?)
    } else {
        None
    };
    if kinds.contains(&StatisticKind::Atv) {
        let atv = config.atv_for(n, 0);
        atv.validate()?;
        let available = atv.shortlist.min(index.as_ref().map_or(0, BoxIndex::len));
        if atv.boxes > available {
            return Err(Error::Config(format!(
                "L = {} exceeds the {available} boxes available on a grid of resolution {p}",
                atv.boxes
            )));
        }
    }
    let evaluator = Evaluator {
        kinds,
        p,
        chi_p: chi2_resolution(boxes, d),
        boxes,
        index,
        config,
        n,
    };

    let empirical = EmpiricalCopula::from_sample(sample);
    let fitted: Option<(CopulaModel, Family, EstimatorKind)> = match null {
        NullHypothesis::Composite { family, estimator } => {
            Some((fit_sample(family, estimator, sample)?, family, estimator))
        }
        _ => None,
    };
    let simple_cdf: Option<&dyn CopulaCdf> = match &null {
        NullHypothesis::Model(m) => Some(m),
        NullHypothesis::Cdf(c) => Some(*c),
        NullHypothesis::Composite { .. } => None,
    };
    if let Some(k) = simple_cdf.and_then(|c| c.dim()) {
        if k != d {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: d,
            });
        }
    }

    let observed_process = match (&fitted, simple_cdf) {
        (Some((model, _, _)), _) => CopulaProcess::composite(&empirical, model)?,
        (None, Some(cdf)) => CopulaProcess::simple(&empirical, cdf)?,
        (None, None) => unreachable!(),
    };
    let observed = evaluator.evaluate(&observed_process, 0)?;

    let replicate = |b: usize| -> Result<Replicate> {
        let index = b as u64 + 1;
        let mut rng = stream(config.seed, index, Purpose::Resample);
        let rows = resample_indices(n, &mut rng);
        let pseudo = PseudoObservations::from_sample(&sample.select_rows(&rows));
        match &fitted {
            Some((model, family, estimator)) => {
                let refitted = match fit(*family, *estimator, &pseudo) {
                    Ok(m) => m,
                    Err(e) if e.is_estimation() => return Ok(Replicate::Failed),
                    Err(e) => return Err(e),
                };
                let resampled = EmpiricalCopula::new(pseudo);
                let process =
                    CopulaProcess::bootstrap_composite(&resampled, &empirical, &refitted, model)?;
                Ok(Replicate::Done {
                    values: evaluator.evaluate(&process, index)?.values,
                    theta: refitted.theta().first().copied(),
                })
            }
            None => {
                let resampled = EmpiricalCopula::new(pseudo);
                let process = CopulaProcess::bootstrap_simple(&resampled, &empirical)?;
                Ok(Replicate::Done {
                    values: evaluator.evaluate(&process, index)?.values,
                    theta: None,
                })
            }
        }
    };
    let outcomes: Vec<Replicate> = (0..config.replicates)
        .into_par_iter()
        .map(replicate)
        .collect::<Result<_>>()?;

    let failed = outcomes
        .iter()
        .filter(|o| matches!(o, Replicate::Failed))
        .count();
    if failed * 100 > config.replicates {
        return Err(Error::EstimationInstability {
            failed,
            total: config.replicates,
        });
    }
    let done: Vec<(&Vec<f64>, Option<f64>)> = outcomes
        .iter()
        .filter_map(|o| match o {
            Replicate::Done { values, theta } => Some((values, *theta)),
            Replicate::Failed => None,
        })
        .collect();
    let thetas: Vec<f64> = done.iter().filter_map(|(_, t)| *t).collect();
    let theta_hat = fitted
        .as_ref()
        .and_then(|(m, _, _)| m.theta().first().copied());
    let theta_star = if theta_hat.is_some() {
        ThetaSummary::of(&thetas)
    } else {
        None
    };

    let mut results = Vec::with_capacity(kinds.len());
    for (k, &kind) in kinds.iter().enumerate() {
        let values: Vec<f64> = done.iter().map(|(v, _)| v[k]).collect();
        let statistic = observed.values[k];
        let critical = critical_value(&values, config.alpha, config.epsilon)?;
        let atv = kind == StatisticKind::Atv;
        results.push(TestResult {
            statistic_kind: kind,
            statistic,
            p_value: p_value(statistic, &values),
            critical_value: critical,
            reject: statistic > critical,
            alpha: config.alpha,
            epsilon: config.epsilon,
            replicates_requested: config.replicates,
            boxes,
            null: null.label(),
            estimator: fitted.as_ref().map(|(_, _, e)| *e),
            theta_hat,
            theta_star: theta_star.clone(),
            seed: config.seed,
            n,
            d,
            grid: if kind == StatisticKind::Chi2 {
                evaluator.chi_p
            } else {
                p
            },
            m: atv.then(|| config.atv_for(n, 0).shortlist),
            draws: atv.then_some(config.draws),
            failed_replicates: failed,
            best_boxes: observed.families[k].clone(),
            replicates: config.full.then_some(values),
        });
    }
    Ok(results)
}
