//! Data generators and the Monte Carlo harness behind the power and level
//! tables.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{gof_test, NullHypothesis, StatisticKind, TestConfig};
use crate::copula::{CopulaModel, EstimatorKind, Family};
use crate::empirical::Sample;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, Purpose};

/// Kendall's tau of the Frank components of the mixture generator.
pub const MIXTURE_TAU: f64 = 0.4;
/// Lag between consecutive pairs of the ARCH generator.
pub const ARCH_LAG: usize = 100;
const ARCH_COEFFICIENT: f64 = 0.6;

/// `W_0 = 0` and `W_i = Z_i (1 + 0.6 W²_{i−1})^{1/2}` for `i = 1..=steps`.
pub fn arch_path<R: Rng + ?Sized>(steps: usize, rng: &mut R) -> Vec<f64> {
    let mut w = Vec::with_capacity(steps + 1);
    w.push(0.0);
    for i in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        w.push(z * (1.0 + ARCH_COEFFICIENT * w[i - 1] * w[i - 1]).sqrt());
    }
    w
}

/// `n` pairs `(W_{100i}, W_{100i+1})`, `i = 1..=n`, of the ARCH-like
/// recursion started at `W_0 = 0`.
pub fn gen_arch<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InsufficientData(
            "cannot generate an empty sample".into(),
        ));
    }
    let w = arch_path(ARCH_LAG * n + 1, rng);
    let mut data = Vec::with_capacity(2 * n);
    for i in 1..=n {
        data.push(w[ARCH_LAG * i]);
        data.push(w[ARCH_LAG * i + 1]);
    }
    Sample::from_flat(data, 2)
}

/// The mixture `½ c_F(s,t) + ½ c_F(1−s,t)` of a Frank copula with
/// Kendall's tau 0.4 and its reflection in the first coordinate.
pub fn gen_mixture<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Sample> {
    gen_mixture_with(n, rng, 0.5)
}

/// [`gen_mixture`] with the probability of the unreflected component set to
/// `heads`. Each row flips the coin before drawing `(U, V)`.
pub fn gen_mixture_with<R: Rng + ?Sized>(n: usize, rng: &mut R, heads: f64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InsufficientData(
            "cannot generate an empty sample".into(),
        ));
    }
    if !(0.0..=1.0).contains(&heads) {
        return Err(Error::Config(format!(
            "coin probability {heads} is not in [0, 1]"
        )));
    }
    let frank = CopulaModel::from_tau(Family::Frank, MIXTURE_TAU)?;
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let keep = rng.random_bool(heads);
        let [u, v] = frank.sample_pair(rng);
        data.push(if keep { u } else { 1.0 - u });
        data.push(v);
    }
    Sample::from_flat(data, 2)
}

/// `n` draws from the member of `family` with Kendall's tau `tau` (ignored
/// for the independence copula).
pub fn gen_copula<R: Rng + ?Sized>(
    family: Family,
    tau: f64,
    n: usize,
    rng: &mut R,
) -> Result<Sample> {
    let model = match family {
        Family::Independence => CopulaModel::independence(),
        _ => CopulaModel::from_tau(family, tau)?,
    };
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        data.extend_from_slice(&model.sample_pair(rng));
    }
    Sample::from_flat(data, 2)
}

/// Source of the simulated datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Arch,
    Mixture,
    Copula { family: Family, tau: f64 },
}

impl Generator {
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample> {
        match *self {
            Generator::Arch => gen_arch(n, rng),
            Generator::Mixture => gen_mixture(n, rng),
            Generator::Copula { family, tau } => gen_copula(family, tau, n, rng),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Arch => f.write_str("arch"),
            Generator::Mixture => f.write_str("mixture"),
            Generator::Copula { family, tau } => write!(f, "{family}(tau={tau})"),
        }
    }
}

/// The null hypothesis tested in every replication of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NullSpec {
    Simple {
        model: CopulaModel,
    },
    Composite {
        family: Family,
        estimator: EstimatorKind,
    },
}

impl NullSpec {
    fn hypothesis(&self) -> NullHypothesis<'static> {
        match *self {
            NullSpec::Simple { model } => NullHypothesis::Model(model),
            NullSpec::Composite { family, estimator } => {
                NullHypothesis::Composite { family, estimator }
            }
        }
    }
}

/// One column of a power or level table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub generator: Generator,
    pub null: NullSpec,
    pub n: usize,
    pub reps: usize,
    pub statistics: Vec<StatisticKind>,
    /// Test settings; `config.seed` is the master seed of the study.
    pub config: TestConfig,
}

impl Scenario {
    /// Builds a named scenario:
    ///
    /// * `arch-s`, `mixture-s`: the generator against the independence copula;
    /// * `arch-c`, `mixture-c`: the generator against the Frank family,
    ///   fitted by pseudo-ML;
    /// * `<data>-<null>` for two of `clayton`, `gumbel`, `frank`: data with
    ///   Kendall's tau `tau` from the first family against the second family,
    ///   fitted by pseudo-ML.
    pub fn named(
        name: &str,
        n: usize,
        reps: usize,
        tau: f64,
        statistics: Vec<StatisticKind>,
        config: TestConfig,
    ) -> Result<Self> {
        let independence = NullSpec::Simple {
            model: CopulaModel::independence(),
        };
        let frank = NullSpec::Composite {
            family: Family::Frank,
            estimator: EstimatorKind::PseudoML,
        };
        let key = name.trim().to_ascii_lowercase();
        let (generator, null) = match key.as_str() {
            "arch-s" => (Generator::Arch, independence),
            "arch-c" => (Generator::Arch, frank),
            "mixture-s" => (Generator::Mixture, independence),
            "mixture-c" => (Generator::Mixture, frank),
            other => {
                let parsed = other.split_once('-').and_then(|(a, b)| {
                    Some((a.parse::<Family>().ok()?, b.parse::<Family>().ok()?))
                });
                match parsed {
                    Some((data, null))
                        if data != Family::Independence && null != Family::Independence =>
                    {
                        (
                            Generator::Copula { family: data, tau },
                            NullSpec::Composite {
                                family: null,
                                estimator: EstimatorKind::PseudoML,
                            },
                        )
                    }
                    _ => return Err(Error::Config(format!("unknown scenario `{name}`"))),
                }
            }
        };
        let scenario = Self {
            name: key,
            generator,
            null,
            n,
            reps,
            statistics,
            config,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config(
                "a study needs at least one replication".into(),
            ));
        }
        if self.n < 2 {
            return Err(Error::Config("a study needs n ≥ 2".into()));
        }
        if self.statistics.is_empty() {
            return Err(Error::Config("a study needs at least one statistic".into()));
        }
        if let Generator::Copula { family, tau } = self.generator {
            if family != Family::Independence {
                CopulaModel::from_tau(family, tau)?;
            }
        }
        self.config.validate()
    }
}

/// Rejection count and frequency of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frequency {
    pub statistic: StatisticKind,
    pub rejections: usize,
    pub frequency: f64,
}

/// Outcome of [`run_study`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub scenario: Scenario,
    /// Replications that produced a test result.
    pub completed: usize,
    /// Replications abandoned because estimation failed.
    pub aborted: usize,
    pub frequencies: Vec<Frequency>,
    /// Wall-clock time; left out of the JSON so reports stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl StudyReport {
    pub fn frequency(&self, kind: StatisticKind) -> Option<f64> {
        self.frequencies
            .iter()
            .find(|f| f.statistic == kind)
            .map(|f| f.frequency)
    }
}

/// Runs `reps` independent datasets through every requested statistic.
///
/// Replication `r` draws its data from sub-stream `(seed, r)` and runs one
/// bootstrap test, seeded from `(seed, r)`, for all statistics at once, so
/// every statistic sees the same datasets and the same resamples. A
/// replication whose estimation fails is counted as aborted; more than 5%
/// aborted replications abort the study.
pub fn run_study(scenario: &Scenario) -> Result<StudyReport> {
    scenario.validate()?;
    let started = Instant::now();
    let work = || -> Result<Vec<Option<Vec<bool>>>> {
        (0..scenario.reps)
            .into_par_iter()
            .map(|r| run_replication(scenario, r as u64))
            .collect()
    };
    let outcomes = match scenario.config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let aborted = outcomes.iter().filter(|o| o.is_none()).count();
    if aborted * 20 > scenario.reps {
        return Err(Error::StudyAborted {
            failed: aborted,
            reps: scenario.reps,
        });
    }
    let completed = scenario.reps - aborted;
    let frequencies = scenario
        .statistics
        .iter()
        .enumerate()
        .map(|(k, &statistic)| {
            let rejections = outcomes.iter().flatten().filter(|d| d[k]).count();
            Frequency {
                statistic,
                rejections,
                frequency: rejections as f64 / completed as f64,
            }
        })
        .collect();
    Ok(StudyReport {
        scenario: scenario.clone(),
        completed,
        aborted,
        frequencies,
        elapsed: started.elapsed(),
    })
}

fn run_replication(scenario: &Scenario, r: u64) -> Result<Option<Vec<bool>>> {
    let master = scenario.config.seed;
    let mut rng = stream(master, r, Purpose::Data);
    let sample = scenario.generator.generate(scenario.n, &mut rng)?;
    let config = TestConfig {
        seed: derive_seed(master, r, Purpose::Test),
        workers: None,
        full: false,
        ..scenario.config.clone()
    };
    match gof_test(
        &sample,
        scenario.null.hypothesis(),
        &scenario.statistics,
        &config,
    ) {
        Ok(results) => Ok(Some(results.iter().map(|t| t.reject).collect())),
        Err(e) if e.is_estimation() => Ok(None),
        Err(e) => Err(e),
    }
}

/// Plain-text table with one row per statistic and sample size and one
/// column per scenario.
pub fn render_table(reports: &[StudyReport]) -> String {
    let mut names: Vec<&str> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut kinds: Vec<StatisticKind> = Vec::new();
    for r in reports {
        if !names.contains(&r.scenario.name.as_str()) {
            names.push(&r.scenario.name);
        }
        if !sizes.contains(&r.scenario.n) {
            sizes.push(r.scenario.n);
        }
        for f in &r.frequencies {
            if !kinds.contains(&f.statistic) {
                kinds.push(f.statistic);
            }
        }
    }
    let mut rows: Vec<Vec<String>> = vec![["type", "n"]
        .iter()
        .map(|s| s.to_string())
        .chain(names.iter().map(|s| s.to_string()))
        .collect()];
    for &n in &sizes {
        for &kind in &kinds {
            let mut row = vec![kind.name().to_ascii_uppercase(), n.to_string()];
            for name in &names {
                let cell = reports
                    .iter()
                    .find(|r| r.scenario.name == *name && r.scenario.n == n)
                    .and_then(|r| r.frequency(kind))
                    .map(|f| format!("{:.0}%", 100.0 * f))
                    .unwrap_or_else(|| "-".into());
                row.push(cell);
            }
            rows.push(row);
        }
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests;
