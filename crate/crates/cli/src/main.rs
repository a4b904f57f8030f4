//! `atv-copula`: goodness-of-fit tests for copulas from the command line.
//!
//! Exit codes: 0 success (whatever the test decision), 2 usage error,
//! 3 data error, 4 estimation error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use atv_copula::bootstrap::{gof_test, NullHypothesis, StatisticKind, TestConfig};
use atv_copula::copula::{CopulaModel, EstimatorKind, Family};
use atv_copula::empirical::Sample;
use atv_copula::rng::{stream, Purpose};
use atv_copula::simulate::{
    gen_arch, gen_copula, gen_mixture, render_table, run_study, Scenario, StudyReport,
};
use atv_copula::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "atv-copula",
    version,
    about = "Goodness-of-fit tests for copulas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a null hypothesis on a CSV sample.
    Test(TestArgs),
    /// Run a Monte Carlo power or level study.
    Study(StudyArgs),
    /// Write a simulated sample as CSV.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct EngineArgs {
    /// Statistics, comma separated: atv, ks, cvm, chi2, kuiper.
    #[arg(long, default_value = "atv")]
    stat: String,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 1000)]
    boot: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Margin added to the bootstrap critical value.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Number of boxes (default: the L_n rule).
    #[arg(long = "L")]
    boxes: Option<usize>,
    /// Shortlist size of the random search (default: n).
    #[arg(long = "m")]
    shortlist: Option<usize>,
    /// Random-search draws.
    #[arg(long = "K", default_value_t = 10_000)]
    draws: usize,
    /// Lattice resolution (default: floor(n^(1/d))).
    #[arg(long)]
    grid: Option<usize>,
    /// Master seed; drawn from the OS and reported when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TestArgs {
    /// CSV file with one observation per row.
    input: PathBuf,
    /// Simple null: independence or family:theta, e.g. frank:3.2.
    #[arg(long, conflicts_with = "family")]
    null: Option<String>,
    /// Composite null: the family to fit.
    #[arg(long)]
    family: Option<String>,
    /// Estimator for the composite null: tau or pml.
    #[arg(long, default_value = "pml", requires = "family")]
    estimator: String,
    /// Include every bootstrap replicate in the output.
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct StudyArgs {
    /// Scenarios, comma separated: arch-s, arch-c, mixture-s, mixture-c or
    /// <data family>-<null family>.
    #[arg(long)]
    scenario: String,
    /// Sample sizes, comma separated.
    #[arg(long, default_value = "400")]
    n: String,
    /// Replications per scenario.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Kendall's tau of parametric data generators.
    #[arg(long, default_value_t = 0.4)]
    tau: f64,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorKind {
    Arch,
    Mixture,
    Copula,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: GeneratorKind,
    /// Family for `--kind copula`.
    #[arg(long, default_value = "frank")]
    family: String,
    /// Kendall's tau for `--kind copula`.
    #[arg(long, default_value_t = 0.4)]
    tau: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Data(e.to_string()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Study(args) => cmd_study(args),
        Command::Generate(args) => cmd_generate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            let code = if e.is_estimation() || matches!(e, Error::StudyAborted { .. }) {
                4
            } else if e.is_data() {
                3
            } else {
                2
            };
            ExitCode::from(code)
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let seed = rand::random::<u64>();
        eprintln!("seed: {seed}");
        seed
    })
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

impl EngineArgs {
    /// Validates every flag before any computation.
    fn config(&self, full: bool) -> Result<(TestConfig, Vec<StatisticKind>), Failure> {
        let kinds = StatisticKind::parse_list(&self.stat).map_err(usage)?;
        let config = TestConfig {
            statistic: kinds[0],
            replicates: self.boot,
            alpha: self.alpha,
            epsilon: self.epsilon,
            boxes: self.boxes,
            shortlist: self.shortlist,
            draws: self.draws,
            grid: self.grid,
            seed: 0,
            workers: self.workers,
            full,
        };
        config.validate().map_err(usage)?;
        Ok((config, kinds))
    }
}

fn cmd_test(args: TestArgs) -> Result<(), Failure> {
    let (mut config, kinds) = args.engine.config(args.full)?;
    let null = match (&args.null, &args.family) {
        (Some(spec), None) => NullHypothesis::Model(spec.parse::<CopulaModel>().map_err(usage)?),
        (None, Some(family)) => NullHypothesis::Composite {
            family: family.parse::<Family>().map_err(usage)?,
            estimator: args.estimator.parse::<EstimatorKind>().map_err(usage)?,
        },
        (None, None) => NullHypothesis::Model(CopulaModel::independence()),
        (Some(_), Some(_)) => unreachable!("clap rejects --null with --family"),
    };
    config.seed = resolve_seed(args.engine.seed);
    let sample = Sample::read_csv(&args.input)?;
    let results = gof_test(&sample, null, &kinds, &config)?;
    let json = if results.len() == 1 {
        serde_json::to_string_pretty(&results[0])?
    } else {
        serde_json::to_string_pretty(&results)?
    };
    println!("{json}");
    Ok(())
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, Failure> {
    let sizes: Result<Vec<usize>, _> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect();
    match sizes {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(Failure::Usage(format!("bad sample size list `{s}`"))),
    }
}

fn cmd_study(args: StudyArgs) -> Result<(), Failure> {
    let (mut config, kinds) = args.engine.config(false)?;
    let sizes = parse_sizes(&args.n)?;
    config.seed = resolve_seed(args.engine.seed);
    let mut scenarios = Vec::new();
    for name in args
        .scenario
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        for &n in &sizes {
            scenarios.push(
                Scenario::named(name, n, args.reps, args.tau, kinds.clone(), config.clone())
                    .map_err(usage)?,
            );
        }
    }
    if scenarios.is_empty() {
        return Err(Failure::Usage("no scenario given".into()));
    }
    let mut reports: Vec<StudyReport> = Vec::with_capacity(scenarios.len());
    for scenario in &scenarios {
        let report = run_study(scenario)?;
        eprintln!(
            "{} n={}: {} replications in {:.1} s",
            scenario.name,
            scenario.n,
            report.completed,
            report.elapsed.as_secs_f64()
        );
        reports.push(report);
    }
    let json = serde_json::to_string_pretty(&reports)?;
    if let Some(path) = &args.out {
        std::fs::write(path, format!("{json}\n"))?;
    }
    println!("{json}");
    eprint!("{}", render_table(&reports));
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let family: Family = args.family.parse().map_err(usage)?;
    if args.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let seed = resolve_seed(args.seed);
    let mut rng = stream(seed, 0, Purpose::Data);
    let sample = match args.kind {
        GeneratorKind::Arch => gen_arch(args.n, &mut rng)?,
        GeneratorKind::Mixture => gen_mixture(args.n, &mut rng)?,
        GeneratorKind::Copula => {
            if family != Family::Independence {
                CopulaModel::from_tau(family, args.tau).map_err(usage)?;
            }
            gen_copula(family, args.tau, args.n, &mut rng)?
        }
    };
    match &args.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
            let mut writer = BufWriter::new(file);
            sample.write_csv(&mut writer)?;
            writer.flush()?;
        }
        None => sample.write_csv(io::stdout().lock())?,
    }
    Ok(())
}
