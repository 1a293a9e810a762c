//! `adl`: experiment harness for the agnostic disjunction learners.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use adl_core::Error as CoreError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_ACCEPTANCE: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "adl", version, about = "Agnostic learning of disjunctions: generators, learners, acceptance suite")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Master seed; every random choice derives from (seed, trial index).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (ADL_JOBS overrides this).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Include wall-clock timings in reports (reports are then no longer
    /// byte-stable).
    #[arg(long, global = true)]
    pub timings: bool,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an explicit distribution or a sample from one.
    Gen(GenArgs),
    /// Exact OPT by enumeration.
    Opt(OptArgs),
    /// Univariate approximator tables.
    #[command(subcommand)]
    Approx(ApproxCmd),
    /// L1 polynomial regression and threshold rounding.
    L1fit(L1fitArgs),
    /// Sample-based weak learner.
    WeakSample(SampleArgs),
    /// Sample-based weak learner boosted to error OPT + eps.
    StrongSample(StrongSampleArgs),
    /// Statistical-query learner.
    SqLearn(SqLearnArgs),
    /// Approximation-tradeoff learner (alpha OPT + eps).
    Tradeoff(TradeoffArgs),
    /// Boost a named weak learner.
    Boost(BoostArgs),
    /// Correlational-SQ weak learner.
    CsqWeak(CsqArgs),
    /// Parameter bookkeeping and timings across dimensions.
    Bench(BenchArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MarginalKind {
    WeightBand,
    HeavyLight,
    Uniform,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Planted target as comma-separated coordinates; labels f_S(x) with
    /// flip rate --eta.
    #[arg(long, value_delimiter = ',', conflicts_with = "random_labels")]
    pub planted: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Independent random Pr[y = 1 | x] per point instead of a planted target.
    #[arg(long)]
    pub random_labels: bool,
    /// Fraction of points with a deterministic random label (--random-labels).
    #[arg(long, default_value_t = 0.0)]
    pub pure_fraction: f64,
    #[arg(long, value_enum, default_value_t = MarginalKind::WeightBand)]
    pub marginal: MarginalKind,
    #[arg(long, default_value_t = 0)]
    pub lo: usize,
    /// Upper weight of the band; defaults to n.
    #[arg(long)]
    pub hi: Option<usize>,
    /// Number of sampled support points; unset enumerates the band.
    #[arg(long)]
    pub support_size: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub p_heavy: f64,
    /// Heavy weight threshold of the heavy-light mixture; defaults to
    /// ceil(n^(2/3)).
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub light_max_weight: Option<usize>,
    /// Emit this many i.i.d. draws instead of the explicit distribution.
    #[arg(long)]
    pub sample: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OptArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// monotone, monotone+const1 or general-literals.
    #[arg(long, default_value = "monotone+const1")]
    pub class: String,
}

#[derive(Subcommand, Debug)]
pub enum ApproxCmd {
    /// CSV rows r,eps,degree,max_dev.
    Frontier {
        #[arg(long, value_delimiter = ',', default_value = "4,9,25,64,100")]
        r: Vec<usize>,
        #[arg(long = "epsilon", value_delimiter = ',', default_value = "0.3,0.25,0.1,0.01")]
        eps: Vec<f64>,
    },
    /// Certify one approximator and print the report.
    Certify {
        #[arg(long)]
        r: usize,
        #[arg(long = "epsilon")]
        eps: f64,
        /// Print the monomial coefficients too.
        #[arg(long)]
        coefficients: bool,
    },
}

#[derive(Args, Debug)]
pub struct L1fitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Degree cap; defaults to the approximator degree at epsilon/4.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long = "epsilon", default_value_t = 0.1)]
    pub eps: f64,
    /// Coordinates the polynomial may use (comma-separated); default all.
    #[arg(long, value_delimiter = ',')]
    pub coords: Option<Vec<usize>>,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Expected dimension; checked against the input.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "epsilon", default_value_t = 0.2)]
    pub eps: f64,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Debug hook: guesses never remove a coordinate of the target.
    #[arg(long)]
    pub force_correct_guesses: bool,
    /// Target for the hook; defaults to the enumerated optimal monotone
    /// disjunction.
    #[arg(long, value_delimiter = ',')]
    pub target: Option<Vec<usize>>,
    /// Draw c' uniformly instead of minimizing.
    #[arg(long)]
    pub uniform_c_prime: bool,
    /// Write one JSON line per run trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StrongSampleArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long, default_value_t = 20)]
    pub max_rounds: usize,
}

#[derive(Args, Debug)]
pub struct SqLearnArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "epsilon", default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// exact, empirical or adversarial.
    #[arg(long, default_value = "exact")]
    pub backend: String,
    #[arg(long)]
    pub force_correct_guesses: bool,
    #[arg(long, value_delimiter = ',')]
    pub target: Option<Vec<usize>>,
    /// Write the merged query budget as JSON here.
    #[arg(long)]
    pub budget_out: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TradeoffArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "epsilon", default_value_t = 0.1)]
    pub eps: f64,
    /// Allow alpha >= 4 instead of alpha >= 64.
    #[arg(long)]
    pub relaxed_constants: bool,
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    #[arg(long, default_value = "exact")]
    pub backend: String,
    /// Constant in T and the degree.
    #[arg(long, default_value_t = 4.0)]
    pub c: f64,
    #[arg(long, default_value_t = 4)]
    pub max_rounds: usize,
    /// Run only the weak learner, without boosting.
    #[arg(long)]
    pub weak_only: bool,
    #[arg(long)]
    pub force_correct_guesses: bool,
    #[arg(long, value_delimiter = ',')]
    pub target: Option<Vec<usize>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeakKind {
    OptDisjunction,
    Constant0,
    Constant1,
    Alg1,
    Alg3,
}

#[derive(Args, Debug)]
pub struct BoostArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub weak: WeakKind,
    /// Weak learner's alpha; defaults to the learner's own.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weak learner's advantage; defaults to the learner's own.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Use the multiplicative-error schedule down to this eps.
    #[arg(long = "epsilon")]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 10)]
    pub retries: usize,
    /// Accuracy parameter of alg1/alg3.
    #[arg(long, default_value_t = 0.2)]
    pub weak_epsilon: f64,
    /// Tradeoff alpha for alg3 (relaxed constants).
    #[arg(long, default_value_t = 4.0)]
    pub weak_alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub weak_repeats: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConstraintKind {
    Enumerate,
    #[value(name = "support+random")]
    SupportRandom,
}

#[derive(Args, Debug)]
pub struct CsqArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "epsilon", default_value_t = 0.25)]
    pub eps: f64,
    /// Parity degree; defaults to ceil(2 sqrt(n) log2(1/eps)) capped at n.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long, value_enum, default_value_t = ConstraintKind::Enumerate)]
    pub constraint_mode: ConstraintKind,
    /// Random constraint points in support+random mode.
    #[arg(long, default_value_t = 1024)]
    pub random_points: usize,
    #[arg(long, default_value = "exact")]
    pub backend: String,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,12,16,27,64")]
    pub n: Vec<usize>,
    #[arg(long = "epsilon", default_value_t = 0.1)]
    pub eps: f64,
    /// Also time one exact-oracle SQ run per n on a planted instance
    /// (n up to 16).
    #[arg(long)]
    pub run: bool,
}

#[derive(Args, Debug)]
pub struct AcceptArgs {
    /// all, approx, l1, sample, sq, tradeoff, csq, boost, reduction, budget.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Explicit criterion numbers; overrides --suite.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<usize>>,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub err: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_USAGE, err: anyhow::anyhow!("{msg}") }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: classify(&err), err }
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        anyhow::Error::from(err).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure { code: EXIT_USAGE, err: err.into() }
    }
}

/// Bad input is a usage error; anything else that escapes is internal.
fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CoreError>() {
        Some(
            CoreError::InvalidParameter(_)
            | CoreError::Parse { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::IndexOutOfRange { .. }
            | CoreError::EmptyData
            | CoreError::CapExceeded { .. }
            | CoreError::Io(_),
        ) => EXIT_USAGE,
        _ if err.downcast_ref::<std::io::Error>().is_some() => EXIT_USAGE,
        _ => EXIT_INTERNAL,
    }
}

fn jobs(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var("ADL_JOBS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&j| j > 0)
            .map(Some)
            .ok_or_else(|| Failure::usage(format!("ADL_JOBS must be a positive integer, got `{v}`"))),
        _ => match flag {
            Some(0) => Err(Failure::usage("--jobs must be positive")),
            other => Ok(other),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = jobs(cli.global.jobs).and_then(|j| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(j) = j {
            pool = pool.num_threads(j);
        }
        let pool = pool.build().map_err(|e| Failure { code: EXIT_INTERNAL, err: e.into() })?;
        pool.install(|| commands::run(&cli))
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("adl: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
