//! Command-line front end: scenario evaluation, parameter sweeps,
//! violation maximization, classical-bound certification, distance-axiom
//! checks, and derivation-chain synthesis/verification.
//!
//! Exit codes: 0 success (a violation is a successful computation, not an
//! error), 2 invalid input, 3 numerical failure, 4 internal invariant
//! breach.

mod commands;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use entrodist_core::chain::ChainError;
use entrodist_core::classical::ClassicalError;
use entrodist_core::dist::{DistError, DistanceKind};
use entrodist_core::inequality::InequalityError;
use entrodist_core::optimize::OptimizeError;
use entrodist_core::qsim::QsimError;
use entrodist_core::scenario::ScenarioError;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Invariant(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Invariant(m) => write!(f, "internal invariant breach: {m}"),
        }
    }
}

impl From<QsimError> for CliError {
    fn from(e: QsimError) -> Self {
        match e {
            QsimError::ImaginaryResidue(_) => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Qsim(q) => q.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<InequalityError> for CliError {
    fn from(e: InequalityError) -> Self {
        match e {
            InequalityError::Qsim(q) => q.into(),
            InequalityError::Scenario(s) => s.into(),
            InequalityError::CertificateFailed => CliError::Invariant(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Inequality(i) => i.into(),
            OptimizeError::Scenario(s) => s.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ClassicalError> for CliError {
    fn from(e: ClassicalError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Entropic,
    Covariance,
}

impl From<KindArg> for DistanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Entropic => DistanceKind::Entropic,
            KindArg::Covariance => DistanceKind::Covariance,
        }
    }
}

/// Flags shared by every subcommand; their values are echoed into every
/// report.
#[derive(Args, Debug)]
struct CommonArgs {
    /// Seed for randomized checks and sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance echoed into reports and used for breach checks.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Report format (sweeps default to CSV, everything else to JSON).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: ENTRODIST_JOBS or 1).
    #[arg(long)]
    jobs: Option<usize>,
}

impl CommonArgs {
    fn resolved(mut self, default_format: Format) -> Common {
        let jobs = self.jobs.take().unwrap_or_else(|| {
            std::env::var("ENTRODIST_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(1)
        });
        Common {
            seed: self.seed,
            tolerance: self.tolerance,
            format: self.format.unwrap_or(default_format),
            output: self.output,
            jobs: jobs.max(1),
        }
    }
}

/// Resolved per-run configuration.
pub struct Common {
    pub seed: u64,
    pub tolerance: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub jobs: usize,
}

#[derive(Parser, Debug)]
#[command(
    name = "entrodist",
    version,
    about = "Entropy-based distance tests for multipartite correlations and contextuality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an inequality (or a single distance) on a scenario file.
    Eval {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Inequality name: tripartite, multipartite:N, pm-entropic,
        /// pm-products, mermin, cabello.
        #[arg(long)]
        inequality: Option<String>,
        /// Comma-separated variable labels for a single distance report.
        #[arg(long)]
        delta: Option<String>,
        /// Distance kind for --delta.
        #[arg(long, value_enum, default_value = "entropic")]
        kind: KindArg,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep a parameter and emit one row per grid point.
    Sweep {
        /// Parameter: lambda, n, or angle:<label>.
        #[arg(long)]
        parameter: String,
        /// Scenario template (required for angle sweeps).
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Inequality name (required for angle sweeps).
        #[arg(long)]
        inequality: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Maximize the violation of a GHZ inequality over measurement angles.
    Optimize {
        #[arg(long)]
        inequality: String,
        /// Grid points per angle for the initial scan.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Search per-party angles instead of tying parties together.
        #[arg(long)]
        untied: bool,
        /// Refinement sweep cap.
        #[arg(long, default_value_t = 200)]
        iters: usize,
        /// Step shrink factor on no-improvement sweeps.
        #[arg(long, default_value_t = 0.5)]
        shrink: f64,
        /// Refinement convergence tolerance.
        #[arg(long, default_value_t = 1e-12)]
        convergence_tol: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Certify a classical bound by exhaustive enumeration plus sampled
    /// mixtures.
    Certify {
        #[arg(long)]
        inequality: String,
        #[arg(long, default_value_t = 10_000)]
        mixtures: usize,
        /// Test only the deterministic vertices.
        #[arg(long)]
        vertex_only: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the distance axioms on a scenario distribution or on random
    /// tables.
    Axioms {
        /// Scenario file with a distribution binding; omit to sample random
        /// tables.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Number of random distributions when no scenario is given.
        #[arg(long, default_value_t = 1000)]
        dists: usize,
        /// Variable count for random distributions.
        #[arg(long, default_value_t = 4)]
        variables: usize,
        /// Sampled term triples per distribution.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Restrict to one distance kind (default: both).
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Synthesize, generate, or verify a triangle-inequality derivation
    /// chain.
    Derive {
        /// Target term as comma-separated labels.
        #[arg(long)]
        target: Option<String>,
        /// Allowed terms, semicolon-separated lists of comma-separated
        /// labels.
        #[arg(long)]
        allowed: Option<String>,
        /// Generate the even-N multipartite chain.
        #[arg(long)]
        multipartite: Option<usize>,
        /// Verify a chain JSON file.
        #[arg(long)]
        verify: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write the bundled scenario corpus to a directory.
    ExportScenarios {
        #[arg(long, default_value = "scenarios")]
        dir: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Eval { scenario, inequality, delta, kind, common } => {
            let common = common.resolved(Format::Json);
            commands::eval(&common, &scenario, inequality.as_deref(), delta.as_deref(), kind.into())
        }
        Command::Sweep { parameter, scenario, inequality, from, to, steps, common } => {
            let common = common.resolved(Format::Csv);
            let parameter = commands::SweepParameter::parse(&parameter)?;
            commands::sweep(
                &common,
                &parameter,
                scenario.as_deref(),
                inequality.as_deref(),
                from,
                to,
                steps,
            )
        }
        Command::Optimize { inequality, grid, untied, iters, shrink, convergence_tol, common } => {
            let common = common.resolved(Format::Json);
            commands::optimize(&common, &inequality, grid, untied, iters, shrink, convergence_tol)
        }
        Command::Certify { inequality, mixtures, vertex_only, common } => {
            let common = common.resolved(Format::Json);
            commands::certify(&common, &inequality, mixtures, vertex_only)
        }
        Command::Axioms { scenario, dists, variables, trials, kind, common } => {
            let common = common.resolved(Format::Json);
            commands::axioms(
                &common,
                scenario.as_deref(),
                dists,
                variables,
                trials,
                kind.map(Into::into),
            )
        }
        Command::Derive { target, allowed, multipartite, verify, common } => {
            let common = common.resolved(Format::Json);
            commands::derive(
                &common,
                target.as_deref(),
                allowed.as_deref(),
                multipartite,
                verify.as_deref(),
            )
        }
        Command::ExportScenarios { dir, common } => {
            let common = common.resolved(Format::Json);
            commands::export_scenarios(&common, &dir)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("entrodist: {e}");
            match e {
                CliError::Input(_) => ExitCode::from(2),
                CliError::Numerical(_) => ExitCode::from(3),
                CliError::Invariant(_) => ExitCode::from(4),
            }
        }
    }
}
