//! Command-line driver: argument parsing, manifest loading, command
//! dispatch and JSON reports. The acceptance battery lives in [`suite`].

pub mod commands;
pub mod report;
pub mod suite;

use std::path::PathBuf;
use std::time::Instant;

use ahlab_core::manifest::Manifest;
use ahlab_core::yamabe::Backend;
use ahlab_core::Error;
use clap::{Parser, Subcommand, ValueEnum};

pub use report::RunReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ahlab", version, about = "Almost-Hermitian conformal geometry laboratory")]
pub struct Cli {
    /// Indented JSON plus a digest of diagnostics.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Worker threads for data-parallel kernels.
    #[arg(long, global = true, env = "AHLAB_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Fd4,
    Spectral,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Fd4 => Backend::Fd4,
            BackendArg::Spectral => Backend::Spectral,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BubbleCheck {
    Pde,
    Rayleigh,
    Rates,
    Cn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum JvaryMode {
    Formula,
    Fd,
    Both,
    Critical,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curvature digest at quasi-random chart points.
    Curvature {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Gray–Hervella residuals, verdicts and sign cross-checks.
    Classify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = ahlab_core::gray_hervella::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = ahlab_core::gray_hervella::DEFAULT_QUADRATURE_RESOLUTION)]
        quadrature_resolution: usize,
    },
    /// Conformal transformation laws for a `conformal` manifest (base and factor).
    ConformalCheck {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Discrete minimization of the functional on a torus grid.
    Yamabe {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 6)]
        resolution: usize,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = BackendArg::Spectral)]
        backend: BackendArg,
    },
    /// Checks on the concentrating profile.
    Bubble {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, value_enum)]
        check: BubbleCheck,
    },
    /// Deformations of J and the first variation of the invariant.
    Jvary {
        #[arg(long)]
        manifest: PathBuf,
        /// Seed of the random raw deformation field.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.02)]
        h: f64,
        #[arg(long, default_value_t = 6)]
        resolution: usize,
        #[arg(long, value_enum, default_value_t = JvaryMode::Both)]
        mode: JvaryMode,
    },
    /// The full acceptance battery.
    Suite {
        /// Run only these criteria (comma separated numbers).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

/// A command failure, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Manifest(_) | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Numerical(e) => write!(f, "{e}"),
        }
    }
}

/// What a command hands back before it is wrapped into a [`RunReport`].
#[derive(Debug, Default)]
pub struct Outcome {
    pub manifest: Option<Manifest>,
    pub seed: u64,
    pub results: serde_json::Value,
    pub diagnostics: Vec<ahlab_core::diagnostic::Diagnostic>,
    pub failures: Vec<String>,
}

pub fn load_manifest(path: &std::path::Path) -> Result<Manifest, Failure> {
    Manifest::from_file(path).map_err(Failure::from)
}

/// Runs one parsed command and returns the exit code and the report (the
/// report is absent only when the failure happened before any work).
pub fn execute(cli: &Cli) -> (i32, RunReport) {
    let start = Instant::now();
    let name = command_name(&cli.command);
    let outcome = commands::dispatch(&cli.command);
    let (code, outcome) = match outcome {
        Ok(o) => (if o.failures.is_empty() { EXIT_OK } else { EXIT_ASSERTION }, o),
        Err(f) => (
            f.exit_code(),
            Outcome {
                diagnostics: vec![ahlab_core::diagnostic::Diagnostic::warn(match &f {
                    Failure::Usage(m) => format!("parse error: {m}"),
                    Failure::Numerical(e) => format!("numerical failure: {e}"),
                })],
                failures: vec![f.to_string()],
                ..Default::default()
            },
        ),
    };
    let report = RunReport {
        command: name.into(),
        manifest: outcome
            .manifest
            .as_ref()
            .map(|m| serde_json::to_value(m).expect("manifest serializes")),
        version: report::VERSION.into(),
        seed: outcome.seed,
        results: outcome.results,
        diagnostics: outcome.diagnostics,
        failures: outcome.failures,
        wall_time: start.elapsed().as_secs_f64(),
    };
    (code, report)
}

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Curvature { .. } => "curvature",
        Command::Classify { .. } => "classify",
        Command::ConformalCheck { .. } => "conformal-check",
        Command::Yamabe { .. } => "yamabe",
        Command::Bubble { .. } => "bubble",
        Command::Jvary { .. } => "jvary",
        Command::Suite { .. } => "suite",
    }
}

/// Parses `argv`, runs the command on a pool of `--threads` workers, prints
/// the report and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    let (code, report) = pool.install(|| execute(&cli));
    let text = if cli.pretty { report.to_pretty() } else { report.to_json() };
    println!("{text}");
    if let Some(path) = &cli.report {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("cannot write {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    code
}
