//! Command-line driver for the `hardylab` verification battery.
//!
//! Every subcommand runs one family of checks and emits a [`RunRecord`]
//! per check, as JSON lines or CSV tables. Exit codes: 0 when every check
//! passes, 2 when a check fails or an inequality is violated, 1 on usage,
//! configuration or evaluation errors.

pub mod commands;
pub mod config;
pub mod record;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, Format, Params};
pub use record::RunRecord;

use commands::Outcome;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hardylab", version, about = "Numerical checks of sharp Hardy inequalities on orthant cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Exact constants and the constant-splitting identity
    Constants,
    /// Hardy inequality over seeded random trials
    VerifyHardy,
    /// Weighted half-space inequality for l in {1/2, 1, 3/2, 2}
    VerifyWeighted,
    /// Iterated-logarithm improvement on balls
    VerifyFt,
    /// Minimizing family and extrapolation to the sharp constant
    Sharpness,
    /// Principal eigenvalue of the spherical section
    Eigen,
    /// Odd extension: harmonic coefficients, moments, energy doubling
    Decompose,
    /// Finite-difference operator identities
    Identities,
    /// The whole battery
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::VerifyHardy => "verify-hardy",
            Command::VerifyWeighted => "verify-weighted",
            Command::VerifyFt => "verify-ft",
            Command::Sharpness => "sharpness",
            Command::Eigen => "eigen",
            Command::Decompose => "decompose",
            Command::Identities => "identities",
            Command::All => "all",
        }
    }
}

#[derive(Args, Debug, Default)]
struct Flags {
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Ball radius (default 1)
    #[arg(long = "R", global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "eps-list", value_delimiter = ',', global = true)]
    eps_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', global = true)]
    resolutions: Option<Vec<usize>>,
    /// Number of remainder terms
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Half-integer exponents, e.g. 1/2,1,3/2
    #[arg(long, value_delimiter = ',', global = true)]
    l: Option<Vec<String>>,
    /// Smaller sweeps for a fast pass
    #[arg(long, global = true)]
    quick: bool,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Flags {
    fn into_params(self) -> (Params, Option<PathBuf>) {
        (
            Params {
                n: self.n,
                k: self.k,
                radius: self.radius,
                trials: self.trials,
                seed: self.seed,
                eps_list: self.eps_list,
                resolutions: self.resolutions,
                depth: self.depth,
                tol: self.tol,
                l: self.l,
                quick: self.quick,
                format: self.format,
                out: self.out,
            },
            self.config,
        )
    }
}

/// Runs the CLI, writing records to stdout (or `--out`) and diagnostics to
/// stderr. Returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_to<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let command = cli.command;
    let (mut params, config_path) = cli.flags.into_params();
    let mut warnings = Vec::new();
    if let Some(path) = config_path {
        let merged = load_config(&path).and_then(|cfg| config::merge_config(&mut params, &cfg, command.name()));
        match merged {
            Ok(w) => warnings.extend(w),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_ERROR;
            }
        }
    }
    let pool = match thread_pool(&mut warnings) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let outcomes = pool.install(|| execute(command, &params));
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_ERROR;
        }
    };
    match emit(&params, &outcomes, &warnings, out, err) {
        Ok(all_passed) => {
            if all_passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn thread_pool(warnings: &mut Vec<String>) -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("HARDYLAB_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => builder = builder.num_threads(t),
            _ => warnings.push(format!("HARDYLAB_THREADS={v:?} is not a positive integer; using the default pool")),
        }
    }
    Ok(builder.build()?)
}

/// A finished check with its timing.
struct Timed {
    outcome: Outcome,
    wall_time_s: f64,
}

fn execute(command: Command, params: &Params) -> anyhow::Result<Vec<Timed>> {
    let single = |f: fn(&Params) -> anyhow::Result<Outcome>| -> anyhow::Result<Vec<Timed>> {
        let t = Instant::now();
        let outcome = f(params)?;
        Ok(vec![Timed {
            outcome,
            wall_time_s: t.elapsed().as_secs_f64(),
        }])
    };
    match command {
        Command::Constants => single(commands::constants::run),
        Command::VerifyHardy => single(commands::inequalities::verify_hardy),
        Command::VerifyWeighted => single(commands::inequalities::verify_weighted),
        Command::VerifyFt => single(commands::inequalities::verify_ft),
        Command::Sharpness => single(commands::sharpness::run),
        Command::Eigen => single(commands::eigen::run),
        Command::Decompose => single(commands::decompose::run),
        Command::Identities => single(commands::identities::run),
        Command::All => commands::battery(params)
            .into_iter()
            .map(|(f, p)| {
                let t = Instant::now();
                let outcome = f(&p)?;
                Ok(Timed {
                    outcome,
                    wall_time_s: t.elapsed().as_secs_f64(),
                })
            })
            .collect(),
    }
}

fn emit(
    params: &Params,
    outcomes: &[Timed],
    warnings: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> anyhow::Result<bool> {
    let format = params.format.unwrap_or(Format::Json);
    let mut file;
    let sink: &mut dyn Write = match &params.out {
        Some(path) => {
            file = std::io::BufWriter::new(
                std::fs::File::create(path).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?,
            );
            &mut file
        }
        None => out,
    };
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut all_passed = true;
    for t in outcomes {
        let o = &t.outcome;
        all_passed &= o.passed;
        let record = RunRecord {
            command: o.command.clone(),
            parameters: o.parameters.clone(),
            warnings: warnings.iter().cloned().chain(o.warnings.iter().cloned()).collect(),
            passed: o.passed,
            payload: o.payload.clone(),
            version: record::VERSION.to_string(),
            wall_time_s: t.wall_time_s,
            timestamp: timestamp.clone(),
        };
        match format {
            Format::Json => record::write_json_line(sink, &record)?,
            Format::Csv => record::write_csv(sink, &record, &o.tables, &o.preamble)?,
        }
        for line in &o.summary {
            writeln!(err, "{}: {line}", o.command)?;
        }
        writeln!(err, "{}: {}", o.command, if o.passed { "PASS" } else { "FAIL" })?;
    }
    sink.flush()?;
    Ok(all_passed)
}

/// Parameter map recorded with each run: every resolved input.
pub fn parameter_map(entries: &[(&str, serde_json::Value)]) -> BTreeMap<String, serde_json::Value> {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}
