use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strong_envelope::generate::{random_instance, RandomSpec};
use strong_envelope::oracle::{envelope_by_value_iteration, root_value_by_enumeration};
use strong_envelope::suite::{merge_reports, run_suite};
use strong_envelope::{beta_sweep, strong_envelope, CheckReport, Problem, Schedule};

use crate::config::{generate_random, load_config, ConfigError, InstanceConfig, ObstacleRange};
use crate::report::{instance_digest, write_sweep_csv, EnvelopeSection, RunReport, SeedRange, SweepRecord};

pub const ENV_TOL_GAP: &str = "SENV_TOL_GAP";
pub const ENV_TOL_DOM: &str = "SENV_TOL_DOM";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const ORACLE_ROOT_TOL: f64 = 1e-12;
pub const ORACLE_PROCESS_TOL: f64 = 1e-11;
const ORACLE_ENUMERATION_CAP: u128 = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Compute(#[from] strong_envelope::Error),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => EXIT_CHECK_FAILED,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "senv", version, about = "Strong envelopes on finite probability trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute U, M, A and domination metrics for one instance.
    Envelope {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Run the full verification suite; exits 1 on any failed check.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Number of sampling seeds, starting at `--seed-start`.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed_start: u64,
        /// Sampled draws per seed.
        #[arg(long, default_value_t = 20)]
        draws: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Write the beta sweep as CSV.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        beta_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the engine with both oracles on small random instances.
    Oracle {
        /// Budget of non-cemetery nodes per instance.
        #[arg(long, default_value_t = 12)]
        max_nodes: usize,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random explicit-tree config.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        branching: usize,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        low: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        high: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Tolerance overrides. Precedence: flag, then config, then environment,
/// then built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct TolArgs {
    #[arg(long)]
    pub tol_gap: Option<f64>,
    #[arg(long)]
    pub tol_dom: Option<f64>,
}

fn env_tol(name: &str) -> Result<Option<f64>, CliError> {
    match std::env::var(name) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{name}={v:?} is not a number"))),
        Err(_) => Ok(None),
    }
}

pub fn schedule_for(config: &InstanceConfig, tol: &TolArgs) -> Result<Schedule, CliError> {
    let mut base = Schedule::default();
    if let Some(v) = env_tol(ENV_TOL_GAP)? {
        base.tol_gap = v;
    }
    if let Some(v) = env_tol(ENV_TOL_DOM)? {
        base.tol_dom = v;
    }
    let mut s = config.schedule.apply(base);
    if let Some(v) = tol.tol_gap {
        s.tol_gap = v;
    }
    if let Some(v) = tol.tol_dom {
        s.tol_dom = v;
    }
    s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(s)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub fn envelope_report(config: &InstanceConfig, tol: &TolArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let inst = config.resolve()?;
    let schedule = schedule_for(config, tol)?;
    let env = strong_envelope(&inst, &schedule)?;
    let mut report = RunReport::new("envelope");
    report.instance_digest = Some(instance_digest(&inst));
    report.envelope = Some(EnvelopeSection::new(&inst, &env));
    report.timings_ms.insert("total".into(), ms(started));
    Ok(report.seal())
}

pub fn verify_report(
    config: &InstanceConfig,
    seed_start: u64,
    seeds: u64,
    draws: usize,
    tol: &TolArgs,
) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let inst = config.resolve()?;
    let schedule = schedule_for(config, tol)?;
    let end = seed_start
        .checked_add(seeds)
        .ok_or_else(|| CliError::Usage("seed range overflows".into()))?;
    let (env, checks) = run_suite(&inst, schedule, seed_start..end, draws)?;
    let mut report = RunReport::new("verify");
    report.instance_digest = Some(instance_digest(&inst));
    report.seeds = Some(SeedRange { start: seed_start, count: seeds, draws });
    report.envelope = Some(EnvelopeSection::new(&inst, &env));
    report.push_checks(&checks);
    report.timings_ms.insert("total".into(), ms(started));
    Ok(report.seal())
}

pub fn convergence_rows(config: &InstanceConfig, beta_max: f64) -> Result<Vec<SweepRecord>, CliError> {
    let inst = config.resolve()?;
    let mut schedule = config.schedule.apply(Schedule::default());
    schedule.beta_max = beta_max;
    schedule.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(beta_sweep(&inst, &schedule)?.iter().map(SweepRecord::from).collect())
}

/// Random instance for oracle runs: 1 to 6 levels, up to three children
/// per node, at most `max_nodes` non-cemetery nodes.
pub fn oracle_instance(seed: u64, max_nodes: usize) -> Result<Problem, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = rng.gen_range(1..=6usize.min(max_nodes.max(1)));
    let spec = RandomSpec { levels, max_branching: 3, max_obstacle_nodes: Some(max_nodes), ..RandomSpec::default() };
    Ok(random_instance(&mut rng, &spec)?)
}

pub fn oracle_report(max_nodes: usize, seeds: u64) -> Result<RunReport, CliError> {
    if max_nodes == 0 {
        return Err(CliError::Usage("--max-nodes must be at least 1".into()));
    }
    let started = Instant::now();
    let mut checks = Vec::new();
    for seed in 0..seeds {
        let inst = oracle_instance(seed, max_nodes)?;
        let env = strong_envelope(&inst, &Schedule::default())?;
        let best = root_value_by_enumeration(&inst, ORACLE_ENUMERATION_CAP).map_err(|e| match e {
            strong_envelope::Error::CapExceeded { .. } => {
                CliError::Usage(format!("seed {seed}: {e}; lower --max-nodes"))
            }
            e => e.into(),
        })?;
        let gap = (best - env.envelope[0]).abs();
        checks.push(CheckReport::new(
            "oracle_enumeration",
            gap <= ORACLE_ROOT_TOL,
            gap,
            (gap > ORACLE_ROOT_TOL).then(|| format!("seed {seed}: enumeration {best}, engine {}", env.envelope[0])),
        ));
        let start = inst.weighted_obstacle_max().max(0.0) + 1.0;
        let vi = envelope_by_value_iteration(&inst, start, 0.0)?;
        let dist = vi.max_abs_diff(&env.envelope);
        checks.push(CheckReport::new(
            "oracle_value_iteration",
            dist <= ORACLE_PROCESS_TOL,
            dist,
            (dist > ORACLE_PROCESS_TOL).then(|| format!("seed {seed}: sup distance {dist}")),
        ));
    }
    let mut report = RunReport::new("oracle");
    report.seeds = Some(SeedRange { start: 0, count: seeds, draws: 1 });
    report.push_checks(&merge_reports(checks));
    report.timings_ms.insert("total".into(), ms(started));
    Ok(report.seal())
}

fn write_text(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let fail = |p: &Path, e: std::io::Error| CliError::Output { path: p.display().to_string(), message: e.to_string() };
    match path {
        Some(p) => fs::write(p, text).map_err(|e| fail(p, e)),
        None => writeln!(stdout, "{text}").map_err(|e| fail(Path::new("<stdout>"), e)),
    }
}

fn emit(report: &RunReport, out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    write_text(out, &report.to_json(), stdout)?;
    for c in &report.checks {
        let _ = writeln!(stderr, "{c}");
    }
    if report.passed {
        Ok(EXIT_PASS)
    } else {
        let _ = writeln!(stderr, "{} of {} checks failed", report.failures().count(), report.checks.len());
        Ok(EXIT_CHECK_FAILED)
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Envelope { config, out, tol } => {
            let report = envelope_report(&load_config(config)?, &tol)?;
            emit(&report, out.as_deref(), stdout, stderr)
        }
        Command::Verify { config, seeds, seed_start, draws, out, tol } => {
            let report = verify_report(&load_config(config)?, seed_start, seeds, draws, &tol)?;
            emit(&report, out.as_deref(), stdout, stderr)
        }
        Command::Convergence { config, beta_max, out } => {
            let rows = convergence_rows(&load_config(config)?, beta_max)?;
            let fail = |e: &dyn std::fmt::Display| CliError::Output { path: out.display().to_string(), message: e.to_string() };
            let file = fs::File::create(&out).map_err(|e| fail(&e))?;
            write_sweep_csv(file, &rows).map_err(|e| fail(&e))?;
            Ok(EXIT_PASS)
        }
        Command::Oracle { max_nodes, seeds, out } => {
            let report = oracle_report(max_nodes, seeds)?;
            emit(&report, out.as_deref(), stdout, stderr)
        }
        Command::Generate { seed, depth, branching, low, high, out } => {
            let config = generate_random(seed, depth, branching, ObstacleRange { low, high })?;
            write_text(out.as_deref(), &config.to_json(), stdout)?;
            Ok(EXIT_PASS)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_PASS;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "senv: {e}");
            e.exit_code()
        }
    }
}
