//! Command-line front end. [`execute`] takes its environment explicitly so
//! tests can drive it in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use ternlab_core::selftest::{self, SelfTestOptions};
use ternlab_core::{ProbeSpec, RunStatus};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::CliError;
use crate::ledger;
use crate::report::{render_csv, CertificateFile, CsvRow};
use crate::sweep::{run_point, run_sweep, SweepPoint};

pub const OUTPUT_DIR_ENV: &str = "TERNLAB_OUTPUT_DIR";

pub mod exit {
    pub const CERTIFIED: i32 = 0;
    pub const INVALID: i32 = 1;
    pub const PREMISE_FAIL: i32 = 2;
    pub const NOT_CONVERGED: i32 = 3;
    pub const SOUND_BOUND_VIOLATED: i32 = 4;
}

pub fn exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Certified => exit::CERTIFIED,
        RunStatus::PremiseFail => exit::PREMISE_FAIL,
        RunStatus::NotConverged => exit::NOT_CONVERGED,
        RunStatus::SoundBoundViolated => exit::SOUND_BOUND_VIOLATED,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ternlab",
    version,
    about = "Stability certificates for perturbed ternary derivations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its certificate.
    Run(RunArgs),
    /// Run every point of the configured grid and write a CSV table.
    Sweep(SweepArgs),
    /// Run the invariant suites at fixed seeds.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; overrides `outputs.path`. Standard output when neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Base seed: derivation, direction and probe seeds become s, s+1, s+2.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Only the `probes` section is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampled tuples per algebra identity.
    #[arg(long, default_value_t = 1000)]
    pub tuples: usize,
    /// Scales product norms inside the submultiplicativity suite.
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub norm_fault: f64,
}

/// Process environment the commands depend on.
#[derive(Clone, Debug, Default)]
pub struct Env {
    pub output_dir: Option<PathBuf>,
}

impl Env {
    pub fn from_process() -> Self {
        Env {
            output_dir: std::env::var_os(OUTPUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from),
        }
    }

    fn place(&self, path: Option<&Path>, default_name: &str) -> Option<PathBuf> {
        match (&self.output_dir, path) {
            (Some(dir), Some(p)) => Some(dir.join(p.file_name().unwrap_or(default_name.as_ref()))),
            (Some(dir), None) => Some(dir.join(default_name)),
            (None, p) => p.map(Path::to_path_buf),
        }
    }
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn execute<I, T>(args: I, env: &Env, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { exit::INVALID } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, env, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, env, stdout, stderr),
        Command::Selftest(a) => cmd_selftest(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit::INVALID
        }
    }
}

fn load(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn emit(path: Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn cmd_run(
    a: &RunArgs,
    env: &Env,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let cfg = load(&a.common)?;
    cfg.experiment()?;
    let out = run_point(&cfg)?;
    let format = a.common.format.or(cfg.outputs.format).unwrap_or_default();
    let (text, default_name) = match format {
        OutputFormat::Json => (
            CertificateFile::from_outcome(&out).to_json(),
            "certificate.json",
        ),
        OutputFormat::Csv => (render_csv(&[CsvRow::from_outcome(&out)]), "certificate.csv"),
    };
    let target = env.place(
        a.common.out.as_deref().or(cfg.outputs.path.as_deref()),
        default_name,
    );
    emit(target, &text, stdout)?;
    if let Some(path) = env
        .place(cfg.outputs.ledger.as_deref(), "ledger.csv")
        .filter(|_| cfg.outputs.ledger.is_some())
    {
        ledger::append(&path, &[ledger::ledger_row(&out.ledger)])?;
    }
    let _ = match &out.certificate {
        Some(c) => writeln!(
            stderr,
            "{}: L = {}, n_star = {}, d(f,D) = {}, sound bound = {}",
            out.status.code(),
            c.contraction_constant,
            c.n_star,
            c.d_f_d,
            c.sound_bound
        ),
        None => writeln!(
            stderr,
            "{}: additive ratio = {}, bracket ratio = {}",
            out.status.code(),
            out.premise.sup_additive_ratio,
            out.premise.sup_bracket_ratio
        ),
    };
    Ok(exit_code(out.status))
}

#[derive(Serialize)]
struct SweepJsonEntry {
    p: f64,
    theta_prime: f64,
    k: usize,
    seed: u64,
    error: Option<String>,
    certificate: Option<CertificateFile>,
}

fn cmd_sweep(
    a: &SweepArgs,
    env: &Env,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut cfg = load(&a.common)?;
    if let Some(seed) = a.common.seed {
        cfg.grid.seed = vec![seed];
    }
    if a.jobs == Some(0) {
        return Err(CliError::field("jobs", "must be at least 1".into()));
    }
    let points = run_sweep(&cfg, a.jobs)?;
    let format = a
        .common
        .format
        .or(cfg.outputs.format)
        .unwrap_or(OutputFormat::Csv);
    let (text, default_name) = match format {
        OutputFormat::Csv => {
            let rows: Vec<CsvRow> = points.iter().map(SweepPoint::row).collect();
            (render_csv(&rows), "sweep.csv")
        }
        OutputFormat::Json => {
            let entries: Vec<SweepJsonEntry> = points
                .iter()
                .map(|pt| SweepJsonEntry {
                    p: pt.config.perturbation.p,
                    theta_prime: pt.config.perturbation.theta_prime,
                    k: pt.config.algebra.k,
                    seed: pt.config.derivation.seed,
                    error: pt.result.as_ref().err().map(|e| e.to_string()),
                    certificate: pt.result.as_ref().ok().map(CertificateFile::from_outcome),
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&entries)?;
            s.push('\n');
            (s, "sweep.json")
        }
    };
    emit(
        env.place(
            a.common.out.as_deref().or(cfg.outputs.path.as_deref()),
            default_name,
        ),
        &text,
        stdout,
    )?;
    if let Some(path) = env
        .place(cfg.outputs.ledger.as_deref(), "ledger.csv")
        .filter(|_| cfg.outputs.ledger.is_some())
    {
        let rows: Vec<Vec<String>> = points
            .iter()
            .filter_map(|pt| pt.result.as_ref().ok())
            .map(|out| ledger::ledger_row(&out.ledger))
            .collect();
        ledger::append(&path, &rows)?;
    }
    let failed = points.iter().filter(|pt| pt.result.is_err()).count();
    let certified = points
        .iter()
        .filter(|pt| matches!(&pt.result, Ok(o) if o.status == RunStatus::Certified))
        .count();
    let _ = writeln!(
        stderr,
        "{} points: {certified} certified, {failed} failed",
        points.len()
    );
    Ok(exit::CERTIFIED)
}

fn cmd_selftest(a: &SelftestArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let mut opts = SelfTestOptions {
        tuples: a.tuples,
        product_norm_fault: a.norm_fault,
        ..SelfTestOptions::default()
    };
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    if let Some(path) = &a.config {
        let p = ExperimentConfig::load(path)?.probes;
        if p.element_count == 0 {
            return Err(CliError::field(
                "probes.element_count",
                "must be positive".into(),
            ));
        }
        opts.probes = ProbeSpec {
            seed: p.seed,
            element_count: p.element_count,
            r_min: p.r_min,
            r_max: p.r_max,
            mu_count: p.mu_count,
        };
    }
    let suites = selftest::run_all(&opts)?;
    let mut all = true;
    for s in &suites {
        all &= s.ok();
        let verdict = if s.ok() { "ok" } else { "FAIL" };
        let _ = writeln!(
            stdout,
            "{:<24} {:>5}/{:<5} {verdict}",
            s.name, s.passed, s.total
        );
    }
    Ok(if all { exit::CERTIFIED } else { exit::INVALID })
}
