//! Command-line front end: `steady`, `sweep` and `bands`.
//!
//! Failures are reported on stderr as `error[CODE]: message` with a stable
//! code, and map to distinct exit statuses.

use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, ConfigError, RunConfig};
use crate::dynamics::{solve_steady, steady_residual, EquationVariant};
use crate::io::{self, Format, ReportFile, SpectrumFile};
use crate::params::PhysicalConstants;
use crate::response::{BranchMode, ResponseSample};
use crate::sweep::{scan, scan_with_workers, summarize, ResponseSpectrum, SweepError};

#[derive(Debug, Parser)]
#[command(
    name = "lhatom",
    version,
    about = "Negative-index response of a driven four-level atomic vapor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the stationary density matrix at one probe detuning.
    Steady(Common),
    /// Sweep the probe detuning and write the response spectrum.
    Sweep(Common),
    /// Sweep the probe detuning and write the band / summary report.
    Bands(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file, or `default` for the built-in parameter set.
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
    /// `MIN:MAX` for sweeps, a single detuning for `steady` (units of γ).
    #[arg(long, allow_hyphen_values = true)]
    dp: Option<String>,
    #[arg(long)]
    points: Option<usize>,
    /// as-printed | corrected
    #[arg(long)]
    variant: Option<EquationVariant>,
    /// literal | passive
    #[arg(long)]
    branch: Option<BranchMode>,
    /// csv | json
    #[arg(long)]
    format: Option<Format>,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Record the wall-clock generation time in output metadata.
    #[arg(long)]
    stamp: bool,
}

/// Machine-readable failure classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Usage,
    Config,
    Solve,
    Io,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Usage => "E_USAGE",
            ErrorCode::Config => "E_CONFIG",
            ErrorCode::Solve => "E_SOLVE",
            ErrorCode::Io => "E_IO",
        }
    }

    pub fn exit_status(self) -> i32 {
        match self {
            ErrorCode::Usage => 2,
            ErrorCode::Config => 3,
            ErrorCode::Solve => 4,
            ErrorCode::Io => 5,
        }
    }
}

struct Failure {
    code: ErrorCode,
    message: String,
}

impl Failure {
    fn new(code: ErrorCode, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(ErrorCode::Config, e)
    }
}

impl From<io::IoError> for Failure {
    fn from(e: io::IoError) -> Self {
        Failure::new(ErrorCode::Io, e)
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Invalid(_) => Failure::new(ErrorCode::Config, e),
            _ => Failure::new(ErrorCode::Solve, e),
        }
    }
}

/// Runs the command line `argv` (including the program name) and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let rendered = e.render().to_string();
            let body = rendered.strip_prefix("error: ").unwrap_or(&rendered);
            let _ = write!(err, "error[{}]: {body}", ErrorCode::Usage.as_str());
            return ErrorCode::Usage.exit_status();
        }
    };
    let result = match cli.command {
        Command::Steady(c) => steady(&c, out),
        Command::Sweep(c) => sweep(&c, out),
        Command::Bands(c) => bands(&c, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error[{}]: {}", f.code.as_str(), f.message);
            f.code.exit_status()
        }
    }
}

fn load_config(c: &Common) -> Result<RunConfig, Failure> {
    match c.config.as_deref() {
        None | Some("default") => Ok(RunConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::new(ErrorCode::Io, format!("{path}: {e}")))?;
            Ok(parse_config(&text)?)
        }
    }
}

fn parse_range(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || {
        Failure::new(
            ErrorCode::Usage,
            format!("--dp expects MIN:MAX, got `{text}`"),
        )
    };
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

/// Configuration with the sweep-related command-line overrides applied.
fn sweep_config(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = load_config(c)?;
    if let Some(dp) = &c.dp {
        let (lo, hi) = parse_range(dp)?;
        cfg.sweep.dp_min = lo;
        cfg.sweep.dp_max = hi;
    }
    if let Some(p) = c.points {
        cfg.sweep.points = p;
    }
    if let Some(v) = c.variant {
        cfg.sweep.variant = v;
    }
    if let Some(m) = c.branch {
        cfg.sweep.mode = m;
    }
    if let Some(f) = c.format {
        cfg.format = f;
    }
    if let Some(o) = &c.output {
        cfg.output_path = Some(o.clone());
    }
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(ConfigError::Validation(violations).into());
    }
    Ok(cfg)
}

fn run_scan(c: &Common, cfg: &RunConfig) -> Result<ResponseSpectrum, Failure> {
    let consts = PhysicalConstants::default();
    let spectrum = match c.threads {
        Some(0) => {
            return Err(Failure::new(
                ErrorCode::Usage,
                "--threads must be at least 1",
            ))
        }
        Some(n) => scan_with_workers(&cfg.drive, &cfg.atom, &consts, &cfg.sweep, n)?,
        None => scan(&cfg.drive, &cfg.atom, &consts, &cfg.sweep)?,
    };
    Ok(spectrum)
}

fn stamp(c: &Common) -> Option<u64> {
    c.stamp.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

fn steady(c: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = load_config(c)?;
    if let Some(dp) = &c.dp {
        cfg.drive.delta_p = dp.trim().parse().map_err(|_| {
            Failure::new(
                ErrorCode::Usage,
                format!("--dp expects a number, got `{dp}`"),
            )
        })?;
    }
    let variant = c.variant.unwrap_or(cfg.sweep.variant);
    let mode = c.branch.unwrap_or(cfg.sweep.mode);
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(ConfigError::Validation(violations).into());
    }
    let rho = solve_steady(&cfg.drive, variant).map_err(|e| Failure::new(ErrorCode::Solve, e))?;
    let sample = ResponseSample::from_steady_state(
        rho,
        &cfg.drive,
        &cfg.atom,
        &PhysicalConstants::default(),
        variant,
        mode,
    )
    .map_err(|e| Failure::new(ErrorCode::Solve, e))?;

    let w = |e: std::io::Error| Failure::new(ErrorCode::Io, e);
    writeln!(
        out,
        "# variant = {variant}, branch = {mode}, dp_over_gamma = {}",
        cfg.drive.delta_p
    )
    .map_err(w)?;
    write!(out, "{rho}").map_err(w)?;
    writeln!(out, "trace = {}", rho.trace().re).map_err(w)?;
    writeln!(
        out,
        "residual = {:e}",
        steady_residual(&cfg.drive, &rho, variant)
    )
    .map_err(w)?;
    writeln!(out, "hermiticity_defect = {:e}", rho.hermiticity_defect()).map_err(w)?;
    writeln!(out, "min_eigenvalue = {:e}", rho.min_eigenvalue()).map_err(w)?;
    let show = |z: Option<num_complex::Complex64>| {
        z.map(|z| format!("{} {:+}i", z.re, z.im))
            .unwrap_or_else(|| "null".to_owned())
    };
    writeln!(out, "eps_r = {}", show(sample.eps_r)).map_err(w)?;
    writeln!(out, "mu_r = {}", show(sample.mu_r)).map_err(w)?;
    writeln!(out, "n = {}", show(sample.n)).map_err(w)?;
    writeln!(out, "flags = {}", sample.flags).map_err(w)?;
    Ok(())
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::new(ErrorCode::Io, e))
}

fn sweep(c: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = sweep_config(c)?;
    let spectrum = run_scan(c, &cfg)?;
    match &cfg.output_path {
        Some(path) => io::write_spectrum(&spectrum, cfg.format, path, stamp(c))?,
        None => {
            let text = match cfg.format {
                Format::Csv => io::format_csv(&io::rows(&spectrum)),
                Format::Json => io::format_json(&SpectrumFile {
                    metadata: spectrum.metadata.clone(),
                    generated_at: stamp(c),
                    rows: io::rows(&spectrum),
                })?,
            };
            emit(out, &text)?;
        }
    }
    Ok(())
}

fn bands(c: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = sweep_config(c)?;
    let spectrum = run_scan(c, &cfg)?;
    let report = ReportFile {
        metadata: spectrum.metadata.clone(),
        generated_at: stamp(c),
        summary: summarize(&spectrum),
    };
    match &cfg.output_path {
        Some(path) => io::write_report(&report, cfg.format, path)?,
        None => {
            let text = io::format_report(&report, cfg.format)?;
            emit(out, &text)?;
        }
    }
    Ok(())
}
