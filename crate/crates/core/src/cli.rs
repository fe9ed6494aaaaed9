//! The `geobias` command line.
//!
//! Exit codes: [`EXIT_OK`] on success, [`EXIT_RUNTIME`] when an audit
//! fails, [`EXIT_USAGE`] for bad flags or configuration, and
//! [`EXIT_FINDING`] when `--fail-on-finding` is set and some finding is a
//! warning or worse. Settings come from the defaults, then the `--config`
//! JSON file, then flags; the merged result is echoed into `report.json`.

use std::ffi::OsString;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::gwr::Kernel;
use crate::pipeline::{self, Audit, AuditConfig, Coords, Experiment, KdeMode};
use crate::report::{AuditReport, Severity, REPORT_FILE};
use crate::simpson::Normalization;
use crate::synth::SurfaceKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FINDING: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "geobias", version, about = "Audit spatial analyses for endogenous bias")]
pub struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for all generators.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for report.json and figures.
    #[arg(long, global = true, value_name = "DIR", default_value = "geobias-out")]
    pub out: PathBuf,
    /// Write `created_at: null` so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Exit with code 3 when any finding is a warning or worse.
    #[arg(long, global = true)]
    pub fail_on_finding: bool,
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Emit logs on stderr as JSON lines.
    #[arg(long, global = true)]
    pub json_logs: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pooled versus grouped regression on a point CSV.
    Simpson(SimpsonArgs),
    /// GWR coefficient continuity; synthetic surfaces unless --input is given.
    Gwr(GwrArgs),
    /// KDE gradient divergence and bandwidth sweep.
    Kde(KdeArgs),
    /// Top-quantile consistency across block partitions.
    Maup(MaupArgs),
    /// 3SFCA accessibility stratified by population group.
    Access(AccessArgs),
    /// Run a packaged experiment on generated data.
    Demo(DemoArgs),
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated values, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<T>().map_err(|_| format!("cannot parse `{v}`"));
    Ok((p(a)?, p(b)?))
}

fn parse_coords(s: &str) -> Result<Coords, String> {
    let (x, y) = parse_pair::<String>(s)?;
    Ok(Coords { x, y })
}

#[derive(Debug, Args)]
pub struct SimpsonArgs {
    /// Point CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Predictor column.
    #[arg(long)]
    pub x: String,
    /// Response column.
    #[arg(long)]
    pub y: String,
    /// Group label column.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Coordinate columns as `X,Y`.
    #[arg(long, value_parser = parse_coords)]
    pub coords: Option<Coords>,
    /// Parallel-coordinates axes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub axes: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    Minmax,
    Zscore,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    StepX,
    StepDiag,
    CircularPatch,
    SmoothRamp,
}

impl From<KindArg> for SurfaceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::StepX => SurfaceKind::StepX,
            KindArg::StepDiag => SurfaceKind::StepDiag,
            KindArg::CircularPatch => SurfaceKind::CircularPatch,
            KindArg::SmoothRamp => SurfaceKind::SmoothRamp,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Bisquare,
}

#[derive(Debug, Args)]
pub struct GwrArgs {
    /// Point CSV with predictor and response columns.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub predictor: Option<String>,
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, value_parser = parse_coords)]
    pub coords: Option<Coords>,
    /// Synthetic surfaces to audit, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub kind: Option<Vec<KindArg>>,
    /// Fixed bandwidth instead of CV selection.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// CV search interval as `LO,HI`.
    #[arg(long, value_parser = parse_pair::<f64>)]
    pub search: Option<(f64, f64)>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Discontinuity quantile above which cells are flagged.
    #[arg(long)]
    pub quantile: Option<f64>,
    #[arg(long)]
    pub cell_size: Option<f64>,
    /// Noise standard deviation of the synthetic response.
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Side of the synthetic sample grid.
    #[arg(long)]
    pub grid_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KdeModeArg {
    Window,
    Sweep,
    Both,
}

#[derive(Debug, Args)]
pub struct KdeArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_coords)]
    pub coords: Option<Coords>,
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<KdeModeArg>,
    /// Group label of the local subset for the gradient comparison.
    #[arg(long)]
    pub local_group: Option<String>,
    #[arg(long)]
    pub window_pad: Option<f64>,
    #[arg(long)]
    pub h_lo: Option<f64>,
    #[arg(long)]
    pub h_hi: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub radius_factor: Option<f64>,
    #[arg(long)]
    pub cell_size: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MaupArgs {
    /// Point CSV of surface samples.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_coords)]
    pub coords: Option<Coords>,
    #[arg(long)]
    pub attr: Option<String>,
    #[arg(long)]
    pub cell_size: Option<f64>,
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub smoothness: Option<usize>,
    /// Block sides, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub block_sides: Option<Vec<usize>>,
    /// Block anchor offset as `DX,DY` cells.
    #[arg(long, value_parser = parse_pair::<i64>, allow_hyphen_values = true)]
    pub offset: Option<(i64, i64)>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub ref_side: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AccessArgs {
    /// Demand CSV: x, y, pop_total, pop_<group>...
    #[arg(long, requires = "facilities")]
    pub demand: Option<PathBuf>,
    /// Facility CSV: x, y, supply.
    #[arg(long, requires = "demand")]
    pub facilities: Option<PathBuf>,
    /// Catchment radius.
    #[arg(long)]
    pub d0: Option<f64>,
    /// Decay weight at the catchment radius.
    #[arg(long)]
    pub w_at_d0: Option<f64>,
    /// Flag groups whose mean falls below this share of the overall mean.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub cell_size: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExperimentArg {
    Simpson,
    Gwr,
    KdeWindow,
    KdeSweep,
    Maup,
    Access,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Simpson => Experiment::Simpson,
            ExperimentArg::Gwr => Experiment::Gwr,
            ExperimentArg::KdeWindow => Experiment::KdeWindow,
            ExperimentArg::KdeSweep => Experiment::KdeSweep,
            ExperimentArg::Maup => Experiment::Maup,
            ExperimentArg::Access => Experiment::Access,
        }
    }
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, value_enum)]
    pub experiment: ExperimentArg,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Layers the subcommand's flags over `cfg` and names the audit to run.
fn apply(cmd: &Command, cfg: &mut AuditConfig) -> (Audit, Option<Experiment>) {
    match cmd {
        Command::Simpson(a) => {
            let c = &mut cfg.simpson;
            c.input = Some(a.input.clone());
            c.x = a.x.clone();
            c.y = a.y.clone();
            set(&mut c.group, a.group.clone());
            set(&mut c.alpha, a.alpha);
            set(&mut c.coords, a.coords.clone());
            set(&mut c.axes, a.axes.clone());
            set(
                &mut c.normalization,
                a.normalization.map(|n| match n {
                    NormArg::Minmax => Normalization::MinMax,
                    NormArg::Zscore => Normalization::ZScore,
                }),
            );
            (Audit::Simpson, None)
        }
        Command::Gwr(a) => {
            let c = &mut cfg.gwr;
            if a.input.is_some() {
                c.input = a.input.clone();
            }
            set(&mut c.predictor, a.predictor.clone());
            set(&mut c.response, a.response.clone());
            set(&mut c.coords, a.coords.clone());
            set(&mut c.kinds, a.kind.as_ref().map(|k| k.iter().map(|&k| k.into()).collect()));
            if a.bandwidth.is_some() {
                c.bandwidth = a.bandwidth;
            }
            if a.search.is_some() {
                c.search = a.search;
            }
            set(&mut c.tolerance, a.tolerance);
            set(
                &mut c.kernel,
                a.kernel.map(|k| match k {
                    KernelArg::Gaussian => Kernel::Gaussian,
                    KernelArg::Bisquare => Kernel::Bisquare,
                }),
            );
            set(&mut c.threshold_quantile, a.quantile);
            if a.cell_size.is_some() {
                c.cell_size = a.cell_size;
            }
            set(&mut c.generator.noise_sd, a.noise_sd);
            if let Some(n) = a.grid_size {
                c.generator.grid.width = n;
                c.generator.grid.height = n;
            }
            (Audit::Gwr, None)
        }
        Command::Kde(a) => {
            let c = &mut cfg.kde;
            if a.input.is_some() {
                c.input = a.input.clone();
            }
            set(&mut c.coords, a.coords.clone());
            set(&mut c.group, a.group.clone());
            set(
                &mut c.mode,
                a.mode.map(|m| match m {
                    KdeModeArg::Window => KdeMode::Window,
                    KdeModeArg::Sweep => KdeMode::Sweep,
                    KdeModeArg::Both => KdeMode::Both,
                }),
            );
            set(&mut c.local_group, a.local_group.clone());
            set(&mut c.window_pad, a.window_pad);
            set(&mut c.h_lo, a.h_lo);
            set(&mut c.h_hi, a.h_hi);
            set(&mut c.steps, a.steps);
            set(&mut c.radius_factor, a.radius_factor);
            set(&mut c.cell_size, a.cell_size);
            (Audit::Kde, None)
        }
        Command::Maup(a) => {
            let c = &mut cfg.maup;
            if a.input.is_some() {
                c.input = a.input.clone();
            }
            set(&mut c.coords, a.coords.clone());
            set(&mut c.attr, a.attr.clone());
            set(&mut c.cell_size, a.cell_size);
            set(&mut c.side, a.side);
            set(&mut c.smoothness, a.smoothness);
            set(&mut c.block_sides, a.block_sides.clone());
            set(&mut c.offset, a.offset);
            set(&mut c.q, a.q);
            set(&mut c.ref_cell_side, a.ref_side);
            (Audit::Maup, None)
        }
        Command::Access(a) => {
            let c = &mut cfg.access;
            if a.demand.is_some() {
                c.demand = a.demand.clone();
                c.facilities = a.facilities.clone();
            }
            set(&mut c.d0, a.d0);
            set(&mut c.w_at_d0, a.w_at_d0);
            set(&mut c.threshold_ratio, a.threshold);
            if a.cell_size.is_some() {
                c.cell_size = a.cell_size;
            }
            (Audit::Access, None)
        }
        Command::Demo(a) => {
            let e: Experiment = a.experiment.into();
            (e.audit(), Some(e))
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

fn init_logging(json: bool) {
    let builder = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(tracing::Level::INFO)
        .with_target(false)
        .with_ansi(std::io::stderr().is_terminal());
    let _ = if json {
        builder.json().try_init()
    } else {
        builder.try_init()
    };
}

fn print_summary(report: &AuditReport, out: &Path) {
    println!("report: {}", out.join(REPORT_FILE).display());
    for f in &report.findings {
        let sev = serde_json::to_value(f.severity)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        let metrics: Vec<String> = f
            .metrics
            .iter()
            .filter(|(k, _)| !k.contains('.'))
            .map(|(k, v)| format!("{k}={v:.6}"))
            .collect();
        println!("{sev:<8} {:<24} {:<20} {}", f.kind, f.id, metrics.join(" "));
    }
    println!(
        "findings: {} ({} critical, {} warning, {} info)",
        report.summary.total, report.summary.critical, report.summary.warning, report.summary.info
    );
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => AuditConfig::from_file(path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => AuditConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    let (audit, experiment) = apply(&cli.command, &mut cfg);
    let effective = experiment.map_or_else(|| cfg.clone(), |e| e.configure(&cfg));
    effective
        .validate_for(audit)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if cli.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let timestamp = !cli.no_timestamp;
    let job = || match experiment {
        Some(e) => pipeline::run_demo(e, &cfg, &cli.out, timestamp),
        None => pipeline::run_audit(audit, &cfg, &cli.out, timestamp),
    };
    let report = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Runtime(Error::Internal(e.to_string())))?
            .install(job),
        None => job(),
    }
    .map_err(Failure::Runtime)?;
    print_summary(&report, &cli.out);
    if cli.fail_on_finding && report.max_severity().is_some_and(|s| s >= Severity::Warning) {
        return Ok(EXIT_FINDING);
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(cli.json_logs);
    match execute(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
