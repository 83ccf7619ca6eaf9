//! `spikerate`: simulate networks, estimate spiking rates from event logs and
//! run Monte Carlo studies. See `config.rs` for the config file format.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use spikerate::bandwidth::{is_interior, scv_select, ScvConfig, SCORE_CSV_HEADER};
use spikerate::estimator::{default_bandwidth, estimate_with, EstimateOptions, EstimateReport, Threshold};
use spikerate::experiments::{run_study, StudyKind};
use spikerate::kernel::Kernel;
use spikerate::logio::{read_log, sidecar_path, write_log};
use spikerate::simulator::{simulate, EventLog, SimConfig};

use config::{EstimationSection, RunConfig};

#[derive(Parser)]
#[command(name = "spikerate", version, about = "Simulate spiking networks and estimate their rate function")]
struct Cli {
    /// Worker threads for studies (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write its event log.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Estimate f(a) from an event log.
    Estimate(EstimateArgs),
    /// Select a bandwidth by smoothed cross-validation on an event log.
    Scv(ScvArgs),
    /// Run a Monte Carlo study and write its tables and summary.
    Study {
        kind: StudyArg,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refuse to overwrite existing outputs.
    #[arg(long)]
    no_clobber: bool,
}

#[derive(Args)]
struct EstimateArgs {
    /// Event log CSV; its `.meta` sidecar must sit next to it.
    #[arg(long)]
    log: PathBuf,
    /// Evaluation point.
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    /// Bandwidth, `auto` for SCV, or `default` for t^(-1/(2β+1)).
    #[arg(long, default_value = "default")]
    h: BandwidthArg,
    /// Admissibility threshold, or `auto` for half the pilot occupation density.
    #[arg(long, default_value = "auto")]
    r: ThresholdArg,
    /// Supplies kernel, β and d; defaults are Epanechnikov, β = 1, d = 0.05.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Estimate even when a lies outside the estimation region.
    #[arg(long)]
    force: bool,
    /// Also write the report as CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_clobber: bool,
}

#[derive(Args)]
struct ScvArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the score curve as CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_clobber: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Rate,
    Clt,
    Ergodic,
    Exchange,
    Jumpchain,
    Density,
    Likelihood,
    Scv,
}

impl From<StudyArg> for StudyKind {
    fn from(k: StudyArg) -> Self {
        match k {
            StudyArg::Rate => StudyKind::Rate,
            StudyArg::Clt => StudyKind::Clt,
            StudyArg::Ergodic => StudyKind::Ergodic,
            StudyArg::Exchange => StudyKind::Exchange,
            StudyArg::Jumpchain => StudyKind::JumpChain,
            StudyArg::Density => StudyKind::Density,
            StudyArg::Likelihood => StudyKind::Likelihood,
            StudyArg::Scv => StudyKind::Scv,
        }
    }
}

#[derive(Clone, Copy)]
enum BandwidthArg {
    Fixed(f64),
    Auto,
    Default,
}

impl FromStr for BandwidthArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "default" => Ok(Self::Default),
            _ => match s.parse::<f64>() {
                Ok(h) if h > 0.0 && h.is_finite() => Ok(Self::Fixed(h)),
                _ => Err(format!("expected a positive number, `auto` or `default`, got `{s}`")),
            },
        }
    }
}

#[derive(Clone, Copy)]
enum ThresholdArg {
    Fixed(f64),
    Auto,
}

impl FromStr for ThresholdArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(r) if r >= 0.0 && r.is_finite() => Ok(Self::Fixed(r)),
            _ => Err(format!("expected a non-negative number or `auto`, got `{s}`")),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Simulate { run } => cmd_simulate(&run),
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Scv(args) => cmd_scv(&args),
        Command::Study { kind, run } => cmd_study(kind.into(), &run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn refuse_existing(paths: &[PathBuf], no_clobber: bool) -> Result<()> {
    if no_clobber {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            bail!("{} exists and --no-clobber is set", p.display());
        }
    }
    Ok(())
}

fn cmd_simulate(run: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&run.config)?;
    let Some(sim) = &cfg.simulate else {
        bail!("config has no [simulate] section");
    };
    let dir = run.out.clone().unwrap_or_else(|| cfg.out_dir());
    let csv = dir.join("log.csv");
    refuse_existing(&[csv.clone(), sidecar_path(&csv)], run.no_clobber)?;

    let rate = cfg.rate()?;
    let sim_cfg = SimConfig::new(sim.horizon, run.seed.unwrap_or(cfg.seed)).with_initial(sim.initial.clone());
    let start = Instant::now();
    let log = simulate(&cfg.model, &rate, &sim_cfg)?;
    let elapsed = start.elapsed();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_log(&log, &csv).with_context(|| format!("writing {}", csv.display()))?;
    println!("{}: {} jumps", csv.display(), log.len());
    eprintln!("wall time {:.3} s", elapsed.as_secs_f64());
    Ok(())
}

/// Kernel, β and d from an optional config.
fn estimation_setup(config: Option<&Path>) -> Result<(Kernel, EstimationSection)> {
    match config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            Ok((cfg.kernel.build(cfg.estimation.beta)?, cfg.estimation))
        }
        None => {
            let est = EstimationSection::default();
            Ok((spikerate::experiments::KernelSpec::default().build(est.beta)?, est))
        }
    }
}

fn load_log(path: &Path) -> Result<EventLog> {
    read_log(path).with_context(|| format!("reading event log {}", path.display()))
}

/// SCV bandwidth and whether it is interior to the grid; warns otherwise.
fn select_bandwidth(log: &EventLog, q: &Kernel) -> Result<(f64, Vec<(f64, f64)>)> {
    let (h, curve) = scv_select(log, &ScvConfig::for_log(log), q)?;
    if !is_interior(h, &curve) {
        eprintln!("warning: SCV bandwidth {h} is at an endpoint of the search grid");
    }
    Ok((h, curve))
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let log = load_log(&args.log)?;
    let (q, est) = estimation_setup(args.config.as_deref())?;
    let region = spikerate::model::EstimationRegion::new(log.params(), est.beta, est.d);
    if !(region.radius_admissible() && region.contains(args.a)) {
        let why = format!(
            "a = {} is outside the estimation region (d = {}, beta = {}, m = {}, K = {})",
            args.a,
            est.d,
            est.beta,
            log.params().m(),
            log.params().k_max()
        );
        if !args.force {
            bail!("{why}; pass --force to estimate anyway");
        }
        eprintln!("warning: {why}");
    }
    if let Some(out) = &args.out {
        refuse_existing(std::slice::from_ref(out), args.no_clobber)?;
    }
    let h = match args.h {
        BandwidthArg::Fixed(h) => h,
        BandwidthArg::Default => default_bandwidth(log.horizon(), est.beta),
        BandwidthArg::Auto => select_bandwidth(&log, &q)?.0,
    };
    let threshold = match args.r {
        ThresholdArg::Fixed(r) => Threshold::Fixed(r),
        ThresholdArg::Auto => Threshold::default(),
    };
    let opts = EstimateOptions { threshold, level: args.level, ..Default::default() };
    let report = estimate_with(&log, args.a, h, &q, &opts)?;
    let text = format!("{}\n{}\n", EstimateReport::CSV_HEADER, report.csv_row());
    print!("{text}");
    if !report.a_tr {
        eprintln!("warning: occupation density {} is below r = {}; the estimate is not admissible", report.pi1_hat, report.r);
    }
    if let Some(out) = &args.out {
        fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cmd_scv(args: &ScvArgs) -> Result<()> {
    let log = load_log(&args.log)?;
    let (q, _) = estimation_setup(args.config.as_deref())?;
    if let Some(out) = &args.out {
        refuse_existing(std::slice::from_ref(out), args.no_clobber)?;
    }
    let (h, curve) = select_bandwidth(&log, &q)?;
    println!("h_hat,interior\n{h},{}", is_interior(h, &curve));
    if let Some(out) = &args.out {
        let mut text = format!("{SCORE_CSV_HEADER}\n");
        for (h, s) in &curve {
            text.push_str(&format!("{h},{s}\n"));
        }
        fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cmd_study(kind: StudyKind, run: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&run.config)?;
    let mut study = cfg.study_config(kind).with_context(|| format!("{kind} study config"))?;
    if let Some(seed) = run.seed {
        study.seed = seed;
    }
    let dir = run.out.clone().unwrap_or_else(|| cfg.out_dir());
    // The summary is written last, so its presence marks a finished run.
    refuse_existing(&[dir.join(format!("{kind}_summary.json"))], run.no_clobber)?;
    let start = Instant::now();
    let output = run_study(&study).with_context(|| format!("running {kind} study"))?;
    let paths = output.write(&dir, run.no_clobber)?;
    for p in &paths {
        println!("{}", p.display());
    }
    eprintln!("wall time {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}
