//! `ppl-lab`: batch driver for point-process simulation, fitting and
//! Monte-Carlo experiments. Everything is driven by JSON configs and a
//! master seed; outputs are plot-ready long-format CSV or JSON records.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use ppl_core::apps::bandwidth::{
    select_bandwidth_cvl, select_bandwidth_poisson_lik_cv, select_bandwidth_ppl,
};
use ppl_core::apps::constant::{fit_constant_intensity, FoldIndicator};
use ppl_core::apps::hardcore::{fit_hardcore, fit_hardcore_pseudolikelihood};
use ppl_core::cv::CvScheme;
use ppl_core::experiment::{run_experiment, simulate_batch, ExperimentSpec, SelectorSpec, SimulateSpec};
use ppl_core::innovations::{RatioTransform, TestFunction};
use ppl_core::learning::LossKind;
use ppl_core::{io as pio, PplError, QuadratureGrid, RngSeed, Window};
use serde::Deserialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ppl-lab", version, about = "Point process learning laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicate patterns into CSV files plus a window sidecar.
    Simulate(SimulateArgs),
    /// Run a declarative Monte-Carlo experiment to a results CSV.
    Experiment(ExperimentArgs),
    /// Fit a single pattern file.
    Fit(FitArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config: model, count, seed, optional window.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the pattern files.
    #[arg(long)]
    out: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment spec.
    #[arg(long)]
    config: PathBuf,
    /// Results CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature grid resolution override.
    #[arg(long)]
    grid_resolution: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    /// Pattern CSV (header `x,y`).
    #[arg(long)]
    pattern: PathBuf,
    /// Window sidecar JSON; defaults to `<pattern>.window.json`.
    #[arg(long)]
    window: Option<PathBuf>,
    /// Task: constant | hardcore | bandwidth.
    #[arg(long)]
    task: String,
    /// Task options JSON (CV scheme, loss, test function).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output JSON record path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    grid_resolution: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantFitConfig {
    cv: CvScheme,
    #[serde(default)]
    gamma: f64,
    #[serde(default = "default_indicator")]
    indicator: FoldIndicator,
}

fn default_indicator() -> FoldIndicator {
    FoldIndicator::AlwaysOne
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardcoreFitConfig {
    cv: CvScheme,
    f: RatioTransform,
    loss: LossKind,
    #[serde(default = "default_r_candidates")]
    r_candidates: usize,
}

fn default_r_candidates() -> usize {
    64
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandwidthFitConfig {
    selector: SelectorSpec,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
            eprintln!("warning: thread pool already initialized");
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 1 for validation problems, 2 for runtime failures.
fn classify(err: &anyhow::Error) -> u8 {
    if let Some(ppl) = err.downcast_ref::<PplError>() {
        return match ppl {
            PplError::InvalidWindow(_)
            | PplError::InvalidPattern(_)
            | PplError::InvalidParameter(_)
            | PplError::InvalidRetention(_)
            | PplError::InsufficientPoints { .. }
            | PplError::DegenerateTestFunction(_)
            | PplError::Config(_)
            | PplError::Json(_) => 1,
            _ => 2,
        };
    }
    if err.downcast_ref::<serde_json::Error>().is_some() {
        return 1;
    }
    2
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Fit(args) => cmd_fit(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut spec: SimulateSpec = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let patterns = simulate_batch(&spec)?;
    let window = spec.window.unwrap_or_else(Window::unit);
    pio::write_window_json(&args.out.join("window.json"), window)?;
    for (i, x) in patterns.iter().enumerate() {
        pio::write_pattern_csv(&args.out.join(format!("pattern_{i:04}.csv")), x)?;
    }
    println!("wrote {} patterns to {}", patterns.len(), args.out.display());
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let mut spec: ExperimentSpec = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(g) = args.grid_resolution {
        spec.grid_resolution = Some(g);
    }
    let output = run_experiment(&spec)?;
    std::fs::write(&args.out, output.csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} rows to {}", output.rows.len(), args.out.display());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> anyhow::Result<()> {
    let window_path = args.window.clone().unwrap_or_else(|| pio::sidecar_path(&args.pattern));
    let window = pio::read_window_json(&window_path)?;
    let x = pio::read_pattern_csv(&args.pattern, window)?;
    let grid = QuadratureGrid::new(
        window,
        args.grid_resolution.unwrap_or(QuadratureGrid::DEFAULT_RESOLUTION),
    )?;
    let seed = RngSeed(args.seed);

    let record = match args.task.as_str() {
        "constant" => {
            let cfg: ConstantFitConfig = match &args.config {
                Some(p) => read_json(p)?,
                None => ConstantFitConfig {
                    cv: CvScheme::Mccv { p: 0.5, k: 400 },
                    gamma: 0.0,
                    indicator: FoldIndicator::AlwaysOne,
                },
            };
            let h = TestFunction::CoordPower { gamma: cfg.gamma };
            let fit = fit_constant_intensity(&x, &cfg.cv, &h, cfg.indicator, seed)?;
            json!({
                "task": "constant",
                "cv": cfg.cv,
                "gamma": cfg.gamma,
                "seed": args.seed,
                "estimates": {
                    "theta_median": fit.theta_median,
                    "theta_mean": fit.theta_mean,
                },
                "baselines": {
                    "theta_classical": fit.theta_classical,
                    "theta_h_weighted": fit.theta_h_weighted,
                },
                "counted_folds": fit.counted_folds,
            })
        }
        "hardcore" => {
            let cfg: HardcoreFitConfig = match &args.config {
                Some(p) => read_json(p)?,
                None => HardcoreFitConfig {
                    cv: CvScheme::Mccv { p: 0.1, k: 400 },
                    f: RatioTransform::Inverse,
                    loss: LossKind::L2,
                    r_candidates: 64,
                },
            };
            let fit = fit_hardcore(&x, &cfg.cv, cfg.f, cfg.loss, cfg.r_candidates, &grid, seed)?;
            let baseline = fit_hardcore_pseudolikelihood(&x, &grid)?;
            let landscape_csv: String = std::iter::once("range,beta,loss".to_string())
                .chain(fit.landscape.iter().map(|l| format!("{},{},{}", l.range, l.beta, l.loss)))
                .collect::<Vec<_>>()
                .join("\n");
            json!({
                "task": "hardcore",
                "cv": cfg.cv,
                "f": cfg.f,
                "loss": cfg.loss,
                "seed": args.seed,
                "estimates": { "beta": fit.beta, "range": fit.range },
                "feasible_upper": fit.feasible_upper,
                "baselines": { "beta_pl": baseline.beta, "range_pl": baseline.range },
                "landscape_csv": landscape_csv,
            })
        }
        "bandwidth" => {
            let cfg: BandwidthFitConfig = match &args.config {
                Some(p) => read_json(p)?,
                None => BandwidthFitConfig {
                    selector: SelectorSpec::Ppl {
                        f: RatioTransform::Inverse,
                        loss: LossKind::L2,
                        cv: CvScheme::Mccv { p: 0.7, k: 400 },
                    },
                },
            };
            let fit = match &cfg.selector {
                SelectorSpec::Ppl { f, loss, cv } => {
                    select_bandwidth_ppl(&x, cv, *f, *loss, &grid, seed, None)?
                }
                SelectorSpec::Cvl => select_bandwidth_cvl(&x, &grid, None)?,
                SelectorSpec::PoissonLikCv { cv } => {
                    select_bandwidth_poisson_lik_cv(&x, cv, &grid, seed, None)?
                }
            };
            let baseline = select_bandwidth_cvl(&x, &grid, None)?;
            let landscape_csv: String = std::iter::once("bandwidth,objective".to_string())
                .chain(fit.trace.iter().map(|(b, o)| format!("{b},{o}")))
                .collect::<Vec<_>>()
                .join("\n");
            json!({
                "task": "bandwidth",
                "selector": cfg.selector,
                "seed": args.seed,
                "estimates": { "bandwidth": fit.bandwidth, "objective": fit.objective },
                "baselines": { "bandwidth_cvl": baseline.bandwidth },
                "landscape_csv": landscape_csv,
            })
        }
        other => return Err(anyhow!(PplError::Config(format!("unknown task `{other}`")))),
    };

    let text = serde_json::to_string_pretty(&record)? + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
