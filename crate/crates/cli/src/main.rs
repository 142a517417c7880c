use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrwin::estimate::{report, FactoryModel, PlatformParams};
use corrwin::harness::{compare_windowed, render, run_experiment, summary, ExperimentConfig, Format, HarnessError, Point};
use corrwin::{plan_for_mode, WindowMode};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "corrwin", version, about = "Correlated window decoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample shots and print their syndromes and true logical flips.
    Simulate(PointArgs),
    /// Sample and decode shots one by one.
    Decode(PointArgs),
    /// Print the window plan of each distance.
    Plan(RunArgs),
    /// Estimate failure rates over the configured grid.
    Experiment(RunArgs),
    /// Compare windowed against unwindowed decoding on paired shots.
    Compare(RunArgs),
    /// Time and space estimates for lookup additions.
    Estimate(EstimateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Number of shots; defaults to the config's shot count, capped at 10.
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, default_value_t = 100.0)]
    gamma: f64,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 27)]
    d: i64,
    #[arg(long, default_value_t = 1e-3)]
    p: f64,
    #[arg(long, default_value_t = 1e-2)]
    pth: f64,
    /// Factory accounting overrides (TOML).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Print JSON instead of the text report.
    #[arg(long)]
    json: bool,
}

enum Failure {
    Config(String),
    Infeasible(String),
    Other(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => Failure::Config(e.to_string()),
            HarnessError::Infeasible { .. } => Failure::Infeasible(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut config = ExperimentConfig::load(&self.config).map_err(|e| Failure::Config(e.to_string()))?;
        config.seed = self.seed.unwrap_or(config.seed);
        config.workers = self.workers.unwrap_or(config.workers);
        config.validate()?;
        Ok(config)
    }

    fn emit<T: Serialize>(&self, rows: &[T]) -> Result<(), Failure> {
        let text = render(rows, self.format)?;
        write_out(self.out.as_deref(), &text)
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Other(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ShotRow {
    d: usize,
    p: f64,
    shot: u64,
    seed: String,
    /// Indices of fired checks, space separated.
    syndrome: String,
    logical: u64,
}

#[derive(Serialize)]
struct DecodeRow {
    d: usize,
    p: f64,
    mode: WindowMode,
    shot: u64,
    seed: String,
    logical: u64,
    decoded: u64,
    failed: bool,
}

#[derive(Serialize)]
struct PlanRow {
    d: usize,
    mode: WindowMode,
    window: usize,
    stage: usize,
    region: String,
    commit: String,
    buffers: String,
}

fn shot_count(args: &PointArgs, config: &ExperimentConfig) -> u64 {
    args.shots.unwrap_or_else(|| config.shots.unwrap_or(10).min(10))
}

fn simulate(args: &PointArgs) -> Result<(), Failure> {
    let config = args.run.load()?;
    let mut rows = Vec::new();
    for &d in &config.distances {
        for &p in &config.error_rates {
            let point = Point::build(&config, d, p)?;
            for shot in 0..shot_count(args, &config) {
                let seed = point.seed(config.seed, shot);
                let (syndrome, logical) = point.sample(seed);
                let fired: Vec<String> =
                    syndrome.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i.to_string()).collect();
                rows.push(ShotRow { d, p, shot, seed: format!("{seed:#018x}"), syndrome: fired.join(" "), logical });
            }
        }
    }
    args.run.emit(&rows)
}

fn decode(args: &PointArgs) -> Result<(), Failure> {
    let config = args.run.load()?;
    let mut rows = Vec::new();
    for &d in &config.distances {
        for &p in &config.error_rates {
            let point = Point::build(&config, d, p)?;
            let decoder = point.decoder(&config, config.mode)?;
            for shot in 0..shot_count(args, &config) {
                let seed = point.seed(config.seed, shot);
                let (syndrome, logical) = point.sample(seed);
                let decoded = match (&decoder, point.graph()) {
                    (Some(dec), Some(graph)) => dec
                        .decode(graph, &syndrome)
                        .map_err(|message| HarnessError::Infeasible { d, p, shot, seed, message })?,
                    _ => 0,
                };
                rows.push(DecodeRow {
                    d,
                    p,
                    mode: config.mode,
                    shot,
                    seed: format!("{seed:#018x}"),
                    logical,
                    decoded,
                    failed: decoded != logical,
                });
            }
        }
    }
    args.run.emit(&rows)
}

fn plan(args: &RunArgs) -> Result<(), Failure> {
    let config = args.load()?;
    if config.mode == WindowMode::None {
        return Err(Failure::Config("plan needs a window mode other than none".into()));
    }
    let mut rows = Vec::new();
    for &d in &config.distances {
        let circuit = config.circuit_at(d)?;
        let plan = plan_for_mode(&circuit, config.mode).map_err(|e| Failure::Config(e.to_string()))?;
        for (stage, windows) in plan.stages.iter().enumerate() {
            for w in windows {
                let buffers: Vec<String> = w.buffers.iter().map(|r| r.to_string()).collect();
                rows.push(PlanRow {
                    d,
                    mode: plan.mode,
                    window: w.id,
                    stage,
                    region: w.region.to_string(),
                    commit: w.commit.to_string(),
                    buffers: buffers.join(" "),
                });
            }
        }
    }
    args.emit(&rows)
}

fn experiment(args: &RunArgs) -> Result<(), Failure> {
    let rows = run_experiment(&args.load()?)?;
    if args.out.is_some() {
        eprint!("{}", summary(&rows));
    }
    args.emit(&rows)
}

fn compare(args: &RunArgs) -> Result<(), Failure> {
    let config = args.load()?;
    if config.mode == WindowMode::None {
        return Err(Failure::Config("compare needs a window mode other than none".into()));
    }
    args.emit(&compare_windowed(&config)?)
}

fn estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let config = |e: &dyn std::fmt::Display| Failure::Config(e.to_string());
    let mut params = PlatformParams::new(args.gamma, args.eta, args.d).map_err(|e| config(&e))?;
    params.p = args.p;
    params.p_th = args.pth;
    params.validate().map_err(|e| config(&e))?;
    let model = match &args.model {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            toml::from_str::<FactoryModel>(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => FactoryModel::default(),
    };
    let r = report(&params, &model).map_err(|e| config(&e))?;
    let text = if args.json {
        serde_json::to_string_pretty(&r).map_err(|e| Failure::Other(e.to_string()))? + "\n"
    } else {
        r.to_string()
    };
    write_out(None, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Decode(a) => decode(a),
        Command::Plan(a) => plan(a),
        Command::Experiment(a) => experiment(a),
        Command::Compare(a) => compare(a),
        Command::Estimate(a) => estimate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
