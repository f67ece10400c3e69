//! `fogtof`: simulate polarimetric ToF captures in fog, calibrate, recover
//! depth and score the result.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration, 3 I/O, 4 numeric failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fogtof::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "fogtof", version, about = "Polarimetric time-of-flight depth through fog")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reject manifests with keys the schema does not know.
    #[arg(long, global = true)]
    strict_manifest: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a capture of the staircase scene.
    Simulate(SimulateArgs),
    /// Estimate k0 and alpha from reference captures.
    Calibrate(CalibrateArgs),
    /// Recover depth from a capture.
    Reconstruct(ReconstructArgs),
    /// Score a depth map against ground truth and append a CSV row.
    Evaluate(EvaluateArgs),
    /// Tabulate model intensity against distance.
    DecayCurve(DecayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Clear,
    Thin,
    Medium,
    Thick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    Gaussian,
    Shot,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "medium")]
    pub preset: Preset,
    /// Camera configuration JSON; defaults to 80 MHz, k0 = 0.71, 64x48.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Override the preset's sigma_i (per radian).
    #[arg(long)]
    pub sigma_i: Option<f64>,
    /// Override the preset's sigma_p (per radian).
    #[arg(long)]
    pub sigma_p: Option<f64>,
    /// Override the preset's backscatter gain.
    #[arg(long)]
    pub gain: Option<f64>,
    /// Tap noise standard deviation relative to the pixel offset.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub noise_kind: NoiseKind,
    /// Stop backscatter integrals at the target instead of at infinity.
    #[arg(long)]
    pub truncated: bool,
    /// Use the angle of the summed backscatter phasor as its phase.
    #[arg(long)]
    pub circular_phase: bool,
    /// Uniform ambient level added to every tap.
    #[arg(long, default_value_t = 0.0)]
    pub ambient: f64,
    /// Leave the target out (fog only), as needed for alpha calibration.
    #[arg(long)]
    pub empty: bool,
    /// Output directory for manifest.json, capture.pitf and truth.pitf.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Manifest of a fog-free reference capture.
    #[arg(long)]
    pub reference: PathBuf,
    /// Manifest of a capture of fog with nothing in the scene.
    #[arg(long)]
    pub empty_fog: Option<PathBuf>,
    /// Use this alpha everywhere instead of calibrating it.
    #[arg(long, conflicts_with = "empty_fog")]
    pub global_alpha: Option<f64>,
    /// Replace the calibrated alpha plane by its median.
    #[arg(long)]
    pub median_alpha: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ours,
    Cross,
    Parallel,
    Pdi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaModeArg {
    Global,
    PerPixel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Bisection,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Capture manifest.
    #[arg(long)]
    pub capture: PathBuf,
    /// Calibration file (required for `--method ours`).
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ours")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "global")]
    pub sigma_mode: SigmaModeArg,
    /// Collapse the calibrated alpha plane to its median.
    #[arg(long)]
    pub global_alpha: bool,
    #[arg(long, value_enum, default_value = "adam")]
    pub optimizer: OptimizerArg,
    /// Amplitude floor relative to the pixel offset.
    #[arg(long, default_value_t = 1e-6)]
    pub floor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Depth container written by `reconstruct`.
    #[arg(long)]
    pub depth: PathBuf,
    /// Ground-truth depth container written by `simulate`.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value = "staircase")]
    pub scene: String,
    #[arg(long, default_value = "ours")]
    pub method: String,
    #[arg(long, default_value = "unknown")]
    pub preset: String,
    #[arg(long, default_value_t = 0.0)]
    pub runtime_ms: f64,
    /// CSV file to append to.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long)]
    pub camera: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "medium")]
    pub preset: Preset,
    #[arg(long)]
    pub sigma_i: Option<f64>,
    #[arg(long)]
    pub sigma_p: Option<f64>,
    /// Nearest distance, meters.
    #[arg(long, default_value_t = 0.1)]
    pub min: f64,
    /// Farthest distance, meters.
    #[arg(long, default_value_t = 1.5)]
    pub max: f64,
    #[arg(long, default_value_t = 57)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Exit code for an error chain: the first library error decides.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<fogtof::Error>() {
            return match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Io => 3,
                ErrorClass::Numeric => 4,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<csv::Error>().is_some() {
            return 3;
        }
        if cause.downcast_ref::<commands::ConfigError>().is_some() {
            return 2;
        }
    }
    4
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = commands::Context {
        seed: cli.seed,
        strict: cli.strict_manifest,
    };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Calibrate(a) => commands::calibrate(&ctx, a),
        Command::Reconstruct(a) => commands::reconstruct(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::DecayCurve(a) => commands::decay_curve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
