use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bwp", version, about = "Interference and power gains of building layouts")]
pub struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "BWP_THREADS")]
    pub threads: Option<usize>,

    /// Directory receiving CSV outputs and manifest.json
    #[arg(long, global = true, default_value = "bwp-out")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate g_i and g_p on a UE grid inside one rectangular room
    EvalRoom(EvalRoomArgs),
    /// Evaluate a layout file or built-in building: raster, per-room means, CDFs
    EvalBuilding(EvalBuildingArgs),
    /// Mean g_i and g_p over room areas and aspect ratios
    SweepDimensions(SweepDimensionsArgs),
    /// Mean g_i and g_p of one room over log-spaced frequencies
    SweepFrequency(SweepFrequencyArgs),
    /// Compare quadrature powers with a Monte Carlo estimate
    ValidateMc(ValidateMcArgs),
    /// Train the (x, y, W, L) -> (g_i, g_p) network on rectangular rooms
    TrainSurrogate(TrainArgs),
    /// Run a trained network
    Predict(PredictArgs),
    /// Search the noise power that brings per-room mean g_i into an interval
    CalibrateNoise(CalibrateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Carrier frequency, GHz
    #[arg(long = "freq-ghz")]
    pub freq_ghz: Option<f64>,

    /// Scenario file (`key = value`); flags given alongside take precedence
    #[arg(long)]
    pub scenario: Option<PathBuf>,

    /// Noise power, dBW (`-inf` for noise-free)
    #[arg(long = "noise-dbw", allow_hyphen_values = true)]
    pub noise_dbw: Option<f64>,

    /// Integration radius, m
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,

    /// Near-field clamp radius, m
    #[arg(long = "r-min")]
    pub r_min: Option<f64>,

    #[arg(long = "two-ray", value_enum)]
    pub two_ray: Option<TwoRayArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum TwoRayArg {
    Asymptotic,
    Coherent,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlosArg {
    SingleSlope,
    Multiwall,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// UE grid spacing, m
    #[arg(long, default_value_t = 0.5)]
    pub resolution: f64,

    /// Angular sectors of the polar quadrature
    #[arg(long, default_value_t = 720)]
    pub angular: usize,

    #[arg(long = "nlos-model", value_enum, default_value_t = NlosArg::SingleSlope)]
    pub nlos_model: NlosArg,

    /// Loss per wall of generated rooms, dB
    #[arg(long = "wall-db", default_value_t = 10.0)]
    pub wall_db: f64,
}

#[derive(Args, Debug)]
pub struct EvalRoomArgs {
    /// Room width, m
    #[arg(long)]
    pub width: f64,
    /// Room length, m
    #[arg(long)]
    pub length: f64,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Builtin {
    Office,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct LayoutSource {
    /// Layout file (`bwp-layout v1`)
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Generated layout
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
}

#[derive(Args, Debug)]
pub struct EvalBuildingArgs {
    #[command(flatten)]
    pub source: LayoutSource,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct SweepDimensionsArgs {
    /// Room areas, m²
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100")]
    pub areas: Vec<f64>,
    /// Aspect ratios (length / width)
    #[arg(long = "aspect-ratios", value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
    pub aspect_ratios: Vec<f64>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct SweepFrequencyArgs {
    /// Lowest frequency, GHz
    #[arg(long, default_value_t = 0.5)]
    pub from: f64,
    /// Highest frequency, GHz
    #[arg(long, default_value_t = 100.0)]
    pub to: f64,
    /// Number of log-spaced frequencies
    #[arg(long, default_value_t = 24)]
    pub points: usize,
    /// Room area, m²
    #[arg(long, default_value_t = 60.0)]
    pub area: f64,
    #[arg(long = "aspect-ratio", default_value_t = 2.0)]
    pub aspect_ratio: f64,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct ValidateMcArgs {
    /// Transmit elements per repetition
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Deployment and integration radius for both estimators, m
    #[arg(long = "mc-r-max", default_value_t = 60.0)]
    pub mc_r_max: f64,
    /// Rectangular room width (with --length); default is open space
    #[arg(long, requires = "length", conflicts_with_all = ["layout", "builtin"])]
    pub width: Option<f64>,
    #[arg(long, requires = "width")]
    pub length: Option<f64>,
    #[arg(long, conflicts_with = "builtin")]
    pub layout: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// UE position (defaults to the layout centre)
    #[arg(long = "ue-x", allow_hyphen_values = true)]
    pub ue_x: Option<f64>,
    #[arg(long = "ue-y", allow_hyphen_values = true)]
    pub ue_y: Option<f64>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 720)]
    pub angular: usize,
    #[arg(long = "nlos-model", value_enum, default_value_t = NlosArg::SingleSlope)]
    pub nlos_model: NlosArg,
    #[arg(long = "wall-db", default_value_t = 10.0)]
    pub wall_db: f64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Frequency band to train for, GHz
    #[arg(long)]
    pub band: f64,
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100")]
    pub areas: Vec<f64>,
    #[arg(long = "aspect-ratios", value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
    pub aspect_ratios: Vec<f64>,
    #[arg(long, default_value_t = 600)]
    pub epochs: usize,
    #[arg(long = "learning-rate", default_value_t = 0.02)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long = "batch-size", default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "validation-fraction", default_value_t = 0.2)]
    pub validation_fraction: f64,
    /// Where to write the model (default: <out-dir>/model.txt)
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model file (`bwp-mlp v1`)
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with columns x, y, width, length
    #[arg(long, conflicts_with_all = ["x", "y", "width", "length"])]
    pub input: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["y", "width", "length"])]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Lower end of the target interval for per-room mean g_i
    #[arg(long, allow_hyphen_values = true)]
    pub lo: f64,
    /// Upper end of the target interval
    #[arg(long, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100")]
    pub areas: Vec<f64>,
    #[arg(long = "aspect-ratios", value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
    pub aspect_ratios: Vec<f64>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}
