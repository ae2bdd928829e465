//! `dynn`: build, simulate, compare and sweep dynamic neural network
//! realizations of linear time-invariant systems.

mod commands;
mod config;
mod error;
mod io;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "dynn", version, about = "Exact LTI to dynamic neural network conversion")]
struct Cli {
    /// TOML config file; defaults to the path in DYNN_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a model into network parameters.
    Build(BuildArgs),
    /// Run the network forward pass and write an output trace.
    Simulate(SimulateArgs),
    /// Compare the network against the exact discretized response.
    Compare(CompareArgs),
    /// Report the transformation conditioning over a range of layer counts.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemKind {
    Diffusion2d,
    Convdiff2d,
    Ladder,
    Mixed,
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// Grid points per direction for the PDE systems.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Domain length.
    #[arg(long, default_value_t = 10.0)]
    pub length: f64,
    /// Diffusion coefficient (default 0.8 for diffusion2d, 1.4 for convdiff2d).
    #[arg(long)]
    pub diffusivity: Option<f64>,
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    pub vx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub vy: f64,
    /// Seed of the random generators (ladder, mixed).
    #[arg(long, default_value_t = 0)]
    pub system_seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model JSON with row-major "A", "B", "C", "D".
    #[arg(long, conflicts_with = "system")]
    pub model: Option<PathBuf>,
    /// Built-in system generator.
    #[arg(long, value_enum)]
    pub system: Option<SystemKind>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    /// Number of layers (clusters).
    #[arg(long, visible_alias = "L")]
    pub layers: Option<usize>,
    /// Clustering method.
    #[arg(long)]
    pub clustering: Option<String>,
    /// Clustering seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Condition number above which a warning is printed.
    #[arg(long)]
    pub max_cond: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Forward-pass mode.
    #[arg(long, value_enum, default_value_t = Mode::Whole)]
    pub mode: Mode,
    /// Window length for stepped mode.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Whole,
    Stepped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpKind {
    Linear,
    Constant,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV (`t,u_1,…`) or one of `sine`, `step`, `zero`. Defaults to
    /// the generator's input, else `sine`.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long, value_enum)]
    pub interp: Option<InterpKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tf: Option<f64>,
    /// Output grid spacing; defaults to the input sample times.
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Parameter JSON to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the (generated) model JSON here.
    #[arg(long)]
    pub write_model: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Parameter JSON produced by `build`.
    #[arg(long)]
    pub params: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Trace CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Parameter JSON; built from the model when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Error curve CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// SVG overlay of network and reference outputs.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    pub from: usize,
    /// Last layer count; defaults to the state dimension.
    #[arg(long)]
    pub to: Option<usize>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Sweep CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let config = cli.config.as_deref();
    let result = match &cli.command {
        Command::Build(a) => commands::build(config, a),
        Command::Simulate(a) => commands::simulate(config, a),
        Command::Compare(a) => commands::compare(config, a),
        Command::Sweep(a) => commands::sweep(config, a),
    };
    if let Err(e) = result {
        eprintln!("error[{}]: {e}", e.kind());
        std::process::exit(e.exit_code());
    }
}
