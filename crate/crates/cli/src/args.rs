use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cexp", version, about = "Certified short-time dynamics of local Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report results outside the convergence radius, marked uncertified.
    #[arg(long)]
    pub force: bool,
    /// Include wall time in the output.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expectation value of a local observable.
    Observable(ObservableArgs),
    /// Logarithm of the Loschmidt echo tr(e^{-iHt} ρ).
    Loschmidt(LoschmidtArgs),
    /// Logarithm of a generalized echo tr(Π_l e^{-iH_l t_l} ρ).
    MultiLoschmidt(MultiArgs),
    /// Exact dense evaluation (small systems only).
    Exact(ExactArgs),
    /// Tail bound for an energy measurement.
    Concentration(ConcentrationArgs),
    /// Fidelity lower bound and speed-limit comparison.
    Qsl(QslArgs),
    /// Convergence thresholds of a Hamiltonian.
    Thresholds(ThresholdArgs),
    /// Per-site echo rate on a grid of times.
    DptScan(DptArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Short,
    Continued,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Clusters,
    LightCone,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Observable,
    Loschmidt,
    Distribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Product,
    Evolved,
}

#[derive(Debug, Args)]
pub struct ObservableArgs {
    #[arg(long)]
    pub ham: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub time: f64,
    /// Truncation order M.
    #[arg(long)]
    pub order: Option<usize>,
    /// Target error; picks the order (short) or plans the continuation.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Short)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Source::Auto)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LoschmidtArgs {
    #[arg(long)]
    pub ham: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub time: f64,
    /// Treat --time as ν and evaluate at t = iν.
    #[arg(long)]
    pub imaginary: bool,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MultiArgs {
    /// Hamiltonian of each factor, leftmost first.
    #[arg(long, required = true)]
    pub ham: Vec<PathBuf>,
    /// Time of each factor: `0.1`, `0.2i`, `0.1-0.05i`.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub time: Vec<String>,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub what: What,
    #[arg(long, required = true)]
    pub ham: Vec<PathBuf>,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub obs: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub time: Vec<String>,
    #[arg(long)]
    pub imaginary: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ConcentrationArgs {
    /// The measured Hamiltonian.
    #[arg(long)]
    pub ham: PathBuf,
    #[arg(long, value_enum, default_value_t = Variant::Product)]
    pub variant: Variant,
    #[arg(long)]
    pub delta: f64,
    /// Evolution time before the measurement (evolved variant).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub time: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct QslArgs {
    #[arg(long)]
    pub ham: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub time: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub ham: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DptArgs {
    #[arg(long)]
    pub ham: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub order: usize,
    /// Number of grid points, from t = 0 to --t-max inclusive.
    #[arg(long, default_value_t = 11)]
    pub points: usize,
    /// Largest time; defaults to half the certified window.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Observable(a) => &a.common,
            Command::Loschmidt(a) => &a.common,
            Command::MultiLoschmidt(a) => &a.common,
            Command::Exact(a) => &a.common,
            Command::Concentration(a) => &a.common,
            Command::Qsl(a) => &a.common,
            Command::Thresholds(a) => &a.common,
            Command::DptScan(a) => &a.common,
        }
    }
}
