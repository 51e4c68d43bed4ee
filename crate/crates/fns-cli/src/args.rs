//! Command-line surface: subcommands and flags.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fns_core::lab::DataPreset;
use fns_core::solver::Scheme;
use std::path::PathBuf;

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Parser)]
#[command(
    name = "fnslab",
    version,
    about = "Spectral laboratory for fractional Navier-Stokes convergence experiments",
    args_override_self = true
)]
pub struct Cli {
    /// Flat key = value config file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the two-sided kernel-distance rate over an exponent grid.
    KernelDistance(KernelDistanceArgs),
    /// Time-march the velocity equation from a preset or stored field.
    Solve(SolveArgs),
    /// Time-march the coupled velocity/induction system.
    SolveMhd(SolveMhdArgs),
    /// Evaluate a spatial norm of a stored field snapshot.
    Norm(NormArgs),
    /// Sweep the exponent family against the classical reference and fit rates.
    Converge(ConvergeArgs),
    /// Coupled-family sweep fitting the combined velocity+magnetic+pressure error.
    ConvergeMhd(ConvergeMhdArgs),
    /// Re-fit a convergence rate from a previously written results.csv.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Picard,
    EtdRk2,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Picard => Scheme::PicardDuhamel,
            SchemeArg::EtdRk2 => Scheme::EtdRk2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    TaylorGreen,
    Random,
    Shear,
}

impl PresetArg {
    pub fn to_preset(self, seed: u64, spectrum_decay: f64) -> DataPreset {
        match self {
            PresetArg::TaylorGreen => DataPreset::TaylorGreen,
            PresetArg::Random => DataPreset::RandomSmooth { seed, spectrum_decay },
            PresetArg::Shear => DataPreset::Shear,
        }
    }
}

/// Output location and overwrite policy (shared by writing commands).
#[derive(Debug, Args)]
pub struct OutArgs {
    /// Directory for results (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite results from an earlier run in the same directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct KernelDistanceArgs {
    /// Comma-separated exponents strictly inside (1, 2).
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha_grid: Vec<f64>,
    /// Negative-Sobolev index of the distance (needs s > dim/2).
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    /// Time horizon; the sup runs over [t_max/scan_points, t_max].
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Adaptive-quadrature panel tolerance (relative).
    #[arg(long, default_value_t = 1e-12)]
    pub panel_tol: f64,
    /// Tail-truncation tolerance (relative).
    #[arg(long, default_value_t = 1e-10)]
    pub tail_tol: f64,
    /// Coarse time-scan resolution before golden-section refinement.
    #[arg(long, default_value_t = 64)]
    pub scan_points: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Grid points per axis (power of two, at least 8).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = TAU)]
    pub box_length: f64,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    #[arg(long, value_enum, default_value_t = PresetArg::TaylorGreen)]
    pub preset: PresetArg,
    /// Seed for the random preset.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Spectral decay exponent of the random preset (|xi|^{-decay}).
    #[arg(long, default_value_t = 4.0)]
    pub spectrum_decay: f64,
    /// Sup-norm amplitude of the initial data.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
}

#[derive(Debug, Args)]
pub struct SteppingArgs {
    /// Time step.
    #[arg(long)]
    pub dt: f64,
    #[arg(long, default_value_t = 32)]
    pub snapshots: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Picard)]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 1e-10)]
    pub picard_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub picard_max_iter: u32,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Dissipation exponent in (1, 2].
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub t_end: f64,
    #[command(flatten)]
    pub stepping: SteppingArgs,
    #[command(flatten)]
    pub preset: PresetArgs,
    /// Start from a stored snapshot instead of a preset.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SolveMhdArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub alpha: f64,
    /// Induction-equation exponent in (1, 2].
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub t_end: f64,
    #[command(flatten)]
    pub stepping: SteppingArgs,
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, value_enum, default_value_t = PresetArg::Random)]
    pub magnetic_preset: PresetArg,
    #[arg(long, default_value_t = 99)]
    pub magnetic_seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub magnetic_amplitude: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Stored field snapshot (.fnsf).
    #[arg(long)]
    pub input: PathBuf,
    /// One of: sup, l2, h<s>, h-<s>, bmo (e.g. h1.5).
    #[arg(long, default_value = "l2")]
    pub norm: String,
    /// Box length of the stored grid (snapshots do not carry it).
    #[arg(long, default_value_t = TAU)]
    pub box_length: f64,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Comma-separated exponent grid (defaults to the laboratory grid).
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    /// Prescribed initial-data convergence rate.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Initial-data perturbation size (0 = kernel-only mode).
    #[arg(long, default_value_t = 0.0)]
    pub c_pert: f64,
    /// Exponent-regime margin: alphas must exceed 1 + epsilon.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2718)]
    pub perturbation_seed: u64,
    #[arg(long, default_value_t = 4.0)]
    pub perturbation_decay: f64,
}

#[derive(Debug, Args)]
pub struct HorizonArgs {
    /// Horizon; defaults to min(uniform existence floor, 0.05).
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Run past the uniform existence floor (recorded in the manifest).
    #[arg(long)]
    pub override_floor: bool,
    /// Constant in the existence-time formula.
    #[arg(long, default_value_t = 1.0)]
    pub c_const: f64,
    /// Estimate the discretization floor from a doubled-grid pair and
    /// exclude error points within 100x of it.
    #[arg(long)]
    pub estimate_floor: bool,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub preset: PresetArgs,
    #[command(flatten)]
    pub stepping: SteppingArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Comma-separated trajectory norms to measure and fit
    /// (sup, l2, h<s>, h-<s>, bmo, l<p>l<q>, linfl<q>).
    #[arg(long, value_delimiter = ',', default_value = "sup,bmo")]
    pub norms: Vec<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ConvergeMhdArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub preset: PresetArgs,
    /// Comma-separated induction exponents (defaults to the alpha grid,
    /// i.e. the diagonal sweep).
    #[arg(long, value_delimiter = ',')]
    pub beta_grid: Option<Vec<f64>>,
    /// Magnetic initial-data convergence rate.
    #[arg(long, default_value_t = 1.0)]
    pub kappa2: f64,
    /// Magnetic perturbation size.
    #[arg(long, default_value_t = 0.0)]
    pub c_pert2: f64,
    #[arg(long, value_enum, default_value_t = PresetArg::Random)]
    pub magnetic_preset: PresetArg,
    #[arg(long, default_value_t = 99)]
    pub magnetic_seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub magnetic_amplitude: f64,
    #[arg(long, default_value_t = 4242)]
    pub magnetic_perturbation_seed: u64,
    #[command(flatten)]
    pub stepping: SteppingArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// A results.csv written by converge / converge-mhd.
    #[arg(long)]
    pub input: PathBuf,
    /// Norm label to fit (matches the norm_kind column).
    #[arg(long, default_value = "sup")]
    pub norm: String,
    /// Theoretical slope to compare against.
    #[arg(long)]
    pub predicted: f64,
    /// Optional output directory (fit.json + manifest); stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}
