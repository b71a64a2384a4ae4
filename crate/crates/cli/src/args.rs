use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::file::Radius;

#[derive(Debug, Parser)]
#[command(name = "hyperchoreo", version, about = "Choreographies of the n-body problem on the hyperbolic plane")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-phase solve (BFGS, then Newton) from a seed.
    Solve(SolveArgs),
    /// Check decay, gradient and residual of a solution file.
    Verify(VerifyArgs),
    /// Continue a family in R and compare with its planar limit.
    Sweep(SweepArgs),
    /// Sample a solution for plotting.
    Export(ExportArgs),
    /// Phase 1 from many random seeds; refine and write the distinct results.
    Search(SearchArgs),
}

/// Where the initial orbit comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedSource {
    Random(u64),
    File(PathBuf),
}

fn parse_seed(text: &str) -> Result<SeedSource, String> {
    Ok(match text.parse::<u64>() {
        Ok(s) => SeedSource::Random(s),
        Err(_) => SeedSource::File(PathBuf::from(text)),
    })
}

fn parse_finite_radius(text: &str) -> Result<f64, String> {
    match Radius::parse(text)? {
        Radius::Finite(r) => Ok(r),
        Radius::Planar(_) => Err("the R list must be finite".to_string()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Number of bodies.
    #[arg(long)]
    pub n: Option<usize>,
    /// Curvature radius, or `inf` for the plane.
    #[arg(long = "R", value_parser = Radius::parse)]
    pub radius: Option<Radius>,
    /// Angular velocity of the rotating frame.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Phase 1 bandwidth; 2K+1 coefficients.
    #[arg(long = "K")]
    pub bandwidth: Option<usize>,
    /// Phase 2 bandwidth [default: 2K].
    #[arg(long = "K2")]
    pub bandwidth2: Option<usize>,
    /// Random seeds excite modes 1..=M.
    #[arg(long, default_value_t = 4)]
    pub seed_modes: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// An integer for a random seed, or a solution file. Missing problem
    /// flags are taken from the file.
    #[arg(long, value_parser = parse_seed)]
    pub seed: SeedSource,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub decay: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub gradient: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub residual: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// A converged member of the family, planar or hyperbolic.
    #[arg(long)]
    pub family: PathBuf,
    /// Comma-separated radii.
    #[arg(long = "R-list", value_parser = parse_finite_radius, value_delimiter = ',', required = true)]
    pub radii: Vec<f64>,
    /// Value of the `family` column [default: file stem].
    #[arg(long)]
    pub label: Option<String>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// `t`, then `Re z_j`, `Im z_j` per body, then the lift `x1_j, x2_j, x3_j`.
    Csv,
    /// `k, |c_k|`.
    Coeffs,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
    pub format: ExportFormat,
    #[arg(long, default_value_t = 2048)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    /// Trial `i` uses random seed `rng + i`.
    #[arg(long, default_value_t = 0)]
    pub rng: u64,
    /// Directory for `solution-NN.json`, ordered by action.
    #[arg(long)]
    pub out_dir: PathBuf,
}
