use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "isoflow",
    version,
    about = "Mean curvature flow of isoparametric families in the Weyl chamber"
)]
pub struct Cli {
    /// Read every angle argument in degrees instead of radians.
    #[arg(long, global = true)]
    pub degrees: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the chamber ODE and export the time series.
    Simulate(SimulateArgs),
    /// Evaluate the rank-2 closed-form solution on a list of times.
    ClosedForm(ClosedFormArgs),
    /// Locate the minimal leaf and report its curvature.
    Minimal(MinimalArgs),
    /// Run the identity checks and estimate audits; exits 1 on a failed identity.
    Check(CheckArgs),
    /// Browse the built-in catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// Names and parameters of every entry.
    List {
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

/// Where the root data comes from: a dihedral family, a catalog entry or a
/// roots file.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// Number of distinct principal curvatures.
    #[arg(long)]
    pub g: Option<u32>,
    #[arg(long)]
    pub m1: Option<u32>,
    #[arg(long)]
    pub m2: Option<u32>,
    /// Catalog entry supplying the family and the reference leaf.
    #[arg(long, conflicts_with_all = ["g", "m1", "m2"])]
    pub entry: Option<String>,
    /// Plain-text roots file (`rank k` header, then `m a_1 .. a_k` per line).
    #[arg(long)]
    pub roots: Option<PathBuf>,
    /// Take the roots file coordinates as given, without normalizing.
    #[arg(long, requires = "roots")]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Euclidean,
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Initial angle of a rank-2 leaf.
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    /// Initial point for general rank, comma separated; defaults to the
    /// chamber's interior direction.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Kind::Spherical)]
    pub kind: Kind,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub t_start: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// Resample on this many uniform times instead of the accepted steps.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClosedFormArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    #[arg(long, value_enum, default_value_t = Kind::Spherical)]
    pub kind: Kind,
    /// Evaluation times, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["t_start", "t_end"])]
    pub times: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, requires = "t_end")]
    pub t_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "t_start")]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MinimalArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Check every entry of the standard suite.
    #[arg(long, conflicts_with_all = ["g", "m1", "m2", "entry", "roots"])]
    pub suite: bool,
    /// Reference leaf for the estimate audits; defaults to half the minimal angle.
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    /// Seed for the random sample points; ISOFLOW_SEEDLESS=1 selects a fixed grid.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
