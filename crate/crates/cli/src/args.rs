use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use gibbs_tree_core::{InvariantSet, ModelParams, SolverConfig};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "gibbs-tree", version, about = "Period-two Gibbs measures of the Potts model on Cayley trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the reduced equations at one θ and classify the solutions.
    Solve(SolveArgs),
    /// Solve on a uniform θ grid and emit CSV (and optionally SVG).
    Sweep(SweepArgs),
    /// Lower bound on the number of period-two measures.
    Count(CountArgs),
    /// Check solutions against brute-force finite-volume consistency.
    Verify(VerifyArgs),
    /// Render a sweep CSV as an SVG bifurcation diagram.
    Plot(PlotArgs),
}

/// `im:<m>`, `imprime:<m>` or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetSelector {
    One(InvariantSet),
    All,
}

impl FromStr for SetSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(SetSelector::All);
        }
        s.parse::<InvariantSet>().map(SetSelector::One).map_err(|e| e.to_string())
    }
}

impl SetSelector {
    pub fn sets(&self, q: usize) -> Result<Vec<InvariantSet>, CliError> {
        match self {
            SetSelector::All => Ok(InvariantSet::all_for(q)),
            SetSelector::One(set) => {
                set.validate(q).map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(vec![*set])
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    /// Number of spin states.
    #[arg(long)]
    pub q: usize,
    /// Order of the tree (every vertex has k + 1 neighbours).
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ThetaArgs {
    /// θ = exp(Jβ).
    #[arg(long, required_unless_present = "coupling", conflicts_with_all = ["coupling", "temp"])]
    pub theta: Option<f64>,
    /// Coupling J, combined with --temp into θ = exp(J/T).
    #[arg(long, requires = "temp", allow_negative_numbers = true)]
    pub coupling: Option<f64>,
    #[arg(long, requires = "coupling")]
    pub temp: Option<f64>,
}

impl ThetaArgs {
    pub fn params(&self, shape: &ShapeArgs) -> Result<ModelParams, CliError> {
        let params = match (self.theta, self.coupling, self.temp) {
            (Some(theta), _, _) => ModelParams::new(shape.q, shape.k, theta),
            (None, Some(j), Some(t)) => {
                if t.is_nan() || t <= 0.0 {
                    return Err(CliError::Usage(format!("--temp must be positive, got {t}")));
                }
                ModelParams::from_coupling(shape.q, shape.k, j, 1.0 / t)
            }
            _ => return Err(CliError::Usage("give --theta or --coupling with --temp".into())),
        };
        params.map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Scan grid size.
    #[arg(long, default_value_t = SolverConfig::default().grid_points)]
    pub grid: usize,
    /// Relative bisection tolerance.
    #[arg(long, default_value_t = SolverConfig::default().refine_tol)]
    pub tol: f64,
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig, CliError> {
        let config = SolverConfig { grid_points: self.grid, refine_tol: self.tol, ..SolverConfig::default() };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub theta: ThetaArgs,
    #[arg(long, default_value = "all")]
    pub set: SetSelector,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write the solutions to PATH (JSON for *.json, CSV otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long)]
    pub theta_min: f64,
    #[arg(long)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 81)]
    pub steps: usize,
    #[arg(long, default_value = "all")]
    pub set: SetSelector,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub q: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub theta: ThetaArgs,
    #[arg(long, default_value = "all")]
    pub set: SetSelector,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Seed for the random interior configurations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest admissible relative consistency error.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().grid_points)]
    pub grid: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Sweep CSV to read.
    pub csv: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
}
