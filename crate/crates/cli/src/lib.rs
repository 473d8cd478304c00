//! Command-line driver: Garnet generation, single training runs, batch
//! experiments and SVG plots of aggregate reports.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

mod commands;
mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use dc_control::experiment::{ExperimentId, Scale};

pub use plot::{render_svg, PlotSeries};

#[derive(Debug, Parser)]
#[command(name = "dc-control", version, about = "Batch RL with expert data: RCAL/RLED by subgradient descent or DCA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a deterministic Garnet and write it in the MDP text format.
    Garnet(GarnetArgs),
    /// Sample datasets on an MDP, train one algorithm and report J and T.
    Train(TrainArgs),
    /// Run a comparison study and write records.csv, aggregate.csv and manifest.txt.
    Experiment(ExperimentArgs),
    /// Render an aggregate.csv as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GarnetArgs {
    /// Number of states.
    #[arg(long, default_value_t = 100, value_parser = positive)]
    pub ns: usize,
    /// Number of actions.
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub na: usize,
    /// Discount factor in (0, 1).
    #[arg(long, default_value_t = 0.9, value_parser = discount)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Rcal,
    Rcaldc,
    Rled,
    Rleddc,
    Classif,
    Lspi,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    /// MDP file written by `garnet`.
    #[arg(long)]
    pub mdp: PathBuf,
    /// Dataset seed; the expert set uses derive_seed(seed, [1]), the transitions derive_seed(seed, [2]).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Expert trajectories.
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub le: usize,
    /// Expert trajectory length.
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub he: usize,
    /// Random-policy trajectories (rewards dropped for RCAL variants).
    #[arg(long, default_value_t = 20, value_parser = positive)]
    pub lt: usize,
    /// Random-policy trajectory length.
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub ht: usize,
    /// Weight of the residual term.
    #[arg(long, default_value_t = 0.1, value_parser = nonnegative)]
    pub lambda: f64,
    /// DCA outer steps.
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub k: usize,
    /// DCA inner updates per outer step.
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub n: usize,
    /// Subgradient-descent updates (also used by classif).
    #[arg(long, default_value_t = 100, value_parser = positive)]
    pub updates: usize,
    /// Output directory for theta.txt and trace.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(after_help = "Full-scale presets (all overridable):\n  \
    rcal_expert_growth  gamma 0.9,  lambda 0.1, grid le 2,4,..,20, he 5, lt 20, ht 5\n  \
    rled_expert_growth  gamma 0.99, lambda 0.1, grid le 1,2,..,10,  he 5, lt 100, ht 5\n  \
    rled_rl_growth      gamma 0.99, lambda 1,   grid lt 50,100,..,500, le 5, he 5, ht 5\n  \
    all: 10 garnets of 100 states x 5 actions, 20 datasets per point, 100 updates, K = N = 10.\n\
    Desk scale keeps these values but uses 3 garnets of 50 states, 5 datasets per point\n\
    and the grids {2,10,20}, {1,5,10}, {50,250,500}.")]
pub struct ExperimentArgs {
    /// rcal_expert_growth, rled_expert_growth or rled_rl_growth.
    #[arg(long, value_parser = experiment_id)]
    pub id: ExperimentId,
    /// desk or paper (full scale).
    #[arg(long, default_value = "desk", value_parser = scale)]
    pub scale: Scale,
    /// Master seed for Garnets and datasets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, env = "DC_CONTROL_WORKERS", default_value_t = 1, value_parser = positive)]
    pub workers: usize,
    /// Fill the wall_time column of records.csv (makes reruns differ).
    #[arg(long)]
    pub record_timing: bool,
    /// Override: number of Garnets (full scale 10).
    #[arg(long, value_parser = positive)]
    pub garnets: Option<usize>,
    /// Override: dataset draws per grid point (full scale 20).
    #[arg(long, value_parser = positive)]
    pub datasets: Option<usize>,
    /// Override: states per Garnet (full scale 100).
    #[arg(long, value_parser = positive)]
    pub ns: Option<usize>,
    /// Override: actions per state (full scale 5).
    #[arg(long, value_parser = positive)]
    pub na: Option<usize>,
    /// Override: discount factor.
    #[arg(long, value_parser = discount)]
    pub gamma: Option<f64>,
    /// Override: residual weight.
    #[arg(long, value_parser = nonnegative)]
    pub lambda: Option<f64>,
    /// Override: comma-separated grid of the varying trajectory count.
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    pub grid: Option<Vec<usize>>,
    /// Override: expert trajectories when they are not the grid axis.
    #[arg(long, value_parser = positive)]
    pub le: Option<usize>,
    /// Override: expert trajectory length (full scale 5).
    #[arg(long, value_parser = positive)]
    pub he: Option<usize>,
    /// Override: random-policy trajectories when they are not the grid axis.
    #[arg(long, value_parser = positive)]
    pub lt: Option<usize>,
    /// Override: random-policy trajectory length (full scale 5).
    #[arg(long, value_parser = positive)]
    pub ht: Option<usize>,
    /// Override: subgradient-descent updates (full scale 100).
    #[arg(long, value_parser = positive)]
    pub updates: Option<usize>,
    /// Override: DCA outer steps (full scale 10).
    #[arg(long, value_parser = positive)]
    pub k: Option<usize>,
    /// Override: DCA inner updates (full scale 10).
    #[arg(long, value_parser = positive)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// aggregate.csv written by `experiment`.
    #[arg(long)]
    pub aggregate: PathBuf,
    /// Output SVG file.
    #[arg(long)]
    pub out: PathBuf,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn discount(s: &str) -> Result<f64, String> {
    let g: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if g > 0.0 && g < 1.0 {
        Ok(g)
    } else {
        Err("must lie in (0, 1)".into())
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err("must be finite and >= 0".into())
    }
}

fn experiment_id(s: &str) -> Result<ExperimentId, String> {
    s.parse().map_err(|e: dc_control::Error| e.to_string())
}

fn scale(s: &str) -> Result<Scale, String> {
    s.parse().map_err(|e: dc_control::Error| e.to_string())
}

/// Usage line of the subcommand named in `args`, or of the whole program.
fn usage_for(args: &[OsString]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = args
        .iter()
        .skip(1)
        .find_map(|a| cmd.find_subcommand(a).map(|s| s.clone()));
    match sub {
        Some(mut s) => s.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

/// Parses `args` (program name first) and runs the subcommand; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return 0;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for(&args));
            }
            return 1;
        }
    };
    let outcome = match cli.command {
        Command::Garnet(a) => commands::garnet(&a),
        Command::Train(a) => commands::train(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::Plot(a) => plot::plot(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
