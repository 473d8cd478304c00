//! Garnet comparison studies: configuration presets, the run grid, and
//! aggregation into CSV reports.

mod report;
mod runner;

pub use report::{
    aggregate, emit_csv, format_number, improvement, write_manifest, AggregateRow, Aggregation,
    CsvOptions, AGGREGATE_COLUMNS, RECORD_COLUMNS,
};
pub use runner::{
    dataset_seeds, performance_ratio, run_experiment, run_task, Execution, ExperimentOutput,
    ExperimentRecord,
};

use std::fmt;
use std::str::FromStr;

use crate::baselines::LspiConfig;
use crate::error::{Error, Result};
use crate::optim::{DcaConfig, GdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    /// RCAL vs RCALDC vs Classif with a growing expert set.
    RcalExpertGrowth,
    /// RLED vs RLEDDC vs Classif vs LSPI with a growing expert set.
    RledExpertGrowth,
    /// RLED vs RLEDDC vs Classif vs LSPI with a growing transition set.
    RledRlGrowth,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 3] = [
        ExperimentId::RcalExpertGrowth,
        ExperimentId::RledExpertGrowth,
        ExperimentId::RledRlGrowth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::RcalExpertGrowth => "rcal_expert_growth",
            ExperimentId::RledExpertGrowth => "rled_expert_growth",
            ExperimentId::RledRlGrowth => "rled_rl_growth",
        }
    }

    pub fn roster(self) -> &'static [Algorithm] {
        match self {
            ExperimentId::RcalExpertGrowth => &[Algorithm::Rcal, Algorithm::RcalDc, Algorithm::Classif],
            _ => &[
                Algorithm::Rled,
                Algorithm::RledDc,
                Algorithm::Classif,
                Algorithm::Lspi,
            ],
        }
    }

    /// Which trajectory count the grid overrides.
    pub fn varies(self) -> GridAxis {
        match self {
            ExperimentId::RledRlGrowth => GridAxis::TransitionTrajectories,
            _ => GridAxis::ExpertTrajectories,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = ExperimentId::ALL.iter().map(|id| id.as_str()).collect();
                Error::invalid(format!("unknown experiment `{s}`; valid ids: {}", valid.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Rcal,
    RcalDc,
    Classif,
    Rled,
    RledDc,
    Lspi,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Rcal,
        Algorithm::RcalDc,
        Algorithm::Classif,
        Algorithm::Rled,
        Algorithm::RledDc,
        Algorithm::Lspi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rcal => "RCAL",
            Algorithm::RcalDc => "RCALDC",
            Algorithm::Classif => "Classif",
            Algorithm::Rled => "RLED",
            Algorithm::RledDc => "RLEDDC",
            Algorithm::Lspi => "LSPI",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name() == name)
    }

    /// The gradient-descent counterpart of a DCA variant.
    pub fn descent_counterpart(self) -> Option<Algorithm> {
        match self {
            Algorithm::RcalDc => Some(Algorithm::Rcal),
            Algorithm::RledDc => Some(Algorithm::Rled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAxis {
    ExpertTrajectories,
    TransitionTrajectories,
}

/// Trajectory counts and horizons for the expert set and the transition set
/// (`D_NE` for RCAL studies, `D_RL` for RLED studies).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryParams {
    pub expert_count: usize,
    pub expert_horizon: usize,
    pub transition_count: usize,
    pub transition_horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::invalid(format!("unknown scale `{other}` (desk, paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub n_garnets: usize,
    pub n_datasets_per_point: usize,
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    /// Values of the varying trajectory count, see [`ExperimentId::varies`].
    pub grid: Vec<usize>,
    /// Fixed trajectory parameters; the varying count is overridden per grid point.
    pub trajectories: TrajectoryParams,
    pub lambda: f64,
    pub master_seed: u64,
    pub gd: GdConfig,
    pub dca: DcaConfig,
    pub lspi: LspiConfig,
}

impl ExperimentConfig {
    /// Full-size protocol: 10 Garnets (100 states, 5 actions), 20 dataset
    /// draws per grid point, 10-point grids.
    pub fn full_scale(id: ExperimentId) -> Self {
        let (gamma, lambda, grid, trajectories) = match id {
            ExperimentId::RcalExpertGrowth => (
                0.9,
                0.1,
                (1..=10).map(|k| 2 * k).collect(),
                TrajectoryParams {
                    expert_count: 2,
                    expert_horizon: 5,
                    transition_count: 20,
                    transition_horizon: 5,
                },
            ),
            ExperimentId::RledExpertGrowth => (
                0.99,
                0.1,
                (1..=10).collect(),
                TrajectoryParams {
                    expert_count: 1,
                    expert_horizon: 5,
                    transition_count: 100,
                    transition_horizon: 5,
                },
            ),
            ExperimentId::RledRlGrowth => (
                0.99,
                1.0,
                (1..=10).map(|k| 50 * k).collect(),
                TrajectoryParams {
                    expert_count: 5,
                    expert_horizon: 5,
                    transition_count: 50,
                    transition_horizon: 5,
                },
            ),
        };
        Self {
            id,
            n_garnets: 10,
            n_datasets_per_point: 20,
            n_states: 100,
            n_actions: 5,
            gamma,
            grid,
            trajectories,
            lambda,
            master_seed: 0,
            gd: GdConfig::default(),
            dca: DcaConfig::default(),
            lspi: LspiConfig::default(),
        }
    }

    /// Reduced protocol for quick runs: 3 Garnets of 50 states, 5 draws, 3-point grids.
    pub fn desk(id: ExperimentId) -> Self {
        let grid = match id {
            ExperimentId::RcalExpertGrowth => vec![2, 10, 20],
            ExperimentId::RledExpertGrowth => vec![1, 5, 10],
            ExperimentId::RledRlGrowth => vec![50, 250, 500],
        };
        Self {
            n_garnets: 3,
            n_datasets_per_point: 5,
            n_states: 50,
            grid,
            ..Self::full_scale(id)
        }
    }

    pub fn preset(id: ExperimentId, scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self::desk(id),
            Scale::Paper => Self::full_scale(id),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.trajectories;
        if self.grid.is_empty() || self.grid.contains(&0) {
            return Err(Error::invalid("grid must be nonempty with positive counts"));
        }
        if self.n_garnets == 0 || self.n_datasets_per_point == 0 {
            return Err(Error::invalid("garnet and dataset counts must be at least 1"));
        }
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::invalid("Garnets need at least one state and one action"));
        }
        if t.expert_count == 0 || t.expert_horizon == 0 || t.transition_count == 0 || t.transition_horizon == 0 {
            return Err(Error::invalid("trajectory counts and horizons must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma {} not in (0, 1)", self.gamma)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda {} must be >= 0", self.lambda)));
        }
        Ok(())
    }

    /// Trajectory parameters at grid point `k`.
    pub fn trajectories_at(&self, k: usize) -> TrajectoryParams {
        let mut t = self.trajectories;
        match self.id.varies() {
            GridAxis::ExpertTrajectories => t.expert_count = self.grid[k],
            GridAxis::TransitionTrajectories => t.transition_count = self.grid[k],
        }
        t
    }
}
