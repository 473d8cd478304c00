use std::time::Instant;

use super::report::{aggregate, Aggregation};
use super::{Algorithm, ExperimentConfig, ExperimentId};
use crate::baselines::{classif, greedy_of, lspi};
use crate::criteria::{build_rcal_objective, build_rled_objective, ZeroOneMargin};
use crate::error::{Error, Result};
use crate::features::TabularFeatures;
use crate::garnet::{
    generate_garnet, sample_expert_trajectories, sample_random_trajectories, strip_rewards,
    GarnetParams,
};
use crate::mdp::{
    exact_policy_evaluation, expected_value, policy_iteration, uniform_distribution,
    DeterministicPolicy, Mdp,
};
use crate::optim::{dca, subgradient_descent};
use crate::rng::derive_seed;

/// How independent runs are scheduled. Output never depends on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// A dedicated worker pool of the given size; falls back to sequential
    /// when the `parallel` feature is off or `workers <= 1`.
    Parallel { workers: usize },
}

impl Execution {
    pub fn with_workers(workers: usize) -> Self {
        if workers <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { workers }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: ExperimentId,
    pub garnet: usize,
    pub dataset: usize,
    pub grid_index: usize,
    pub grid_value: usize,
    pub algorithm: Algorithm,
    /// Performance ratio `T`, or the failure message of the run.
    pub performance: std::result::Result<f64, String>,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub aggregation: Aggregation,
}

/// Normalised value gap `E_rho[V_E - V_A] / E_rho[V_E]` under uniform `rho`.
pub fn performance_ratio(mdp: &Mdp, expert: &DeterministicPolicy, candidate: &DeterministicPolicy) -> Result<f64> {
    let expert_value = mean_value(mdp, expert)?;
    ratio_against(mdp, expert, expert_value, candidate)
}

fn mean_value(mdp: &Mdp, policy: &DeterministicPolicy) -> Result<f64> {
    let v = exact_policy_evaluation(policy, mdp)?;
    expected_value(&v, &uniform_distribution(mdp.n_states()))
}

fn ratio_against(
    mdp: &Mdp,
    expert: &DeterministicPolicy,
    expert_value: f64,
    candidate: &DeterministicPolicy,
) -> Result<f64> {
    if expert_value <= 1e-12 {
        return Err(Error::DegenerateExpert(expert_value));
    }
    if candidate == expert {
        return Ok(0.0);
    }
    let ratio = (expert_value - mean_value(mdp, candidate)?) / expert_value;
    // Equal-valued policies can land a rounding error below zero.
    Ok(if ratio < 0.0 && ratio > -1e-12 { 0.0 } else { ratio })
}

struct GarnetCase {
    mdp: Mdp,
    expert: DeterministicPolicy,
    expert_value: f64,
}

fn build_garnet(cfg: &ExperimentConfig, p: usize) -> Result<GarnetCase> {
    let params = GarnetParams::new(
        cfg.n_states,
        cfg.n_actions,
        cfg.gamma,
        derive_seed(cfg.master_seed, &[p as u64]),
    );
    let mdp = generate_garnet(&params)?;
    let (expert, _) = policy_iteration(&mdp)?;
    let expert_value = mean_value(&mdp, &expert)?;
    Ok(GarnetCase {
        mdp,
        expert,
        expert_value,
    })
}

/// Seeds of the expert set and the transition set of run `(p, i, k)`:
/// `derive_seed(derive_seed(master, [p, i, k]), [1])` and `[2]` respectively.
pub fn dataset_seeds(master: u64, garnet: usize, dataset: usize, grid_index: usize) -> (u64, u64) {
    let base = derive_seed(master, &[garnet as u64, dataset as u64, grid_index as u64]);
    (derive_seed(base, &[1]), derive_seed(base, &[2]))
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> (Result<T>, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Runs every algorithm of the roster on dataset draw `i` of grid point `k` on Garnet `p`.
fn run_case(
    cfg: &ExperimentConfig,
    case: &GarnetCase,
    p: usize,
    i: usize,
    k: usize,
) -> Vec<ExperimentRecord> {
    let mdp = &case.mdp;
    let features = TabularFeatures::new(mdp.n_states(), mdp.n_actions());
    let dim = mdp.n_states() * mdp.n_actions();
    let traj = cfg.trajectories_at(k);
    let (expert_seed, transition_seed) = dataset_seeds(cfg.master_seed, p, i, k);
    let d_e = sample_expert_trajectories(mdp, &case.expert, traj.expert_count, traj.expert_horizon, expert_seed);
    let d_rl = sample_random_trajectories(mdp, traj.transition_count, traj.transition_horizon, transition_seed);

    let zero = vec![0.0; dim];
    let lspi_run = if cfg.id.roster().contains(&Algorithm::Lspi) {
        Some(timed(|| lspi(&d_rl, &features, mdp.gamma(), &cfg.lspi)))
    } else {
        None
    };
    let lspi_theta = || match &lspi_run {
        Some((Ok(theta), _)) => Ok(theta.clone()),
        Some((Err(e), _)) => Err(Error::numerical(format!("LSPI start point failed: {e}"))),
        None => unreachable!("LSPI is in every RLED roster"),
    };

    cfg.id
        .roster()
        .iter()
        .map(|&algorithm| {
            let (theta, wall_time) = match algorithm {
                Algorithm::Rcal | Algorithm::RcalDc => timed(|| {
                    let d_ne = strip_rewards(&d_rl);
                    let obj = build_rcal_objective(&d_e, &d_ne, features, mdp.gamma(), cfg.lambda, ZeroOneMargin)?;
                    if algorithm == Algorithm::Rcal {
                        subgradient_descent(&obj, &zero, &cfg.gd).map(|r| r.0)
                    } else {
                        dca(&obj, &zero, &cfg.dca).map(|r| r.0)
                    }
                }),
                Algorithm::Rled | Algorithm::RledDc => timed(|| {
                    let start = lspi_theta()?;
                    let obj = build_rled_objective(&d_e, &d_rl, features, mdp.gamma(), cfg.lambda, ZeroOneMargin)?;
                    if algorithm == Algorithm::Rled {
                        subgradient_descent(&obj, &start, &cfg.gd).map(|r| r.0)
                    } else {
                        dca(&obj, &start, &cfg.dca).map(|r| r.0)
                    }
                }),
                Algorithm::Classif => timed(|| classif(&d_e, features, ZeroOneMargin, &cfg.gd).map(|r| r.0)),
                Algorithm::Lspi => {
                    let (res, t) = lspi_run.as_ref().expect("LSPI ran");
                    (res.as_ref().map(Clone::clone).map_err(|e| Error::numerical(e.to_string())), *t)
                }
            };
            let performance = theta
                .and_then(|theta| {
                    let policy = greedy_of(&theta, &features);
                    ratio_against(mdp, &case.expert, case.expert_value, &policy)
                })
                .map_err(|e| e.to_string());
            ExperimentRecord {
                experiment: cfg.id,
                garnet: p,
                dataset: i,
                grid_index: k,
                grid_value: cfg.grid[k],
                algorithm,
                performance,
                wall_time,
            }
        })
        .collect()
}

/// Runs one `(garnet, dataset, grid index)` cell in isolation.
pub fn run_task(cfg: &ExperimentConfig, garnet: usize, dataset: usize, grid_index: usize) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    if grid_index >= cfg.grid.len() {
        return Err(Error::invalid(format!("grid index {grid_index} out of range")));
    }
    let case = build_garnet(cfg, garnet)?;
    Ok(run_case(cfg, &case, garnet, dataset, grid_index))
}

fn map_tasks<T, R, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } if workers > 1 => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(|| items.par_iter().map(&f).collect()))
        }
        _ => Ok(items.iter().map(f).collect()),
    }
}

/// Runs the full grid and aggregates it.
///
/// Records are sorted by grid index, Garnet, dataset and algorithm name
/// before aggregation, so the output is independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let garnets: Vec<usize> = (0..cfg.n_garnets).collect();
    let cases = map_tasks(&garnets, exec, |&p| build_garnet(cfg, p))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, usize, usize)> = (0..cfg.grid.len())
        .flat_map(|k| {
            (0..cfg.n_garnets).flat_map(move |p| (0..cfg.n_datasets_per_point).map(move |i| (p, i, k)))
        })
        .collect();
    let mut records: Vec<ExperimentRecord> =
        map_tasks(&tasks, exec, |&(p, i, k)| run_case(cfg, &cases[p], p, i, k))?
            .into_iter()
            .flatten()
            .collect();
    records.sort_by(|a, b| {
        (a.grid_index, a.garnet, a.dataset, a.algorithm.name()).cmp(&(
            b.grid_index,
            b.garnet,
            b.dataset,
            b.algorithm.name(),
        ))
    });
    let aggregation = aggregate(cfg.id, &cfg.grid, &records);
    Ok(ExperimentOutput {
        records,
        aggregation,
    })
}
