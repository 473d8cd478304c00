//! Random Garnet MDPs and the batch datasets sampled from them.
//!
//! Generation consumes one [`SplitMix64`] stream in a fixed order: first the
//! successor of every `(s, a)` in `s * n_actions + a` order, then the
//! reward states by partial Fisher-Yates, then one reward per selected state
//! in selection order.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, Mdp};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarnetParams {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl GarnetParams {
    pub fn new(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> Self {
        Self {
            n_states,
            n_actions,
            branching: 1,
            gamma,
            seed,
        }
    }
}

/// Number of rewarded states: `N_S / 10` rounded half up, but at least one so
/// that tiny Garnets still have a non-trivial optimal policy.
pub fn reward_state_count(n_states: usize) -> usize {
    ((n_states + 5) / 10).max(1).min(n_states)
}

pub fn generate_garnet(params: &GarnetParams) -> Result<Mdp> {
    if params.branching != 1 {
        return Err(Error::Unsupported(format!(
            "branching factor {} (only deterministic Garnets are supported)",
            params.branching
        )));
    }
    if params.n_states == 0 || params.n_actions == 0 {
        return Err(Error::invalid("Garnet needs at least one state and one action"));
    }
    let mut rng = SplitMix64::new(params.seed);
    let next_state = (0..params.n_states * params.n_actions)
        .map(|_| rng.below(params.n_states))
        .collect();
    let mut reward = vec![0.0; params.n_states];
    for s in rng.sample_without_replacement(params.n_states, reward_state_count(params.n_states)) {
        reward[s] = rng.unit_open_closed();
    }
    Mdp::new(
        params.n_states,
        params.n_actions,
        next_state,
        reward,
        params.gamma,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpertStep {
    pub state: usize,
    pub action: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewardFreeTransition {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
}

/// Expert demonstrations `D_E`, kept as trajectories.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExpertDataset {
    pub trajectories: Vec<Vec<ExpertStep>>,
}

/// Reward-labelled transitions `D_RL`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RlDataset {
    pub trajectories: Vec<Vec<Transition>>,
}

/// Transitions without rewards `D_NE`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NoRewardDataset {
    pub trajectories: Vec<Vec<RewardFreeTransition>>,
}

impl ExpertDataset {
    pub fn steps(&self) -> impl Iterator<Item = &ExpertStep> {
        self.trajectories.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl RlDataset {
    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.trajectories.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl NoRewardDataset {
    pub fn transitions(&self) -> impl Iterator<Item = &RewardFreeTransition> {
        self.trajectories.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `count` expert trajectories of length `horizon` from uniform start states.
pub fn sample_expert_trajectories(
    mdp: &Mdp,
    expert: &DeterministicPolicy,
    count: usize,
    horizon: usize,
    seed: u64,
) -> ExpertDataset {
    let mut rng = SplitMix64::new(seed);
    let trajectories = (0..count)
        .map(|_| {
            let mut state = rng.below(mdp.n_states());
            (0..horizon)
                .map(|_| {
                    let action = expert.action(state);
                    let step = ExpertStep { state, action };
                    state = mdp.next_state(state, action);
                    step
                })
                .collect()
        })
        .collect();
    ExpertDataset { trajectories }
}

/// `count` trajectories of length `horizon` under the uniform random policy.
pub fn sample_random_trajectories(mdp: &Mdp, count: usize, horizon: usize, seed: u64) -> RlDataset {
    let mut rng = SplitMix64::new(seed);
    let trajectories = (0..count)
        .map(|_| {
            let mut state = rng.below(mdp.n_states());
            (0..horizon)
                .map(|_| {
                    let action = rng.below(mdp.n_actions());
                    let next_state = mdp.next_state(state, action);
                    let t = Transition {
                        state,
                        action,
                        reward: mdp.reward(state, action),
                        next_state,
                    };
                    state = next_state;
                    t
                })
                .collect()
        })
        .collect();
    RlDataset { trajectories }
}

pub fn strip_rewards(data: &RlDataset) -> NoRewardDataset {
    NoRewardDataset {
        trajectories: data
            .trajectories
            .iter()
            .map(|traj| {
                traj.iter()
                    .map(|t| RewardFreeTransition {
                        state: t.state,
                        action: t.action,
                        next_state: t.next_state,
                    })
                    .collect()
            })
            .collect(),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn finish<W: Write>(path: &Path, writer: csv::Writer<W>) -> Result<()> {
    writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Writes `traj,step,s,a` rows.
pub fn write_expert_csv(data: &ExpertDataset, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(["traj", "step", "s", "a"]).map_err(csv_err)?;
    for (j, traj) in data.trajectories.iter().enumerate() {
        for (i, step) in traj.iter().enumerate() {
            w.serialize((j, i, step.state, step.action)).map_err(csv_err)?;
        }
    }
    finish(path, w)
}

/// Writes `traj,step,s,a,r,s_next` rows.
pub fn write_rl_csv(data: &RlDataset, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(["traj", "step", "s", "a", "r", "s_next"])
        .map_err(csv_err)?;
    for (j, traj) in data.trajectories.iter().enumerate() {
        for (i, t) in traj.iter().enumerate() {
            w.write_record([
                j.to_string(),
                i.to_string(),
                t.state.to_string(),
                t.action.to_string(),
                t.reward.to_string(),
                t.next_state.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(path, w)
}

/// Writes `traj,step,s,a,s_next` rows.
pub fn write_no_reward_csv(data: &NoRewardDataset, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(["traj", "step", "s", "a", "s_next"])
        .map_err(csv_err)?;
    for (j, traj) in data.trajectories.iter().enumerate() {
        for (i, t) in traj.iter().enumerate() {
            w.serialize((j, i, t.state, t.action, t.next_state))
                .map_err(csv_err)?;
        }
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::policy_iteration;

    #[test]
    fn reward_state_rounding() {
        assert_eq!(reward_state_count(100), 10);
        assert_eq!(reward_state_count(50), 5);
        assert_eq!(reward_state_count(15), 2);
        assert_eq!(reward_state_count(14), 1);
        assert_eq!(reward_state_count(4), 1);
        assert_eq!(reward_state_count(1), 1);
    }

    #[test]
    fn full_sized_garnet_has_ten_reward_states() {
        let mdp = generate_garnet(&GarnetParams::new(100, 5, 0.9, 42)).unwrap();
        let rewards = mdp.state_rewards().unwrap();
        assert_eq!(rewards.iter().filter(|&&r| r != 0.0).count(), 10);
        assert!(rewards.iter().all(|&r| (0.0..=1.0).contains(&r)));
        for s in 0..100 {
            for a in 0..5 {
                assert!(mdp.next_state(s, a) < 100);
            }
        }
    }

    #[test]
    fn branching_other_than_one_is_rejected() {
        let mut p = GarnetParams::new(10, 2, 0.9, 1);
        p.branching = 2;
        assert!(matches!(generate_garnet(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let p = GarnetParams::new(30, 4, 0.9, 7);
        assert_eq!(generate_garnet(&p).unwrap(), generate_garnet(&p).unwrap());
        let q = GarnetParams { seed: 8, ..p };
        assert_ne!(generate_garnet(&p).unwrap(), generate_garnet(&q).unwrap());
    }

    #[test]
    fn expert_sampling_shapes() {
        let mdp = generate_garnet(&GarnetParams::new(20, 3, 0.9, 1)).unwrap();
        let (expert, _) = policy_iteration(&mdp).unwrap();
        let data = sample_expert_trajectories(&mdp, &expert, 2, 5, 9);
        assert_eq!(data.len(), 10);
        assert_eq!(data.trajectories.len(), 2);
        for traj in &data.trajectories {
            for w in traj.windows(2) {
                assert_eq!(w[0].action, expert.action(w[0].state));
                assert_eq!(w[1].state, mdp.next_state(w[0].state, w[0].action));
            }
        }

        let single = Mdp::new(1, 2, vec![0, 0], vec![1.0], 0.9).unwrap();
        let data = sample_expert_trajectories(&single, &DeterministicPolicy::constant(1, 1), 3, 4, 0);
        assert!(data.steps().all(|s| s.state == 0 && s.action == 1));
    }

    #[test]
    fn random_sampling_shapes() {
        let mdp = generate_garnet(&GarnetParams::new(20, 3, 0.9, 2)).unwrap();
        let data = sample_random_trajectories(&mdp, 100, 5, 3);
        assert_eq!(data.len(), 500);
        for t in data.transitions() {
            assert_eq!(t.reward, mdp.reward(t.state, t.action));
            assert_eq!(t.next_state, mdp.next_state(t.state, t.action));
        }
        for traj in &data.trajectories {
            for w in traj.windows(2) {
                assert_eq!(w[0].next_state, w[1].state);
            }
        }
        assert_eq!(data, sample_random_trajectories(&mdp, 100, 5, 3));
    }

    #[test]
    fn strip_rewards_examples() {
        assert!(strip_rewards(&RlDataset::default()).is_empty());
        let one = RlDataset {
            trajectories: vec![vec![Transition {
                state: 1,
                action: 2,
                reward: 0.5,
                next_state: 3,
            }]],
        };
        let stripped = strip_rewards(&one);
        assert_eq!(
            stripped.trajectories,
            vec![vec![RewardFreeTransition {
                state: 1,
                action: 2,
                next_state: 3
            }]]
        );
        let mdp = generate_garnet(&GarnetParams::new(10, 2, 0.9, 5)).unwrap();
        let data = sample_random_trajectories(&mdp, 7, 3, 1);
        assert_eq!(strip_rewards(&data).len(), data.len());
    }

    #[test]
    fn successor_draws_look_uniform() {
        // 10 states x 10^4 actions = 10^5 successor draws.
        let mdp = generate_garnet(&GarnetParams::new(10, 10_000, 0.9, 123)).unwrap();
        let mut counts = [0usize; 10];
        for s in 0..10 {
            for a in 0..10_000 {
                counts[mdp.next_state(s, a)] += 1;
            }
        }
        let n = 100_000.0;
        let sigma = (n * 0.1 * 0.9f64).sqrt();
        for c in counts {
            assert!((c as f64 - n * 0.1).abs() < 5.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn csv_headers() {
        let dir = tempfile::tempdir().unwrap();
        let mdp = generate_garnet(&GarnetParams::new(10, 2, 0.9, 5)).unwrap();
        let rl = sample_random_trajectories(&mdp, 2, 2, 1);
        let path = dir.path().join("rl.csv");
        write_rl_csv(&rl, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("traj,step,s,a,r,s_next\n"));
        assert_eq!(text.lines().count(), 5);

        let path = dir.path().join("ne.csv");
        write_no_reward_csv(&strip_rewards(&rl), &path).unwrap();
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .starts_with("traj,step,s,a,s_next\n"));

        let path = dir.path().join("e.csv");
        write_expert_csv(&ExpertDataset::default(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "traj,step,s,a\n");
    }
}
