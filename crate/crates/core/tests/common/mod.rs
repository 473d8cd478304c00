#![allow(dead_code)]

use dc_control::criteria::{build_rcal_objective, build_rled_objective, ExpertResidualObjective, ZeroOneMargin};
use dc_control::features::TabularFeatures;
use dc_control::garnet::{
    generate_garnet, sample_expert_trajectories, sample_random_trajectories, strip_rewards, ExpertDataset,
    GarnetParams, RlDataset,
};
use dc_control::mdp::{policy_iteration, DeterministicPolicy, Mdp};
use dc_control::rng::{derive_seed, SplitMix64};

pub type Objective = ExpertResidualObjective<TabularFeatures, ZeroOneMargin>;

pub fn garnet(ns: usize, na: usize, gamma: f64, seed: u64) -> Mdp {
    generate_garnet(&GarnetParams::new(ns, na, gamma, seed)).unwrap()
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub mdp: Mdp,
    pub expert: DeterministicPolicy,
    pub d_e: ExpertDataset,
    pub d_rl: RlDataset,
}

/// A random Garnet with its optimal policy and sampled datasets.
pub fn instance(ns: usize, na: usize, gamma: f64, le: usize, lt: usize, seed: u64) -> Instance {
    let mdp = garnet(ns, na, gamma, derive_seed(seed, &[0]));
    let (expert, _) = policy_iteration(&mdp).unwrap();
    let d_e = sample_expert_trajectories(&mdp, &expert, le, 5, derive_seed(seed, &[1]));
    let d_rl = sample_random_trajectories(&mdp, lt, 5, derive_seed(seed, &[2]));
    Instance { mdp, expert, d_e, d_rl }
}

impl Instance {
    pub fn features(&self) -> TabularFeatures {
        TabularFeatures::new(self.mdp.n_states(), self.mdp.n_actions())
    }

    pub fn rcal(&self, lambda: f64) -> Objective {
        build_rcal_objective(&self.d_e, &strip_rewards(&self.d_rl), self.features(), self.mdp.gamma(), lambda, ZeroOneMargin)
            .unwrap()
    }

    pub fn rled(&self, lambda: f64) -> Objective {
        build_rled_objective(&self.d_e, &self.d_rl, self.features(), self.mdp.gamma(), lambda, ZeroOneMargin).unwrap()
    }
}

pub fn normal_vec(rng: &mut SplitMix64, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.normal()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(x: &[f64], t: f64, u: &[f64]) -> Vec<f64> {
    x.iter().zip(u).map(|(a, b)| a + t * b).collect()
}

/// `V^pi` by plain fixed-point iteration of the policy Bellman operator.
pub fn iterate_policy_value(mdp: &Mdp, policy: &[usize]) -> Vec<f64> {
    let ns = mdp.n_states();
    let mut v = vec![0.0; ns];
    let sweeps = ((1e-14f64).ln() / mdp.gamma().ln()).ceil() as usize + 10;
    for _ in 0..sweeps {
        v = (0..ns)
            .map(|s| mdp.reward(s, policy[s]) + mdp.gamma() * v[mdp.next_state(s, policy[s])])
            .collect();
    }
    v
}

/// Best uniform-start value over every deterministic policy.
pub fn enumerate_best_value(mdp: &Mdp) -> f64 {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut best = f64::NEG_INFINITY;
    let mut policy = vec![0usize; ns];
    loop {
        let v = iterate_policy_value(mdp, &policy);
        best = best.max(v.iter().sum::<f64>() / ns as f64);
        let mut i = 0;
        loop {
            if i == ns {
                return best;
            }
            policy[i] += 1;
            if policy[i] < na {
                break;
            }
            policy[i] = 0;
            i += 1;
        }
    }
}
