//! Comparison methods: pure large-margin classification and LSPI.

use nalgebra::{DMatrix, DVector};

use crate::criteria::{build_rcal_objective, LinearQ, MarginFunction};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::garnet::{ExpertDataset, NoRewardDataset, RewardFreeTransition, RlDataset};
use crate::mdp::DeterministicPolicy;
use crate::optim::{subgradient_descent, GdConfig, OptimizationTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct LspiConfig {
    pub ridge: f64,
    pub max_policy_iters: usize,
}

impl Default for LspiConfig {
    fn default() -> Self {
        Self {
            ridge: 1e-6,
            max_policy_iters: 50,
        }
    }
}

/// Subgradient descent on `J_E` alone from the zero vector.
///
/// This is RCAL with `lambda = 0`; the reward-free term is built from a
/// single placeholder transition that carries zero weight.
pub fn classif<F, M>(
    expert: &ExpertDataset,
    features: F,
    margin: M,
    cfg: &GdConfig,
) -> Result<(Vec<f64>, OptimizationTrace)>
where
    F: FeatureMap,
    M: MarginFunction,
{
    let placeholder = NoRewardDataset {
        trajectories: vec![vec![RewardFreeTransition {
            state: 0,
            action: 0,
            next_state: 0,
        }]],
    };
    let dim = features.dimension();
    let objective = build_rcal_objective(expert, &placeholder, features, 0.5, 0.0, margin)?;
    subgradient_descent(&objective, &vec![0.0; dim], cfg)
}

/// Greedy policy of a linear Q over every state of the feature map.
pub fn greedy_of<F: FeatureMap + ?Sized>(theta: &[f64], features: &F) -> DeterministicPolicy {
    LinearQ::new(theta, features).greedy_policy()
}

/// One LSTD-Q solve: `(A + ridge I) theta = b` with
/// `A = sum phi(s,a) (phi(s,a) - gamma phi(s', pi(s')))^T` and `b = sum phi(s,a) r`.
pub fn lstdq<F: FeatureMap + ?Sized>(
    data: &RlDataset,
    features: &F,
    gamma: f64,
    policy: &DeterministicPolicy,
    ridge: f64,
) -> Result<Vec<f64>> {
    let d = features.dimension();
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    for t in data.transitions() {
        let phi = features.evaluate(t.state, t.action);
        let mut diff = phi.clone();
        features.accumulate(&mut diff, t.next_state, policy.action(t.next_state), -gamma);
        for (i, &p) in phi.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            b[i] += p * t.reward;
            for (j, &q) in diff.iter().enumerate() {
                if q != 0.0 {
                    a[(i, j)] += p * q;
                }
            }
        }
    }
    for i in 0..d {
        a[(i, i)] += ridge;
    }
    let theta = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::numerical("LSTD-Q system is singular"))?;
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("LSTD-Q solution is not finite"));
    }
    Ok(theta.iter().copied().collect())
}

/// Least-squares policy iteration from the greedy policy of `theta = 0`.
pub fn lspi<F: FeatureMap + ?Sized>(
    data: &RlDataset,
    features: &F,
    gamma: f64,
    cfg: &LspiConfig,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::invalid("LSPI needs a nonempty dataset"));
    }
    if !(cfg.ridge > 0.0) || cfg.max_policy_iters == 0 {
        return Err(Error::invalid("LSPI needs ridge > 0 and at least one iteration"));
    }
    let mut policy = greedy_of(&vec![0.0; features.dimension()], features);
    let mut theta = Vec::new();
    for _ in 0..cfg.max_policy_iters {
        theta = lstdq(data, features, gamma, &policy, cfg.ridge)?;
        let next = greedy_of(&theta, features);
        if next == policy {
            break;
        }
        policy = next;
    }
    Ok(theta)
}
