//! Empirical optimal Bellman residual `J_RL` and its reward-free twin `J_NE`.
//!
//! Per transition `j`, with `u_j = r_j + gamma * max_a Q(s'_j, a)` and
//! `v_j = Q(s_j, a_j)`, the decomposition is `f_j = 2 max(u_j, v_j)`,
//! `g_j = u_j + v_j`, so that `f_j - g_j = |u_j - v_j|`.

use super::DcObjective;
use crate::error::{check_dim, Error, Result};
use crate::features::FeatureMap;
use crate::garnet::{NoRewardDataset, RewardFreeTransition, RlDataset};

/// Transitions entering a residual criterion. Without rewards the criterion
/// is the reward-sparsity term `J_NE`; with rewards it is `J_RL`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualTermSet {
    transitions: Vec<RewardFreeTransition>,
    rewards: Option<Vec<f64>>,
}

impl ResidualTermSet {
    pub fn new(transitions: Vec<RewardFreeTransition>, rewards: Option<Vec<f64>>) -> Result<Self> {
        if let Some(r) = &rewards {
            check_dim(transitions.len(), r.len())?;
        }
        Ok(Self { transitions, rewards })
    }

    pub fn from_rl(data: &RlDataset) -> Self {
        let (transitions, rewards) = data
            .transitions()
            .map(|t| {
                (
                    RewardFreeTransition {
                        state: t.state,
                        action: t.action,
                        next_state: t.next_state,
                    },
                    t.reward,
                )
            })
            .unzip();
        Self {
            transitions,
            rewards: Some(rewards),
        }
    }

    pub fn from_no_reward(data: &NoRewardDataset) -> Self {
        Self {
            transitions: data.transitions().copied().collect(),
            rewards: None,
        }
    }

    pub fn transitions(&self) -> &[RewardFreeTransition] {
        &self.transitions
    }

    pub fn rewards(&self) -> Option<&[f64]> {
        self.rewards.as_deref()
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    #[inline]
    fn reward(&self, j: usize) -> f64 {
        self.rewards.as_ref().map_or(0.0, |r| r[j])
    }

    fn check<F: FeatureMap + ?Sized>(&self, theta: &[f64], features: &F) -> Result<()> {
        check_dim(features.dimension(), theta.len())?;
        if self.is_empty() {
            return Err(Error::invalid("residual term set is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualValues {
    pub f: f64,
    pub g: f64,
    pub j: f64,
}

/// `(u_j, v_j, a*_j)` for one transition.
#[inline]
fn term<F: FeatureMap + ?Sized>(
    theta: &[f64],
    terms: &ResidualTermSet,
    j: usize,
    features: &F,
    gamma: f64,
) -> (f64, f64, usize) {
    let t = &terms.transitions[j];
    let (best, best_q) = features.best_action(theta, t.next_state);
    let u = terms.reward(j) + gamma * best_q;
    let v = features.dot(theta, t.state, t.action);
    (u, v, best)
}

pub(crate) fn residual_values<F: FeatureMap + ?Sized>(
    theta: &[f64],
    terms: &ResidualTermSet,
    features: &F,
    gamma: f64,
) -> ResidualValues {
    let (mut f, mut g, mut j) = (0.0, 0.0, 0.0);
    for idx in 0..terms.len() {
        let (u, v, _) = term(theta, terms, idx, features, gamma);
        f += 2.0 * u.max(v);
        g += u + v;
        j += (u - v).abs();
    }
    let n = terms.len() as f64;
    ResidualValues {
        f: f / n,
        g: g / n,
        j: j / n,
    }
}

pub(crate) fn residual_subgrad_g<F: FeatureMap + ?Sized>(
    theta: &[f64],
    terms: &ResidualTermSet,
    features: &F,
    gamma: f64,
) -> Vec<f64> {
    let scale = 1.0 / terms.len() as f64;
    let mut grad = vec![0.0; features.dimension()];
    for (idx, t) in terms.transitions.iter().enumerate() {
        let (_, _, best) = term(theta, terms, idx, features, gamma);
        features.accumulate(&mut grad, t.next_state, best, gamma * scale);
        features.accumulate(&mut grad, t.state, t.action, scale);
    }
    grad
}

pub(crate) fn residual_subgrad_f<F: FeatureMap + ?Sized>(
    theta: &[f64],
    terms: &ResidualTermSet,
    features: &F,
    gamma: f64,
) -> Vec<f64> {
    let scale = 1.0 / terms.len() as f64;
    let mut grad = vec![0.0; features.dimension()];
    for (idx, t) in terms.transitions.iter().enumerate() {
        let (u, v, best) = term(theta, terms, idx, features, gamma);
        // Ties take the else-branch.
        if u > v {
            features.accumulate(&mut grad, t.next_state, best, 2.0 * gamma * scale);
        } else {
            features.accumulate(&mut grad, t.state, t.action, 2.0 * scale);
        }
    }
    grad
}

/// `(f, g, J)` of the residual criterion at `theta`.
pub fn eval_residual_fg<F: FeatureMap + ?Sized>(
    theta: &[f64],
    terms: &ResidualTermSet,
    features: &F,
    gamma: f64,
) -> Result<ResidualValues> {
    terms.check(theta, features)?;
    Ok(residual_values(theta, terms, features, gamma))
}

/// Mean of `gamma * phi(s'_j, a*_j) + phi(s_j, a_j)`.
pub fn subgrad_residual_g<F: FeatureMap + ?Sized>(
    theta: &[f64],
    terms: &ResidualTermSet,
    features: &F,
    gamma: f64,
) -> Result<Vec<f64>> {
    terms.check(theta, features)?;
    Ok(residual_subgrad_g(theta, terms, features, gamma))
}

/// Mean of `2 gamma phi(s'_j, a*_j)` where `u_j > v_j`, else `2 phi(s_j, a_j)`.
pub fn subgrad_residual_f<F: FeatureMap + ?Sized>(
    theta: &[f64],
    terms: &ResidualTermSet,
    features: &F,
    gamma: f64,
) -> Result<Vec<f64>> {
    terms.check(theta, features)?;
    Ok(residual_subgrad_f(theta, terms, features, gamma))
}

/// The residual criterion alone as a [`DcObjective`].
#[derive(Debug, Clone)]
pub struct ResidualObjective<F> {
    terms: ResidualTermSet,
    features: F,
    gamma: f64,
}

impl<F: FeatureMap> ResidualObjective<F> {
    pub fn new(terms: ResidualTermSet, features: F, gamma: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("residual term set is empty"));
        }
        Ok(Self {
            terms,
            features,
            gamma,
        })
    }
}

impl<F: FeatureMap> DcObjective for ResidualObjective<F> {
    fn dimension(&self) -> usize {
        self.features.dimension()
    }

    fn eval_f(&self, theta: &[f64]) -> f64 {
        residual_values(theta, &self.terms, &self.features, self.gamma).f
    }

    fn eval_g(&self, theta: &[f64]) -> f64 {
        residual_values(theta, &self.terms, &self.features, self.gamma).g
    }

    fn eval_j(&self, theta: &[f64]) -> f64 {
        residual_values(theta, &self.terms, &self.features, self.gamma).j
    }

    fn subgrad_f(&self, theta: &[f64]) -> Vec<f64> {
        residual_subgrad_f(theta, &self.terms, &self.features, self.gamma)
    }

    fn subgrad_g(&self, theta: &[f64]) -> Vec<f64> {
        residual_subgrad_g(theta, &self.terms, &self.features, self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TabularFeatures;

    fn one_term(reward: Option<f64>) -> ResidualTermSet {
        ResidualTermSet::new(
            vec![RewardFreeTransition {
                state: 0,
                action: 1,
                next_state: 1,
            }],
            reward.map(|r| vec![r]),
        )
        .unwrap()
    }

    fn self_loop_terms() -> ResidualTermSet {
        ResidualTermSet::new(
            vec![RewardFreeTransition {
                state: 0,
                action: 0,
                next_state: 0,
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn values_at_zero() {
        let phi = TabularFeatures::new(2, 2);
        let v = eval_residual_fg(&[0.0; 4], &one_term(Some(1.0)), &phi, 0.9).unwrap();
        assert_eq!(v, ResidualValues { f: 2.0, g: 1.0, j: 1.0 });
        let v = eval_residual_fg(&[0.0; 4], &one_term(None), &phi, 0.9).unwrap();
        assert_eq!(v, ResidualValues { f: 0.0, g: 0.0, j: 0.0 });
    }

    #[test]
    fn self_loop_values() {
        let phi = TabularFeatures::new(1, 1);
        let v = eval_residual_fg(&[1.0], &self_loop_terms(), &phi, 0.9).unwrap();
        assert_eq!(v.f, 2.0);
        assert!((v.g - 1.9).abs() < 1e-15);
        assert!((v.j - 0.1).abs() < 1e-15);
    }

    #[test]
    fn g_subgradient_examples() {
        let phi = TabularFeatures::new(2, 2);
        let g = subgrad_residual_g(&[0.0; 4], &one_term(None), &phi, 0.9).unwrap();
        // 1 at (s=0, a=1), gamma at (s'=1, a=0).
        assert_eq!(g, vec![0.0, 1.0, 0.9, 0.0]);

        let one = TabularFeatures::new(1, 1);
        for theta in [-3.0, 0.0, 2.5] {
            let g = subgrad_residual_g(&[theta], &self_loop_terms(), &one, 0.9).unwrap();
            assert!((g[0] - 1.9).abs() < 1e-15);
        }
    }

    #[test]
    fn f_subgradient_branches() {
        let phi = TabularFeatures::new(2, 2);
        let g = subgrad_residual_f(&[0.0; 4], &one_term(Some(1.0)), &phi, 0.9).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 1.8, 0.0]);
        let g = subgrad_residual_f(&[0.0; 4], &one_term(None), &phi, 0.9).unwrap();
        assert_eq!(g, vec![0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn null_rewards_match_absent_rewards_exactly() {
        let phi = TabularFeatures::new(2, 2);
        let theta = [0.3, -1.2, 0.7, 0.1];
        let a = eval_residual_fg(&theta, &one_term(None), &phi, 0.9).unwrap();
        let b = eval_residual_fg(&theta, &one_term(Some(0.0)), &phi, 0.9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        let phi = TabularFeatures::new(2, 2);
        let empty = ResidualTermSet::default();
        assert!(eval_residual_fg(&[0.0; 4], &empty, &phi, 0.9).is_err());
        assert!(subgrad_residual_f(&[0.0; 4], &empty, &phi, 0.9).is_err());
        assert!(subgrad_residual_g(&[0.0; 4], &empty, &phi, 0.9).is_err());
        assert!(ResidualTermSet::new(one_term(None).transitions().to_vec(), Some(vec![])).is_err());
        assert!(ResidualObjective::new(empty, phi, 0.9).is_err());
    }
}
