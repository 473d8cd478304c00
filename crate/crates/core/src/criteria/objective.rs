use super::margin::{margin_loss, margin_subgrad, MarginFunction};
use super::residual::{residual_subgrad_f, residual_subgrad_g, residual_values, ResidualTermSet};
use super::DcObjective;
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::garnet::{ExpertDataset, ExpertStep, NoRewardDataset, RlDataset};

/// `J = J_E + lambda * J_res`, decomposed as `f = J_E + lambda f_res` and
/// `g = lambda g_res`. RCAL uses the reward-free residual, RLED the rewarded one.
#[derive(Debug, Clone)]
pub struct ExpertResidualObjective<F, M> {
    expert: Vec<ExpertStep>,
    terms: ResidualTermSet,
    features: F,
    margin: M,
    gamma: f64,
    lambda: f64,
}

impl<F: FeatureMap, M: MarginFunction> ExpertResidualObjective<F, M> {
    pub fn new(
        expert: &ExpertDataset,
        terms: ResidualTermSet,
        features: F,
        margin: M,
        gamma: f64,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda {lambda} must be a finite value >= 0")));
        }
        if expert.is_empty() {
            return Err(Error::invalid("expert dataset is empty"));
        }
        if terms.is_empty() {
            return Err(Error::invalid("transition dataset is empty"));
        }
        Ok(Self {
            expert: expert.steps().copied().collect(),
            terms,
            features,
            margin,
            gamma,
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn features(&self) -> &F {
        &self.features
    }

    /// The expert term `J_E` alone.
    pub fn margin_loss(&self, theta: &[f64]) -> f64 {
        margin_loss(theta, &self.expert, &self.features, &self.margin)
    }
}

impl<F: FeatureMap, M: MarginFunction> DcObjective for ExpertResidualObjective<F, M> {
    fn dimension(&self) -> usize {
        self.features.dimension()
    }

    fn eval_f(&self, theta: &[f64]) -> f64 {
        let res = residual_values(theta, &self.terms, &self.features, self.gamma);
        self.margin_loss(theta) + self.lambda * res.f
    }

    fn eval_g(&self, theta: &[f64]) -> f64 {
        self.lambda * residual_values(theta, &self.terms, &self.features, self.gamma).g
    }

    fn eval_j(&self, theta: &[f64]) -> f64 {
        let res = residual_values(theta, &self.terms, &self.features, self.gamma);
        self.margin_loss(theta) + self.lambda * res.j
    }

    fn subgrad_f(&self, theta: &[f64]) -> Vec<f64> {
        let mut grad = margin_subgrad(theta, &self.expert, &self.features, &self.margin);
        if self.lambda != 0.0 {
            let res = residual_subgrad_f(theta, &self.terms, &self.features, self.gamma);
            for (g, r) in grad.iter_mut().zip(res) {
                *g += self.lambda * r;
            }
        }
        grad
    }

    fn subgrad_g(&self, theta: &[f64]) -> Vec<f64> {
        let mut grad = residual_subgrad_g(theta, &self.terms, &self.features, self.gamma);
        for g in &mut grad {
            *g *= self.lambda;
        }
        grad
    }
}

/// `J_RCAL = J_E + lambda * J_NE`.
pub fn build_rcal_objective<F: FeatureMap, M: MarginFunction>(
    expert: &ExpertDataset,
    transitions: &NoRewardDataset,
    features: F,
    gamma: f64,
    lambda: f64,
    margin: M,
) -> Result<ExpertResidualObjective<F, M>> {
    ExpertResidualObjective::new(
        expert,
        ResidualTermSet::from_no_reward(transitions),
        features,
        margin,
        gamma,
        lambda,
    )
}

/// `J_RLED = J_E + lambda * J_RL`.
pub fn build_rled_objective<F: FeatureMap, M: MarginFunction>(
    expert: &ExpertDataset,
    transitions: &RlDataset,
    features: F,
    gamma: f64,
    lambda: f64,
    margin: M,
) -> Result<ExpertResidualObjective<F, M>> {
    ExpertResidualObjective::new(
        expert,
        ResidualTermSet::from_rl(transitions),
        features,
        margin,
        gamma,
        lambda,
    )
}
