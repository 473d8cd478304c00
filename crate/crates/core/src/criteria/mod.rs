//! Objective functions over linearly parameterised Q functions and their
//! difference-of-convex decompositions.

mod margin;
mod objective;
mod residual;
mod reward;

pub use margin::{eval_margin_loss, subgrad_margin_loss, MarginFunction, ZeroOneMargin};
pub use objective::{build_rcal_objective, build_rled_objective, ExpertResidualObjective};
pub use residual::{
    eval_residual_fg, subgrad_residual_f, subgrad_residual_g, ResidualObjective, ResidualTermSet,
    ResidualValues,
};
pub use reward::reward_of_q;

use crate::features::FeatureMap;
use crate::mdp::{DeterministicPolicy, QTable};

/// A criterion `J = f - g` with `f` and `g` convex.
///
/// Implementations must keep `eval_j` equal to `eval_f - eval_g` up to
/// rounding; `eval_j` may be computed by a different route.
pub trait DcObjective {
    fn dimension(&self) -> usize;
    fn eval_f(&self, theta: &[f64]) -> f64;
    fn eval_g(&self, theta: &[f64]) -> f64;
    fn subgrad_f(&self, theta: &[f64]) -> Vec<f64>;
    fn subgrad_g(&self, theta: &[f64]) -> Vec<f64>;

    fn eval_j(&self, theta: &[f64]) -> f64 {
        self.eval_f(theta) - self.eval_g(theta)
    }

    fn subgrad_j(&self, theta: &[f64]) -> Vec<f64> {
        let mut d = self.subgrad_f(theta);
        for (x, y) in d.iter_mut().zip(self.subgrad_g(theta)) {
            *x -= y;
        }
        d
    }
}

impl<T: DcObjective + ?Sized> DcObjective for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn eval_f(&self, theta: &[f64]) -> f64 {
        (**self).eval_f(theta)
    }
    fn eval_g(&self, theta: &[f64]) -> f64 {
        (**self).eval_g(theta)
    }
    fn subgrad_f(&self, theta: &[f64]) -> Vec<f64> {
        (**self).subgrad_f(theta)
    }
    fn subgrad_g(&self, theta: &[f64]) -> Vec<f64> {
        (**self).subgrad_g(theta)
    }
    fn eval_j(&self, theta: &[f64]) -> f64 {
        (**self).eval_j(theta)
    }
    fn subgrad_j(&self, theta: &[f64]) -> Vec<f64> {
        (**self).subgrad_j(theta)
    }
}

/// `Q_theta(s, a) = <theta, phi(s, a)>`.
#[derive(Debug, Clone, Copy)]
pub struct LinearQ<'a, F: ?Sized> {
    pub theta: &'a [f64],
    pub features: &'a F,
}

impl<'a, F: FeatureMap + ?Sized> LinearQ<'a, F> {
    pub fn new(theta: &'a [f64], features: &'a F) -> Self {
        debug_assert_eq!(theta.len(), features.dimension());
        Self { theta, features }
    }

    pub fn value(&self, state: usize, action: usize) -> f64 {
        self.features.dot(self.theta, state, action)
    }

    pub fn to_qtable(&self) -> QTable {
        let (ns, na) = (self.features.n_states(), self.features.n_actions());
        let mut q = QTable::zeros(ns, na);
        for s in 0..ns {
            for a in 0..na {
                q.set(s, a, self.value(s, a));
            }
        }
        q
    }

    pub fn greedy_policy(&self) -> DeterministicPolicy {
        DeterministicPolicy::new(
            (0..self.features.n_states())
                .map(|s| self.features.best_action(self.theta, s).0)
                .collect(),
        )
    }
}
