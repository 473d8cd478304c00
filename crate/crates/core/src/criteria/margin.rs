use crate::error::{check_dim, Error, Result};
use crate::features::FeatureMap;
use crate::garnet::{ExpertDataset, ExpertStep};

/// Margin `l(s, a_E, a) >= 0` with `l(s, a_E, a_E) = 0`.
pub trait MarginFunction: Send + Sync {
    fn margin(&self, state: usize, expert_action: usize, action: usize) -> f64;
}

/// `1` for any action other than the expert's, `0` otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroOneMargin;

impl MarginFunction for ZeroOneMargin {
    #[inline]
    fn margin(&self, _state: usize, expert_action: usize, action: usize) -> f64 {
        if action == expert_action {
            0.0
        } else {
            1.0
        }
    }
}

/// Loss-augmented argmax and its score, ties to the smallest action.
fn augmented_best<F, M>(theta: &[f64], step: &ExpertStep, features: &F, margin: &M) -> (usize, f64)
where
    F: FeatureMap + ?Sized,
    M: MarginFunction + ?Sized,
{
    let score =
        |a| features.dot(theta, step.state, a) + margin.margin(step.state, step.action, a);
    let mut best = (0, score(0));
    for a in 1..features.n_actions() {
        let v = score(a);
        if v > best.1 {
            best = (a, v);
        }
    }
    best
}

pub(crate) fn margin_loss<F, M>(theta: &[f64], steps: &[ExpertStep], features: &F, margin: &M) -> f64
where
    F: FeatureMap + ?Sized,
    M: MarginFunction + ?Sized,
{
    let total: f64 = steps
        .iter()
        .map(|step| {
            augmented_best(theta, step, features, margin).1
                - features.dot(theta, step.state, step.action)
        })
        .sum();
    total / steps.len() as f64
}

pub(crate) fn margin_subgrad<F, M>(
    theta: &[f64],
    steps: &[ExpertStep],
    features: &F,
    margin: &M,
) -> Vec<f64>
where
    F: FeatureMap + ?Sized,
    M: MarginFunction + ?Sized,
{
    let scale = 1.0 / steps.len() as f64;
    let mut grad = vec![0.0; features.dimension()];
    for step in steps {
        let (best, _) = augmented_best(theta, step, features, margin);
        if best != step.action {
            features.accumulate(&mut grad, step.state, best, scale);
            features.accumulate(&mut grad, step.state, step.action, -scale);
        }
    }
    grad
}

fn validate<F: FeatureMap + ?Sized>(theta: &[f64], data: &ExpertDataset, features: &F) -> Result<Vec<ExpertStep>> {
    check_dim(features.dimension(), theta.len())?;
    if data.is_empty() {
        return Err(Error::invalid("expert dataset is empty"));
    }
    Ok(data.steps().copied().collect())
}

/// Large-margin loss `J_E`: mean over expert pairs of
/// `max_a [Q(s, a) + l(s, a_E, a)] - Q(s, a_E)`.
pub fn eval_margin_loss<F, M>(theta: &[f64], data: &ExpertDataset, features: &F, margin: &M) -> Result<f64>
where
    F: FeatureMap + ?Sized,
    M: MarginFunction + ?Sized,
{
    let steps = validate(theta, data, features)?;
    Ok(margin_loss(theta, &steps, features, margin))
}

/// Subgradient of `J_E`: mean of `phi(s, a*) - phi(s, a_E)`.
pub fn subgrad_margin_loss<F, M>(
    theta: &[f64],
    data: &ExpertDataset,
    features: &F,
    margin: &M,
) -> Result<Vec<f64>>
where
    F: FeatureMap + ?Sized,
    M: MarginFunction + ?Sized,
{
    let steps = validate(theta, data, features)?;
    Ok(margin_subgrad(theta, &steps, features, margin))
}
