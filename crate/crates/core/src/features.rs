//! Feature maps for linearly parameterised Q functions.

/// A map `(state, action) -> R^d`.
///
/// `dot` and `accumulate` have generic defaults built on `evaluate`; sparse
/// maps should override them.
pub trait FeatureMap: Send + Sync {
    fn dimension(&self) -> usize;
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn evaluate(&self, state: usize, action: usize) -> Vec<f64>;

    /// `<theta, phi(s, a)>`
    fn dot(&self, theta: &[f64], state: usize, action: usize) -> f64 {
        self.evaluate(state, action)
            .iter()
            .zip(theta)
            .map(|(p, t)| p * t)
            .sum()
    }

    /// `out += scale * phi(s, a)`
    fn accumulate(&self, out: &mut [f64], state: usize, action: usize, scale: f64) {
        for (o, p) in out.iter_mut().zip(self.evaluate(state, action)) {
            *o += scale * p;
        }
    }

    /// Best action at `state` under `theta` and its score, ties to the smallest index.
    fn best_action(&self, theta: &[f64], state: usize) -> (usize, f64) {
        let mut best = (0, self.dot(theta, state, 0));
        for a in 1..self.n_actions() {
            let v = self.dot(theta, state, a);
            if v > best.1 {
                best = (a, v);
            }
        }
        best
    }
}

/// Indicator basis: `phi(s, a)` is the unit vector at `s * n_actions + a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TabularFeatures {
    n_states: usize,
    n_actions: usize,
}

impl TabularFeatures {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions }
    }

    #[inline]
    pub fn index(&self, state: usize, action: usize) -> usize {
        state * self.n_actions + action
    }
}

impl FeatureMap for TabularFeatures {
    fn dimension(&self) -> usize {
        self.n_states * self.n_actions
    }

    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn evaluate(&self, state: usize, action: usize) -> Vec<f64> {
        let mut phi = vec![0.0; self.dimension()];
        phi[self.index(state, action)] = 1.0;
        phi
    }

    #[inline]
    fn dot(&self, theta: &[f64], state: usize, action: usize) -> f64 {
        theta[self.index(state, action)]
    }

    #[inline]
    fn accumulate(&self, out: &mut [f64], state: usize, action: usize, scale: f64) {
        out[self.index(state, action)] += scale;
    }
}
