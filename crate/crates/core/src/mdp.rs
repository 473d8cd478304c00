//! Finite deterministic MDPs, Bellman operators and exact dynamic programming.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

const POLICY_ITERATION_CAP: usize = 1000;
const TIE_TOLERANCE: f64 = 1e-12;

/// Reward model of an [`Mdp`].
///
/// Garnets reward states only; `StateAction` exists so that the reward
/// `R_Q` implied by an arbitrary Q function can be solved for.
#[derive(Debug, Clone, PartialEq)]
pub enum Rewards {
    State(Vec<f64>),
    StateAction(Vec<f64>),
}

/// A finite MDP with deterministic dynamics (one successor per state-action pair).
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    next_state: Vec<usize>,
    rewards: Rewards,
    gamma: f64,
}

impl Mdp {
    /// Builds an MDP with per-state rewards. `next_state` is indexed by `s * n_actions + a`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        next_state: Vec<usize>,
        reward: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        check_dim(n_states, reward.len())?;
        Self::build(n_states, n_actions, next_state, Rewards::State(reward), gamma)
    }

    fn build(
        n_states: usize,
        n_actions: usize,
        next_state: Vec<usize>,
        rewards: Rewards,
        gamma: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("MDP needs at least one state and one action"));
        }
        check_dim(n_states * n_actions, next_state.len())?;
        if let Some(bad) = next_state.iter().find(|&&s| s >= n_states) {
            return Err(Error::invalid(format!("successor {bad} out of range")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid(format!("gamma {gamma} not in (0, 1)")));
        }
        let values = match &rewards {
            Rewards::State(r) => r,
            Rewards::StateAction(r) => r,
        };
        if values.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("rewards must be finite"));
        }
        Ok(Self {
            n_states,
            n_actions,
            next_state,
            rewards,
            gamma,
        })
    }

    /// Same dynamics and discount, with the reward replaced by a state-action table.
    pub fn with_state_action_rewards(&self, rewards: &QTable) -> Result<Self> {
        self.check_q(rewards)?;
        Self::build(
            self.n_states,
            self.n_actions,
            self.next_state.clone(),
            Rewards::StateAction(rewards.values.clone()),
            self.gamma,
        )
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rewards(&self) -> &Rewards {
        &self.rewards
    }

    #[inline]
    pub fn next_state(&self, state: usize, action: usize) -> usize {
        self.next_state[state * self.n_actions + action]
    }

    #[inline]
    pub fn reward(&self, state: usize, action: usize) -> f64 {
        match &self.rewards {
            Rewards::State(r) => r[state],
            Rewards::StateAction(r) => r[state * self.n_actions + action],
        }
    }

    /// Per-state reward, or `None` when rewards depend on the action.
    pub fn state_rewards(&self) -> Option<&[f64]> {
        match &self.rewards {
            Rewards::State(r) => Some(r),
            Rewards::StateAction(_) => None,
        }
    }

    fn check_q(&self, q: &QTable) -> Result<()> {
        check_dim(self.n_states, q.n_states)?;
        check_dim(self.n_actions, q.n_actions)
    }

    fn check_policy(&self, policy: &DeterministicPolicy) -> Result<()> {
        check_dim(self.n_states, policy.len())?;
        match policy.actions().iter().find(|&&a| a >= self.n_actions) {
            Some(a) => Err(Error::invalid(format!("action {a} out of range"))),
            None => Ok(()),
        }
    }

    /// Plain-text form: `NS NA GAMMA`, one reward per line, then one successor
    /// per line in `s * NA + a` order.
    pub fn to_text(&self) -> Result<String> {
        let rewards = self
            .state_rewards()
            .ok_or_else(|| Error::Unsupported("text format stores per-state rewards only".into()))?;
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.n_states, self.n_actions, self.gamma).unwrap();
        for r in rewards {
            writeln!(out, "{r}").unwrap();
        }
        for s in &self.next_state {
            writeln!(out, "{s}").unwrap();
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)));
        let mut next = |what: &str| {
            tokens.next().ok_or_else(|| Error::Parse {
                line: text.lines().count(),
                message: format!("unexpected end of input, expected {what}"),
            })
        };
        fn parse<T: std::str::FromStr>((line, tok): (usize, &str), what: &str) -> Result<T> {
            tok.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {what} `{tok}`"),
            })
        }
        let n_states: usize = parse(next("state count")?, "state count")?;
        let n_actions: usize = parse(next("action count")?, "action count")?;
        let gamma: f64 = parse(next("discount")?, "discount")?;
        let reward = (0..n_states)
            .map(|_| parse(next("reward")?, "reward"))
            .collect::<Result<Vec<f64>>>()?;
        let next_state = (0..n_states * n_actions)
            .map(|_| parse(next("successor")?, "successor"))
            .collect::<Result<Vec<usize>>>()?;
        if let Some((line, tok)) = next("end").ok() {
            return Err(Error::Parse {
                line,
                message: format!("trailing token `{tok}`"),
            });
        }
        Mdp::new(n_states, n_actions, next_state, reward, gamma)
    }
}

/// A deterministic policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy(Vec<usize>);

impl DeterministicPolicy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn constant(n_states: usize, action: usize) -> Self {
        Self(vec![action; n_states])
    }

    #[inline]
    pub fn action(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Real-valued table over state-action pairs, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::filled(n_states, n_actions, 0.0)
    }

    pub fn filled(n_states: usize, n_actions: usize, value: f64) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![value; n_states * n_actions],
        }
    }

    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        check_dim(n_states * n_actions, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Q values must be finite"));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    #[inline]
    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n_actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_action_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VTable(pub Vec<f64>);

impl VTable {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Index of the largest entry, ties to the smallest index.
#[inline]
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `T* q (s, a) = R(s, a) + gamma * max_b q(s', b)`.
pub fn apply_optimal_bellman(q: &QTable, mdp: &Mdp) -> Result<QTable> {
    mdp.check_q(q)?;
    let mut out = QTable::zeros(mdp.n_states, mdp.n_actions);
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let next = mdp.next_state(s, a);
            out.set(s, a, mdp.reward(s, a) + mdp.gamma * q.max_action_value(next));
        }
    }
    Ok(out)
}

/// `T^pi q (s, a) = R(s, a) + gamma * q(s', pi(s'))`.
pub fn apply_policy_bellman(q: &QTable, policy: &DeterministicPolicy, mdp: &Mdp) -> Result<QTable> {
    mdp.check_q(q)?;
    mdp.check_policy(policy)?;
    let mut out = QTable::zeros(mdp.n_states, mdp.n_actions);
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let next = mdp.next_state(s, a);
            out.set(
                s,
                a,
                mdp.reward(s, a) + mdp.gamma * q.get(next, policy.action(next)),
            );
        }
    }
    Ok(out)
}

/// Solves `(I - gamma P^pi) V = R^pi` directly.
pub fn exact_policy_evaluation(policy: &DeterministicPolicy, mdp: &Mdp) -> Result<VTable> {
    mdp.check_policy(policy)?;
    let n = mdp.n_states;
    let mut system = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for s in 0..n {
        let a = policy.action(s);
        system[(s, mdp.next_state(s, a))] -= mdp.gamma;
        rhs[s] = mdp.reward(s, a);
    }
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("policy evaluation system is singular"))?;
    Ok(VTable(solution.iter().copied().collect()))
}

/// `Q^pi(s, a) = R(s, a) + gamma * V^pi(s')`.
pub fn q_from_values(v: &VTable, mdp: &Mdp) -> Result<QTable> {
    check_dim(mdp.n_states, v.0.len())?;
    let mut q = QTable::zeros(mdp.n_states, mdp.n_actions);
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            q.set(s, a, mdp.reward(s, a) + mdp.gamma * v.0[mdp.next_state(s, a)]);
        }
    }
    Ok(q)
}

pub fn greedy_policy(q: &QTable) -> DeterministicPolicy {
    DeterministicPolicy((0..q.n_states).map(|s| argmax(q.row(s))).collect())
}

/// Howard policy iteration from the all-zeros policy.
///
/// An action is only replaced when another one is better by more than a
/// relative 1e-12, so rounding noise between exactly tied actions cannot make
/// the iteration cycle. The stable policy is then canonicalised to the
/// smallest action index within that tolerance of the maximum. The returned Q
/// is the exact value of the last evaluated policy, which is greedy for it.
pub fn policy_iteration(mdp: &Mdp) -> Result<(DeterministicPolicy, QTable)> {
    let mut policy = DeterministicPolicy::constant(mdp.n_states, 0);
    for _ in 0..POLICY_ITERATION_CAP {
        let v = exact_policy_evaluation(&policy, mdp)?;
        let q = q_from_values(&v, mdp)?;
        let mut changed = false;
        let mut canonical = Vec::with_capacity(mdp.n_states);
        for s in 0..mdp.n_states {
            let row = q.row(s);
            let best = row[argmax(row)];
            let floor = best - TIE_TOLERANCE * (1.0 + best.abs());
            let first = row.iter().position(|&x| x >= floor).unwrap_or(0);
            if row[policy.0[s]] < floor {
                policy.0[s] = argmax(row);
                changed = true;
            }
            canonical.push(first);
        }
        if !changed {
            return Ok((DeterministicPolicy(canonical), q));
        }
    }
    Err(Error::numerical(format!(
        "policy iteration did not stabilise within {POLICY_ITERATION_CAP} iterations"
    )))
}

/// `sum_s rho(s) v(s)`; `rho` must sum to one within 1e-12.
pub fn expected_value(v: &VTable, rho: &[f64]) -> Result<f64> {
    check_dim(v.0.len(), rho.len())?;
    let total: f64 = rho.iter().sum();
    if (total - 1.0).abs() > 1e-12 || rho.iter().any(|&p| p < 0.0) {
        return Err(Error::invalid(format!("rho is not a distribution (sum {total})")));
    }
    Ok(v.0.iter().zip(rho).map(|(v, p)| v * p).sum())
}

pub fn uniform_distribution(n_states: usize) -> Vec<f64> {
    vec![1.0 / n_states as f64; n_states]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn self_loop() -> Mdp {
        Mdp::new(1, 1, vec![0], vec![1.0], 0.9).unwrap()
    }

    /// s0: a0 stays, a1 moves to s1; s1: a0 stays, a1 moves to s0.
    fn two_state() -> Mdp {
        Mdp::new(2, 2, vec![0, 1, 1, 0], vec![0.0, 1.0], 0.5).unwrap()
    }

    #[test]
    fn optimal_bellman_examples() {
        let mdp = self_loop();
        let out = apply_optimal_bellman(&QTable::zeros(1, 1), &mdp).unwrap();
        assert_eq!(out.values(), &[1.0]);
        let out = apply_optimal_bellman(&QTable::filled(1, 1, 10.0), &mdp).unwrap();
        assert_eq!(out.values(), &[10.0]);

        let out = apply_optimal_bellman(&QTable::zeros(2, 2), &two_state()).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn operators_reject_mismatched_tables() {
        let err = apply_optimal_bellman(&QTable::zeros(3, 2), &two_state());
        assert!(matches!(err, Err(Error::Dimension { .. })));
        let stay = DeterministicPolicy::constant(2, 0);
        assert!(apply_policy_bellman(&QTable::zeros(2, 3), &stay, &two_state()).is_err());
    }

    #[test]
    fn policy_bellman_examples() {
        let mdp = self_loop();
        let pi = DeterministicPolicy::constant(1, 0);
        let out = apply_policy_bellman(&QTable::zeros(1, 1), &pi, &mdp).unwrap();
        assert_eq!(out.values(), &[1.0]);

        let mdp = two_state();
        let stay = DeterministicPolicy::constant(2, 0);
        let out = apply_policy_bellman(&QTable::zeros(2, 2), &stay, &mdp).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0, 1.0, 1.0]);

        let v = exact_policy_evaluation(&stay, &mdp).unwrap();
        let q = q_from_values(&v, &mdp).unwrap();
        let back = apply_policy_bellman(&q, &stay, &mdp).unwrap();
        assert!(back.max_abs_diff(&q) < 1e-12);
    }

    #[test]
    fn policy_evaluation_examples() {
        let v = exact_policy_evaluation(&DeterministicPolicy::constant(1, 0), &self_loop()).unwrap();
        assert!((v.0[0] - 10.0).abs() < 1e-12);

        let mdp = two_state();
        let move_then_stay = DeterministicPolicy::new(vec![1, 0]);
        let v = exact_policy_evaluation(&move_then_stay, &mdp).unwrap();
        assert!((v.0[0] - 1.0).abs() < 1e-12 && (v.0[1] - 2.0).abs() < 1e-12);

        let v = exact_policy_evaluation(&DeterministicPolicy::constant(2, 0), &mdp).unwrap();
        assert!(v.0[0].abs() < 1e-12 && (v.0[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn policy_iteration_examples() {
        let (pi, q) = policy_iteration(&self_loop()).unwrap();
        assert_eq!(pi.actions(), &[0]);
        assert!((q.get(0, 0) - 10.0).abs() < 1e-12);

        let (pi, q) = policy_iteration(&two_state()).unwrap();
        assert_eq!(pi.actions(), &[1, 0]);
        assert!((q.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((q.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((q.get(1, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_policy(&QTable::zeros(3, 4)).actions(), &[0, 0, 0]);
        let q = QTable::from_vec(1, 2, vec![0.1, 0.9]).unwrap();
        assert_eq!(greedy_policy(&q).actions(), &[1]);
    }

    #[test]
    fn expected_value_examples() {
        let v = VTable(vec![3.0, 3.0, 3.0]);
        assert_eq!(expected_value(&v, &[0.2, 0.3, 0.5]).unwrap(), 3.0);
        let v = VTable(vec![1.0, 2.0]);
        assert_eq!(expected_value(&v, &uniform_distribution(2)).unwrap(), 1.5);
        let v = VTable(vec![0.0, 2.0]);
        assert_eq!(expected_value(&v, &[1.0, 0.0]).unwrap(), 0.0);
        assert!(expected_value(&v, &[0.6, 0.6]).is_err());
    }

    #[test]
    fn construction_validates() {
        assert!(Mdp::new(2, 1, vec![0, 2], vec![0.0, 0.0], 0.9).is_err());
        assert!(Mdp::new(1, 1, vec![0], vec![0.0], 1.0).is_err());
        assert!(Mdp::new(1, 1, vec![0], vec![f64::NAN], 0.5).is_err());
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mdp = Mdp::new(
            3,
            2,
            vec![1, 2, 0, 0, 2, 1],
            vec![0.1 + 0.2, 0.0, 1.0 / 3.0],
            0.99,
        )
        .unwrap();
        let text = mdp.to_text().unwrap();
        let back = Mdp::from_text(&text).unwrap();
        assert_eq!(back, mdp);
        assert_eq!(back.to_text().unwrap(), text);
    }

    #[test]
    fn text_parse_errors_carry_line() {
        let err = Mdp::from_text("1 1 0.5\nabc\n0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(Mdp::from_text("1 1 0.5\n0\n0\n7\n").is_err());
        assert!(Mdp::from_text("2 1 0.5\n0\n").is_err());
    }
}
