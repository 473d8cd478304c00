use crate::error::{check_dim, Result};
use crate::mdp::{Mdp, QTable};

/// Reward for which `q` is the optimal action-value function:
/// `R_Q(s, a) = q(s, a) - gamma * max_b q(s', b)`.
pub fn reward_of_q(q: &QTable, mdp: &Mdp) -> Result<QTable> {
    check_dim(mdp.n_states(), q.n_states())?;
    check_dim(mdp.n_actions(), q.n_actions())?;
    let mut out = QTable::zeros(q.n_states(), q.n_actions());
    for s in 0..q.n_states() {
        for a in 0..q.n_actions() {
            let next = mdp.next_state(s, a);
            out.set(s, a, q.get(s, a) - mdp.gamma() * q.max_action_value(next));
        }
    }
    Ok(out)
}
