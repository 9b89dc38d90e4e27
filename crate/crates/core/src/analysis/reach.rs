use crate::mdp::{Action, BlockMdp, Obs, State};
use crate::policy::Policy;

/// Optimal latent plan for a terminal reward on layer-`k` states.
/// Returns the value and `actions[g][s]` for `g < k`, ties to the lowest action.
pub fn optimize_latent(mdp: &BlockMdp, k: usize, reward: &[f64]) -> (f64, Vec<Vec<Action>>) {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut v = reward.to_vec();
    let mut actions = vec![vec![0; ns]; k];
    for g in (0..k).rev() {
        let mut nv = vec![0.0; ns];
        for s in 0..ns {
            let mut best = (0, f64::NEG_INFINITY);
            for a in 0..na {
                let q: f64 = mdp.transition(g, s, a).iter().zip(&v).map(|(p, w)| p * w).sum();
                if q > best.1 {
                    best = (a, q);
                }
            }
            nv[s] = best.1;
            actions[g][s] = best.0;
        }
        v = nv;
    }
    let value = mdp.initial().iter().zip(&v).map(|(p, w)| p * w).sum();
    (value, actions)
}

/// Lift a latent plan to an observation-level table policy via the decoder.
pub fn lift_plan(mdp: &BlockMdp, actions: &[Vec<Action>]) -> Policy {
    let decoder = mdp.decoder();
    Policy::table(actions.iter().map(|row| decoder.iter().map(|&s| row[s]).collect()).collect())
}

/// `max_π d_h(s)` with a deterministic maximiser.
pub fn max_reach(mdp: &BlockMdp, h: usize, s: State) -> (f64, Policy) {
    let mut reward = vec![0.0; mdp.num_states()];
    reward[s] = 1.0;
    let (value, plan) = optimize_latent(mdp, h, &reward);
    (value, lift_plan(mdp, &plan))
}

/// `max_π d_h(s)` for every layer and state.
pub fn max_reach_table(mdp: &BlockMdp) -> Vec<Vec<f64>> {
    (0..mdp.horizon())
        .map(|h| (0..mdp.num_states()).map(|s| max_reach(mdp, h, s).0).collect())
        .collect()
}

/// `max_π E[R(x_k)]` for an observation-level reward.
pub fn optimize_reward(mdp: &BlockMdp, k: usize, reward: &dyn Fn(Obs) -> f64) -> (f64, Policy) {
    let latent: Vec<f64> = (0..mdp.num_states())
        .map(|s| mdp.emission_support(k, s).iter().map(|&(x, p)| p * reward(x)).sum())
        .collect();
    let (value, plan) = optimize_latent(mdp, k, &latent);
    (value, lift_plan(mdp, &plan))
}
