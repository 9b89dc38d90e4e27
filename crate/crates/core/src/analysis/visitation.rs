use serde::Serialize;

use crate::mdp::{BlockMdp, Obs, State};
use crate::policy::Policy;

/// Exact state-occupancy `d_h(s)` for every layer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitationTable {
    layers: Vec<Vec<f64>>,
}

impl VisitationTable {
    pub fn state(&self, h: usize, s: State) -> f64 {
        self.layers[h][s]
    }
    pub fn layer(&self, h: usize) -> &[f64] {
        &self.layers[h]
    }
    pub fn horizon(&self) -> usize {
        self.layers.len()
    }
    /// `d_h(x) = d_h(φ*(x)) O_h(x | φ*(x))`.
    pub fn observation(&self, mdp: &BlockMdp, h: usize, x: Obs) -> f64 {
        let s = mdp.decoder()[x];
        self.layers[h][s] * mdp.emission(h, s)[x]
    }
}

/// Action marginal at `(h, s)`: `Σ_x O_h(x|s) π_h(·|x)`.
pub(crate) fn state_action_marginal(mdp: &BlockMdp, policy: &Policy, h: usize, s: State, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    if mdp.is_terminal_state(s) {
        out[0] = 1.0;
        return;
    }
    let mut probs = vec![0.0; out.len()];
    for &(x, px) in mdp.emission_support(h, s) {
        policy.fill_probs(h, x, &mut probs);
        for (o, p) in out.iter_mut().zip(&probs) {
            *o += px * p;
        }
    }
}

pub fn exact_visitation(mdp: &BlockMdp, policy: &Policy) -> VisitationTable {
    let (hz, ns, na) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut layers = Vec::with_capacity(hz);
    layers.push(mdp.initial().to_vec());
    let mut marg = vec![0.0; na];
    for h in 0..hz - 1 {
        let mut next = vec![0.0; ns];
        let cur: &Vec<f64> = &layers[h];
        for (s, &d) in cur.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            state_action_marginal(mdp, policy, h, s, &mut marg);
            for (a, &pa) in marg.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for (s2, &p) in mdp.transition(h, s, a).iter().enumerate() {
                    next[s2] += d * pa * p;
                }
            }
        }
        layers.push(next);
    }
    VisitationTable { layers }
}

/// Occupancy of a finite mixture, weights summing to one.
pub fn mixture_visitation(mdp: &BlockMdp, members: &[(Policy, f64)]) -> VisitationTable {
    let mut layers = vec![vec![0.0; mdp.num_states()]; mdp.horizon()];
    for (p, w) in members {
        let v = exact_visitation(mdp, p);
        for (acc, row) in layers.iter_mut().zip(&v.layers) {
            for (a, d) in acc.iter_mut().zip(row) {
                *a += w * d;
            }
        }
    }
    VisitationTable { layers }
}
