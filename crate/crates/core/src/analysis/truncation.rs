//! Truncated Block MDPs: latent states that no policy reaches with
//! probability at least `tau` are redirected into an absorbing terminal state.
//!
//! `stage(h)` truncates layers `0..=h` only; the final model truncates every
//! layer. Truncating by a policy set additionally keeps states that the set
//! visits with average probability at least `tau_small`.

use crate::analysis::reach::max_reach;
use crate::analysis::visitation::mixture_visitation;
use crate::error::{Error, Result};
use crate::mdp::{BlockMdp, LatentModel, Obs, ObservationModel, State};
use crate::policy::{Policy, PolicyMixture};

/// Truncate `mdp` by explicit per-layer reachable sets.
/// The terminal state and observation get the first unused index.
pub fn truncate_with_sets(mdp: &BlockMdp, sets: &[Vec<bool>]) -> BlockMdp {
    let (hz, ns, na, nx) = (mdp.horizon(), mdp.num_states(), mdp.num_actions(), mdp.num_obs());
    let term = ns;
    let keep = |h: usize, s: usize| sets.get(h).map(|l| l[s]).unwrap_or(true);
    let redirect = |row: &[f64], h: usize| -> Vec<f64> {
        let mut out = vec![0.0; ns + 1];
        for (s, &p) in row.iter().enumerate() {
            if keep(h, s) {
                out[s] += p;
            } else {
                out[term] += p;
            }
        }
        out
    };
    let initial = redirect(mdp.initial(), 0);
    let mut transitions = Vec::with_capacity(hz.saturating_sub(1));
    for h in 0..hz.saturating_sub(1) {
        let mut layer = Vec::with_capacity(ns + 1);
        for s in 0..ns {
            layer.push((0..na).map(|a| redirect(mdp.transition(h, s, a), h + 1)).collect());
        }
        let mut absorb = vec![0.0; ns + 1];
        absorb[term] = 1.0;
        layer.push(vec![absorb; na]);
        transitions.push(layer);
    }
    let emissions = (0..hz)
        .map(|h| {
            let mut layer: Vec<Vec<f64>> = (0..ns)
                .map(|s| {
                    let mut row = mdp.emission(h, s).to_vec();
                    row.push(0.0);
                    row
                })
                .collect();
            let mut t = vec![0.0; nx + 1];
            t[nx] = 1.0;
            layer.push(t);
            layer
        })
        .collect();
    let mut decoder = mdp.decoder().to_vec();
    decoder.push(term);
    let latent = LatentModel::new(hz, ns + 1, na, initial, transitions).expect("truncation preserves distributions");
    let obs = ObservationModel::new(ns + 1, nx + 1, emissions, decoder).expect("truncation preserves supports");
    BlockMdp::new(latent, obs).expect("consistent shapes").with_terminal(term, nx)
}

#[derive(Clone, Debug)]
pub struct TruncatedMdp {
    tau: f64,
    tau_small: f64,
    empty_sets: Vec<Vec<bool>>,
    sets: Vec<Vec<bool>>,
    stages: Vec<BlockMdp>,
    empty_stages: Vec<BlockMdp>,
}

fn stage_sets(sets: &[Vec<bool>], h: usize, ns: usize) -> Vec<Vec<bool>> {
    (0..sets.len()).map(|g| if g <= h { sets[g].clone() } else { vec![true; ns] }).collect()
}

pub fn truncate(mdp: &BlockMdp, gamma: &[Policy], tau: f64, tau_small: f64) -> Result<TruncatedMdp> {
    if !(tau_small > 0.0 && tau_small <= tau && tau < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "truncation needs 0 < tau_small <= tau < 1, got tau={tau}, tau_small={tau_small}"
        )));
    }
    let (hz, ns) = (mdp.horizon(), mdp.num_states());
    let mut empty_sets: Vec<Vec<bool>> = Vec::with_capacity(hz);
    let mut empty_stages: Vec<BlockMdp> = Vec::with_capacity(hz);
    empty_sets.push(mdp.initial().iter().map(|&p| p >= tau).collect());
    empty_stages.push(truncate_with_sets(mdp, &stage_sets(&pad_sets(&empty_sets, hz, ns), 0, ns)));
    for h in 1..hz {
        let prev = &empty_stages[h - 1];
        empty_sets.push((0..ns).map(|s| max_reach(prev, h, s).0 >= tau).collect());
        empty_stages.push(truncate_with_sets(mdp, &stage_sets(&pad_sets(&empty_sets, hz, ns), h, ns)));
    }

    let sets = if gamma.is_empty() {
        empty_sets.clone()
    } else {
        let d = mixture_visitation(mdp, PolicyMixture::uniform_over(gamma).weighted().as_slice());
        (0..hz)
            .map(|h| {
                (0..ns).map(|s| empty_sets[h][s] || (h > 0 && d.state(h, s) >= tau_small)).collect()
            })
            .collect()
    };
    let stages = if gamma.is_empty() {
        empty_stages.clone()
    } else {
        (0..hz).map(|h| truncate_with_sets(mdp, &stage_sets(&sets, h, ns))).collect()
    };
    Ok(TruncatedMdp { tau, tau_small, empty_sets, sets, stages, empty_stages })
}

fn pad_sets(sets: &[Vec<bool>], hz: usize, ns: usize) -> Vec<Vec<bool>> {
    let mut out = sets.to_vec();
    out.resize(hz, vec![true; ns]);
    out
}

impl TruncatedMdp {
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn tau_small(&self) -> f64 {
        self.tau_small
    }
    /// The fully truncated model.
    pub fn model(&self) -> &BlockMdp {
        self.stages.last().expect("horizon is positive")
    }
    /// Model truncated on layers `0..=h` only.
    pub fn stage(&self, h: usize) -> &BlockMdp {
        &self.stages[h]
    }
    /// Stages of the truncation by the empty policy set.
    pub fn empty_stage(&self, h: usize) -> &BlockMdp {
        &self.empty_stages[h]
    }
    pub fn reachable(&self, h: usize) -> &[bool] {
        &self.sets[h]
    }
    pub fn reachable_without_gamma(&self, h: usize) -> &[bool] {
        &self.empty_sets[h]
    }
    pub fn terminal_state(&self) -> State {
        self.model().terminal().expect("truncated").0
    }
    pub fn terminal_obs(&self) -> Obs {
        self.model().terminal().expect("truncated").1
    }
}
