//! Exact kinematics of a known model, for verification and the Bayes oracle.

use crate::analysis::mixture_visitation;
use crate::mdp::{Action, BlockMdp, State};
use crate::policy::Policy;

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Layer-`h+1` latent law under `mixture ∘_h Unif(A)`.
pub fn uniform_extension_marginal(mdp: &BlockMdp, h: usize, mixture: &[(Policy, f64)]) -> Vec<f64> {
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let d = mixture_visitation(mdp, mixture);
    let mut out = vec![0.0; ns];
    for s in 0..ns {
        let w = d.state(h, s);
        if w == 0.0 {
            continue;
        }
        for a in 0..na {
            for (s2, &p) in mdp.transition(h, s, a).iter().enumerate() {
                out[s2] += w * p / na as f64;
            }
        }
    }
    out
}

/// `f(s, s'; a) = P(s'|s,a) / (P(s'|s,a) + F(s'))` for the transition out of
/// layer `h`, where `F` is the layer-`h+1` law under `mixture ∘_h Unif(A)`.
/// Indexed `[s][s']`; zero where both terms vanish.
pub fn f_table(mdp: &BlockMdp, h: usize, mixture: &[(Policy, f64)], a: Action) -> Vec<Vec<f64>> {
    let big_f = uniform_extension_marginal(mdp, h, mixture);
    (0..mdp.num_states())
        .map(|s| {
            let p = mdp.transition(h, s, a);
            (0..mdp.num_states()).map(|s2| ratio(p[s2], p[s2] + big_f[s2])).collect()
        })
        .collect()
}

/// `f` for every action, indexed `[a][s][s']`.
pub fn exact_kinematics_f(mdp: &BlockMdp, h: usize, mixture: &[(Policy, f64)]) -> Vec<Vec<Vec<f64>>> {
    (0..mdp.num_actions()).map(|a| f_table(mdp, h, mixture, a)).collect()
}

/// `w(s'; s, a) = P(s'|s,a) / Σ_j Σ_b P(s'|s_j,b)` over the discriminator
/// latent multiset `disc`; zero where both terms vanish.
pub fn exact_kinematics_w(mdp: &BlockMdp, h: usize, disc: &[State], s_prime: State, s: State, a: Action) -> f64 {
    let den: f64 = disc
        .iter()
        .map(|&sj| (0..mdp.num_actions()).map(|b| mdp.transition(h, sj, b)[s_prime]).sum::<f64>())
        .sum();
    ratio(mdp.transition(h, s, a)[s_prime], den)
}

/// `w(·; disc[i], a)` over all layer-`h+1` states.
pub fn w_column(mdp: &BlockMdp, h: usize, disc: &[State], i: usize, a: Action) -> Vec<f64> {
    (0..mdp.num_states()).map(|s2| exact_kinematics_w(mdp, h, disc, s2, disc[i], a)).collect()
}
