//! Policy search by dynamic programming, with exploration distributions given
//! by per-layer policy covers mixed with an auxiliary policy set.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::access::EpisodicEnv;
use crate::analysis::{exact_visitation, state_action_marginal};
use crate::error::{Error, Result};
use crate::mdp::{BlockMdp, Obs, State};
use crate::policy::{Policy, PolicyMixture};
use crate::regression::truth::{LabelTruth, SamplingProcess};
use crate::regression::{OneContextDataset, OneContextOracle, Predictor1};

/// A terminal reward on observations with values in `[0, 1]`.
#[derive(Clone)]
pub struct RewardFn(Arc<dyn Fn(Obs) -> f64 + Send + Sync>);

impl RewardFn {
    pub fn new(f: impl Fn(Obs) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
    pub fn table(values: Vec<f64>) -> Self {
        Self::new(move |x| values.get(x).copied().unwrap_or(0.0))
    }
    pub fn eval(&self, x: Obs) -> f64 {
        (self.0)(x).clamp(0.0, 1.0)
    }
}

impl fmt::Debug for RewardFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RewardFn")
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PsdpConfig {
    /// Samples per (layer, action) dataset.
    pub samples: usize,
    pub eps: f64,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct PsdpOutput {
    pub policy: Policy,
    /// `q[h][a]`, the fitted value of action `a` at layer `h`.
    pub q: Vec<Vec<Predictor1>>,
    pub episodes: u64,
    /// Mean over the layer-0 samples of `max_a q[0][a]`.
    pub value_estimate: f64,
}

/// Episodes consumed by one call with reward layer `k`.
pub fn psdp_episode_demand(k: usize, num_actions: usize, samples: usize) -> u64 {
    (k * num_actions * samples) as u64
}

/// Optimise the reward observed at layer `k`. `covers[h]` is the exploration
/// set for layer `h < k`; each roll-in draws from `½ Unif(covers[h]) + ½ Unif(gamma)`.
#[allow(clippy::too_many_arguments)]
pub fn psdp<E, R>(
    k: usize,
    reg1: &dyn OneContextOracle,
    reward: &RewardFn,
    covers: &[Vec<Policy>],
    gamma: &[Policy],
    cfg: &PsdpConfig,
    env: &mut E,
    rng: &mut R,
) -> Result<PsdpOutput>
where
    E: EpisodicEnv + ?Sized,
    R: rand::Rng + ?Sized,
{
    if k >= env.horizon() {
        return Err(Error::InvalidParameter(format!("reward layer {k} is beyond the horizon")));
    }
    if covers.len() < k {
        return Err(Error::InvalidParameter(format!("{} covers supplied for reward layer {k}", covers.len())));
    }
    let na = env.num_actions();
    let start = env.episodes();
    let mut layers: Vec<Option<Vec<Predictor1>>> = vec![None; k];
    let mut q: Vec<Vec<Predictor1>> = vec![Vec::new(); k];
    let mut first_layer: Vec<Obs> = Vec::new();
    for h in (0..k).rev() {
        let continuation = Policy::greedy(layers.clone());
        let mixture = PolicyMixture::half_half(&covers[h], gamma);
        let mut fitted = Vec::with_capacity(na);
        for a in 0..na {
            let mut samples = Vec::with_capacity(cfg.samples);
            for _ in 0..cfg.samples {
                let roll = mixture.sample(rng).clone();
                let mut x = env.begin_episode()?;
                for g in 0..h {
                    let act = roll.sample_action(g, x, na, rng);
                    x = env.act(act)?.ok_or(Error::HorizonExceeded)?;
                }
                let x_h = x;
                x = env.act(a)?.ok_or(Error::HorizonExceeded)?;
                for g in h + 1..k {
                    let act = continuation.sample_action(g, x, na, rng);
                    x = env.act(act)?.ok_or(Error::HorizonExceeded)?;
                }
                let r = rng.random_bool(reward.eval(x));
                samples.push((x_h, r));
                if h == 0 {
                    first_layer.push(x_h);
                }
            }
            let data = OneContextDataset::new(samples).with_truth(LabelTruth::Process(SamplingProcess::PsdpReturn {
                layer: h,
                action: a,
                reward_layer: k,
                reward: reward.clone(),
                continuation: continuation.clone(),
            }));
            fitted.push(reg1.fit_one(&data, cfg.eps, cfg.delta)?);
        }
        layers[h] = Some(fitted.clone());
        q[h] = fitted;
    }
    let value_estimate = if first_layer.is_empty() {
        0.0
    } else {
        first_layer.iter().map(|&x| q[0].iter().map(|p| p.eval(x)).fold(0.0, f64::max)).sum::<f64>()
            / first_layer.len() as f64
    };
    Ok(PsdpOutput { policy: Policy::greedy(layers), q, episodes: env.episodes() - start, value_estimate })
}

/// `Q_h(s, a)` for the reward at layer `k` when `continuation` is followed on
/// layers `h+1..k`. Indexed `[s][a]`.
pub fn latent_q_values(
    mdp: &BlockMdp,
    h: usize,
    k: usize,
    reward: &RewardFn,
    continuation: &Policy,
) -> Vec<Vec<f64>> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut v: Vec<f64> =
        (0..ns).map(|s| mdp.emission_support(k, s).iter().map(|&(x, p)| p * reward.eval(x)).sum()).collect();
    let mut marg = vec![0.0; na];
    for g in (h + 1..k).rev() {
        let mut nv = vec![0.0; ns];
        for (s, out) in nv.iter_mut().enumerate() {
            state_action_marginal(mdp, continuation, g, s, &mut marg);
            *out = (0..na).map(|a| marg[a] * expect(mdp.transition(g, s, a), &v)).sum();
        }
        v = nv;
    }
    (0..ns).map(|s: State| (0..na).map(|a| expect(mdp.transition(h, s, a), &v)).collect()).collect()
}

fn expect(p: &[f64], v: &[f64]) -> f64 {
    p.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Observation-level `Q_h(x, a)` under `policy` on layers `h+1..k`, computed
/// by propagating values over observations. Indexed `[x][a]`.
pub fn true_q(mdp: &BlockMdp, policy: &Policy, k: usize, reward: &RewardFn, h: usize) -> Vec<Vec<f64>> {
    let (nx, na) = (mdp.num_obs(), mdp.num_actions());
    let d = mdp.decoder();
    let mut v: Vec<f64> = (0..nx).map(|x| reward.eval(x)).collect();
    let q_at = |g: usize, v: &[f64]| -> Vec<Vec<f64>> {
        (0..nx)
            .map(|x| {
                (0..na)
                    .map(|a| {
                        let next = mdp.transition(g, d[x], a);
                        (0..nx).map(|x2| next[d[x2]] * mdp.emission(g + 1, d[x2])[x2] * v[x2]).sum()
                    })
                    .collect()
            })
            .collect()
    };
    for g in (h + 1..k).rev() {
        let q = q_at(g, &v);
        v = (0..nx).map(|x| policy.action_probs(g, x, na).iter().zip(&q[x]).map(|(p, w)| p * w).sum()).collect();
    }
    q_at(h, &v)
}

/// `E^π[R(x_k)]`.
pub fn policy_value(mdp: &BlockMdp, policy: &Policy, k: usize, reward: &RewardFn) -> f64 {
    let d = exact_visitation(mdp, policy);
    (0..mdp.num_obs()).map(|x| d.observation(mdp, k, x) * reward.eval(x)).sum()
}
