//! Two-context regression through an exploration oracle. Covering the
//! two-context gadget yields one policy per latent second context; a
//! one-context reduction then learns which policy to trust at each `x2`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::mdp::{BlockMdp, Obs};
use crate::policy::Policy;
use crate::reg_from_rl::gadget::{action_grid, gadget_mdp, policy_value};
use crate::reg_from_rl::one_red::one_red;
use crate::reg_from_rl::simulate::TwoContextSim;
use crate::reg_from_rl::{EpisodicRlOracle, RlRequest};
use crate::regression::truth::{ContextLaw, LabelTruth, LatentTarget, LatentTruth};
use crate::regression::{
    two_aug, AugSpace, OneContextDataset, Predictor1, Predictor2, Provenance, TwoContextDataset, TwoContextOracle,
};
use crate::rng::Seed;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TwoRedOptions {
    /// Accuracy passed to the inner one-context reduction. Defaults to `ε`.
    pub inner_eps: Option<f64>,
    /// Defaults to `δ / 2`.
    pub inner_delta: Option<f64>,
}

/// `(x1, x2) ↦ π_k(x1)` where `k` minimises the learned error `R^{π_k}(x2)`.
#[derive(Clone)]
pub struct StitchedPredictor {
    grid: Arc<Vec<f64>>,
    policies: Vec<Policy>,
    errors: Vec<Predictor1>,
}

impl StitchedPredictor {
    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn errors(&self) -> &[Predictor1] {
        &self.errors
    }

    /// Lowest index attaining the minimum predicted error at `x2`.
    pub fn choose(&self, x2: Obs) -> usize {
        let mut best = (0, f64::INFINITY);
        for (k, r) in self.errors.iter().enumerate() {
            let v = r.eval(x2);
            if v < best.1 {
                best = (k, v);
            }
        }
        best.0
    }

    pub fn eval(&self, x1: Obs, x2: Obs) -> f64 {
        policy_value(&self.policies[self.choose(x2)], &self.grid, x1)
    }

    pub fn into_predictor(self) -> Predictor2 {
        Predictor2::new(Provenance::TwoRed, move |x1, x2| self.eval(x1, x2))
    }
}

type Table = Vec<Vec<f64>>;

/// Joint law and target when the dataset's truth carries both.
fn latent_parts(data: &TwoContextDataset) -> Option<(&LatentTruth, &Table, &Table)> {
    let Some(LabelTruth::Latent(t)) = &data.truth else { return None };
    match (&t.target, &t.law) {
        (LatentTarget::Two(f), Some(ContextLaw::Two(joint))) => Some((t, f, joint)),
        _ => None,
    }
}

/// Truth for `C^π`: `E[(π(x1) - y)^2 | φ*(x2) = s]` with the `x2` marginal.
fn error_truth(t: &LatentTruth, f: &[Vec<f64>], joint: &[Vec<f64>], value: impl Fn(Obs) -> f64) -> LabelTruth {
    let mut num = vec![0.0; t.num_states];
    let mut mass = vec![0.0; t.num_states];
    let mut law = vec![0.0; t.decoder.len()];
    for (x1, row) in joint.iter().enumerate() {
        let v = value(x1);
        for (x2, &p) in row.iter().enumerate() {
            let (s1, s2) = (t.decoder[x1], t.decoder[x2]);
            let target = f[s1][s2];
            num[s2] += p * (v * v - 2.0 * v * target + target);
            mass[s2] += p;
            law[x2] += p;
        }
    }
    let g = num.iter().zip(&mass).map(|(n, m)| if *m > 0.0 { n / m } else { 0.0 }).collect();
    LabelTruth::Latent(Arc::new(LatentTruth {
        decoder: t.decoder.clone(),
        num_states: t.num_states,
        target: LatentTarget::One(g),
        law: Some(ContextLaw::One(law)),
    }))
}

/// Reduce two-context regression to episodic reward-free RL. `s_count` is
/// the latent state count used to size the action grid.
#[allow(clippy::too_many_arguments)]
pub fn two_red(
    oracle: &dyn EpisodicRlOracle,
    space: AugSpace,
    s_count: usize,
    data: &TwoContextDataset,
    eps: f64,
    delta: f64,
    opts: TwoRedOptions,
    seed: Seed,
) -> Result<StitchedPredictor> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) || s_count == 0 {
        return Err(Error::InvalidParameter(format!("two_red with eps {eps}, delta {delta}, {s_count} states")));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let s = s_count as f64;
    let eps_a = eps / (2.0 * s);
    let grid = Arc::new(action_grid(eps_a)?);
    let parts = latent_parts(data);
    let truth = match parts {
        Some((t, f, joint)) => Some(Arc::new(gadget_mdp(&t.decoder, t.num_states, f, joint, eps_a)?)),
        None => None::<Arc<BlockMdp>>,
    };
    let req = RlRequest {
        horizon: 2,
        num_actions: grid.len(),
        eps: eps * eps / (4.0 * s * s),
        delta: delta / 2.0,
        truth,
    };
    let half = data.len() / 2;
    let demand = oracle.episode_demand(&req);
    if demand > half as u64 {
        return Err(Error::DatasetExhausted { needed: demand.saturating_mul(2), available: data.len() as u64 });
    }
    let mut sim = TwoContextSim::new(&data.samples[..half], &grid, space.zero_obs(), seed.stream("sim"));
    let psi = oracle.explore(&mut sim, &req)?;
    if psi.is_empty() {
        return Err(Error::InvalidParameter("the oracle returned no policies".into()));
    }

    let inner_eps = opts.inner_eps.unwrap_or(eps);
    let inner_delta = opts.inner_delta.unwrap_or(delta / 2.0);
    let mut coin = seed.stream("labels");
    let mut errors = Vec::with_capacity(psi.len());
    for (k, pi) in psi.iter().enumerate() {
        let value = |x: Obs| policy_value(pi, &grid, x);
        let samples = data.samples[half..]
            .iter()
            .map(|&(x1, x2, y)| {
                let p = (value(x1) - f64::from(u8::from(y))).powi(2);
                (x2, coin.random::<f64>() < p)
            })
            .collect();
        let mut c = OneContextDataset::new(samples);
        if let Some((t, f, joint)) = parts {
            c = c.with_truth(error_truth(t, f, joint, value));
        }
        errors.push(one_red(oracle, space, &c, inner_eps, inner_delta, seed.derive("inner").index(k as u64))?);
    }
    Ok(StitchedPredictor { grid, policies: psi, errors })
}

/// `two_red` as a two-context oracle. Each call uses a fresh seed.
pub struct TwoRedOracle {
    oracle: Arc<dyn EpisodicRlOracle>,
    space: AugSpace,
    s_count: usize,
    opts: TwoRedOptions,
    seed: Seed,
    calls: AtomicU64,
}

impl TwoRedOracle {
    pub fn new(oracle: Arc<dyn EpisodicRlOracle>, space: AugSpace, s_count: usize, opts: TwoRedOptions, seed: Seed) -> Self {
        Self { oracle, space, s_count, opts, seed, calls: AtomicU64::new(0) }
    }
}

impl TwoContextOracle for TwoRedOracle {
    fn fit_two(&self, data: &TwoContextDataset, eps: f64, delta: f64) -> Result<Predictor2> {
        let call = self.calls.fetch_add(1, Ordering::Relaxed);
        let seed = self.seed.index(call);
        two_red(self.oracle.as_ref(), self.space, self.s_count, data, eps, delta, self.opts, seed)
            .map(StitchedPredictor::into_predictor)
    }
}

/// Two-context regression over the augmented space `X ⊔ {0, 1}` via
/// `two_aug` around `two_red`.
#[allow(clippy::too_many_arguments)]
pub fn reg_to_rl(
    oracle: Arc<dyn EpisodicRlOracle>,
    space: AugSpace,
    s_count: usize,
    data: &TwoContextDataset,
    eps: f64,
    delta: f64,
    opts: TwoRedOptions,
    seed: Seed,
) -> Result<Predictor2> {
    let inner = TwoRedOracle::new(oracle, space, s_count, opts, seed);
    two_aug(&inner, space, data, eps, delta)
}
