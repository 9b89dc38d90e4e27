//! Reward-free exploration: layer-by-layer policy-cover construction with
//! kinematics clustering, under episodic access (PCO) or reset access (PCR).

mod episodic;
pub mod kinematics;
mod params;
mod reset;

pub use episodic::{build_contrastive_dataset, epco, pco};
pub use params::{
    pco_theory, pcr_theory, Algorithm, DatasetMode, ExploreParams, ParamOverrides, TheoryParams, DEFAULT_PSDP_SAMPLES,
    DEFAULT_SAMPLES,
};
pub use reset::{build_discriminator_datasets, epcr, pcr};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::Result;
use crate::mdp::Obs;
use crate::policy::Policy;
use crate::psdp::RewardFn;

/// Per-observation kinematics signature, memoised.
#[derive(Clone)]
pub(crate) struct Signatures {
    f: Arc<dyn Fn(Obs) -> Vec<f64> + Send + Sync>,
    cache: Arc<Mutex<HashMap<Obs, Arc<Vec<f64>>>>>,
}

impl Signatures {
    pub(crate) fn new(scale: f64, f: impl Fn(Obs) -> Vec<f64> + Send + Sync + 'static) -> Self {
        let f = move |x| {
            let mut v = f(x);
            v.iter_mut().for_each(|c| *c *= scale);
            v
        };
        Self { f: Arc::new(f), cache: Arc::new(Mutex::new(HashMap::new())) }
    }

    pub(crate) fn get(&self, x: Obs) -> Arc<Vec<f64>> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(&x) {
            return v.clone();
        }
        let v = Arc::new((self.f)(x));
        self.cache.lock().expect("cache lock").insert(x, v.clone());
        v
    }
}

pub(crate) fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// `R(x) = max(0, 1 - dist(center, x) / γ)`.
pub(crate) fn center_reward(sigs: &Signatures, center: Obs, gamma: f64) -> RewardFn {
    let sigs = sigs.clone();
    let c = sigs.get(center);
    RewardFn::new(move |x| (1.0 - max_distance(&c, &sigs.get(x)) / gamma).max(0.0))
}

/// A candidate is accepted iff its distance to every accepted center is
/// strictly greater than `gamma_sep`.
pub(crate) fn is_new_center(sigs: &Signatures, accepted: &[Obs], x: Obs, gamma_sep: f64) -> bool {
    let v = sigs.get(x);
    accepted.iter().all(|&c| max_distance(&v, &sigs.get(c)) > gamma_sep)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LayerDiagnostics {
    /// Layer whose cover was built.
    pub layer: usize,
    pub candidates: usize,
    pub accepted_centers: Vec<Obs>,
    pub psdp_value_estimates: Vec<f64>,
    pub regression_episodes: u64,
    pub regression_resets: u64,
    pub sampling_episodes: u64,
    pub sampling_resets: u64,
    pub psdp_episodes: u64,
}

impl LayerDiagnostics {
    pub fn episodes(&self) -> u64 {
        self.regression_episodes + self.sampling_episodes + self.psdp_episodes
    }
    pub fn resets(&self) -> u64 {
        self.regression_resets + self.sampling_resets
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RoundDiagnostics {
    pub round: usize,
    pub layer_sizes: Vec<usize>,
    pub gamma_size: usize,
    pub layers: Vec<LayerDiagnostics>,
}

#[derive(Clone, Debug)]
pub struct ExploreOutput {
    pub policies: Vec<Policy>,
    pub rounds: Vec<RoundDiagnostics>,
    /// Sum of the per-phase budgets.
    pub budget_episodes: u64,
    pub budget_resets: u64,
}

fn push_unique(set: &mut Vec<Policy>, p: &Policy) {
    let dup = set.iter().any(|q| q.ptr_eq(p) || (q.is_uniform() && p.is_uniform()));
    if !dup {
        set.push(p.clone());
    }
}

/// The shared outer loop: `rounds` passes, each extending covers layer by
/// layer; small layer sets join the backup set `Γ` for later rounds.
pub(crate) fn outer_loop<F>(horizon: usize, params: &ExploreParams, mut extend: F) -> Result<ExploreOutput>
where
    F: FnMut(usize, &[Vec<Policy>], &[Policy]) -> Result<(Vec<Policy>, LayerDiagnostics)>,
{
    let uniform = Policy::uniform();
    let mut gamma: Vec<Policy> = Vec::new();
    let mut output: Vec<Policy> = Vec::new();
    let mut rounds = Vec::new();
    let (mut episodes, mut resets) = (0, 0);
    let rounds_to_run = if horizon == 1 { 1 } else { params.rounds };
    for r in 0..rounds_to_run {
        let mut covers: Vec<Vec<Policy>> = vec![vec![uniform.clone()]];
        let mut diag = RoundDiagnostics { round: r, gamma_size: gamma.len(), ..Default::default() };
        for h in 0..horizon - 1 {
            let (next, d) = extend(h, &covers, &gamma)?;
            episodes += d.episodes();
            resets += d.resets();
            diag.layers.push(d);
            covers.push(next);
        }
        diag.layer_sizes = covers.iter().map(Vec::len).collect();
        for layer in covers.iter().filter(|c| c.len() <= params.max_layer_size) {
            for p in layer {
                push_unique(&mut gamma, p);
                push_unique(&mut output, p);
            }
        }
        rounds.push(diag);
    }
    Ok(ExploreOutput { policies: output, rounds, budget_episodes: episodes, budget_resets: resets })
}
