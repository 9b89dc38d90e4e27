//! One-context regression through an exploration oracle: cover the gadget,
//! then pick the cover policy with the smallest held-out squared error.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mdp::{BlockMdp, Obs};
use crate::policy::Policy;
use crate::reg_from_rl::gadget::{action_grid, one_context_gadget, policy_value};
use crate::reg_from_rl::simulate::{NoiselessResetSim, OneContextSim};
use crate::reg_from_rl::{EpisodicRlOracle, ResetRlOracle, RlRequest};
use crate::regression::truth::{ContextLaw, LabelTruth, LatentTarget};
use crate::regression::{AugSpace, OneContextDataset, Predictor1, Provenance};
use crate::rng::Seed;

/// Held-out sample count for selecting among `k` policies.
pub(crate) fn holdout_size(eps: f64, delta: f64, k: usize) -> usize {
    (16.0 / (eps * eps) * (4.0 * k.max(1) as f64 / delta).ln()).ceil() as usize
}

fn check_tolerances(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("tolerances ({eps}, {delta}) outside (0, 1)")));
    }
    Ok(())
}

/// The explicit gadget behind a dataset, when its truth carries a latent
/// target and the context law.
fn gadget_truth(data: &OneContextDataset, eps_a: f64) -> Result<Option<Arc<BlockMdp>>> {
    let Some(LabelTruth::Latent(t)) = &data.truth else { return Ok(None) };
    match (&t.target, &t.law) {
        (LatentTarget::One(g), Some(ContextLaw::One(law))) => {
            Ok(Some(Arc::new(one_context_gadget(&t.decoder, t.num_states, g, law, eps_a)?)))
        }
        _ => Ok(None),
    }
}

/// Index of the policy whose mean action best fits the held-out samples.
/// Ties go to the lowest index.
fn select(psi: &[Policy], grid: &[f64], holdout: &[(Obs, bool)]) -> Result<usize> {
    if psi.is_empty() {
        return Err(Error::InvalidParameter("the oracle returned no policies".into()));
    }
    let mut best = (0, f64::INFINITY);
    for (k, pi) in psi.iter().enumerate() {
        let loss: f64 = holdout
            .iter()
            .map(|&(x, y)| (policy_value(pi, grid, x) - f64::from(u8::from(y))).powi(2))
            .sum::<f64>()
            / holdout.len().max(1) as f64;
        if loss < best.1 {
            best = (k, loss);
        }
    }
    Ok(best.0)
}

fn predictor(pi: Policy, grid: Vec<f64>, provenance: Provenance) -> Predictor1 {
    Predictor1::new(provenance, move |x| policy_value(&pi, &grid, x))
}

struct Plan {
    grid: Vec<f64>,
    req: RlRequest,
}

fn plan(data: &OneContextDataset, eps: f64, delta: f64) -> Result<Plan> {
    check_tolerances(eps, delta)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let eps_a = (eps / 4.0).sqrt();
    let grid = action_grid(eps_a)?;
    let req =
        RlRequest { horizon: 2, num_actions: grid.len(), eps: eps / 4.0, delta: delta / 2.0, truth: gadget_truth(data, eps_a)? };
    Ok(Plan { grid, req })
}

fn budget(n: usize, demand: u64, holdout: usize) -> Result<usize> {
    let needed = demand.saturating_add(holdout as u64);
    if needed > n as u64 {
        return Err(Error::DatasetExhausted { needed, available: n as u64 });
    }
    Ok(n - holdout)
}

/// Reduce one-context regression over `space`'s base observations to
/// episodic reward-free RL on the one-context gadget.
pub fn one_red(
    oracle: &dyn EpisodicRlOracle,
    space: AugSpace,
    data: &OneContextDataset,
    eps: f64,
    delta: f64,
    seed: Seed,
) -> Result<Predictor1> {
    let Plan { grid, req } = plan(data, eps, delta)?;
    let n = data.len();
    let m_max = holdout_size(eps, delta, oracle.max_policies(&req));
    let usable = budget(n, oracle.episode_demand(&req), m_max)?;
    let mut sim = OneContextSim::new(&data.samples[..usable], &grid, space.zero_obs(), space.one_obs(), seed.stream("sim"));
    let psi = oracle.explore(&mut sim, &req)?;
    let m = holdout_size(eps, delta, psi.len()).min(m_max);
    let k = select(&psi, &grid, &data.samples[n - m..])?;
    Ok(predictor(psi[k].clone(), grid, Provenance::OneRed))
}

/// The reset-access variant for labels that are a deterministic function
/// of the latent state.
pub fn noiseless_one_red(
    oracle: &dyn ResetRlOracle,
    space: AugSpace,
    data: &OneContextDataset,
    eps: f64,
    delta: f64,
    seed: Seed,
) -> Result<Predictor1> {
    let Plan { grid, req } = plan(data, eps, delta)?;
    let n = data.len();
    let m_max = holdout_size(eps, delta, oracle.max_policies(&req));
    let usable = budget(n, oracle.sample_demand(&req), m_max)?;
    // Validate the whole dataset, not just the simulated prefix.
    NoiselessResetSim::new(&data.samples, &grid, space.zero_obs(), space.one_obs(), seed.stream("check"))?;
    let mut sim =
        NoiselessResetSim::new(&data.samples[..usable], &grid, space.zero_obs(), space.one_obs(), seed.stream("sim"))?;
    let psi = oracle.explore(&mut sim, &req)?;
    let m = holdout_size(eps, delta, psi.len()).min(m_max);
    let k = select(&psi, &grid, &data.samples[n - m..])?;
    Ok(predictor(psi[k].clone(), grid, Provenance::NoiselessOneRed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reg_from_rl::FixedPolicies;

    const SPACE: AugSpace = AugSpace { base_obs: 4, base_states: 2 };

    #[test]
    fn constant_zero_labels_select_the_zero_action() {
        let data = OneContextDataset::new((0..20_000).map(|i| (i % 4, false)).collect());
        let oracle = FixedPolicies(vec![Policy::uniform(), Policy::constant(0)]);
        let p = one_red(&oracle, SPACE, &data, 0.2, 0.1, Seed(3)).unwrap();
        for x in 0..4 {
            assert_eq!(p.eval(x), 0.0);
        }
    }

    #[test]
    fn small_datasets_are_refused_up_front() {
        let data = OneContextDataset::new(vec![(0, true); 10]);
        let oracle = FixedPolicies(vec![Policy::constant(0)]);
        let err = one_red(&oracle, SPACE, &data, 0.2, 0.1, Seed(3)).err().unwrap();
        assert!(matches!(err, Error::DatasetExhausted { .. }));
    }

    #[test]
    fn noiseless_all_ones_selects_the_top_action() {
        let data = OneContextDataset::new((0..20_000).map(|i| (i % 4, true)).collect());
        // ε = 0.16 puts 1.0 on the grid.
        let grid = action_grid((0.16f64 / 4.0).sqrt()).unwrap();
        assert_eq!(*grid.last().unwrap(), 1.0);
        let oracle = FixedPolicies(vec![Policy::constant(0), Policy::constant(grid.len() - 1)]);
        let p = noiseless_one_red(&oracle, SPACE, &data, 0.16, 0.1, Seed(4)).unwrap();
        for x in 0..4 {
            assert_eq!(p.eval(x), 1.0);
        }
    }
}
