//! Regression from reward-free RL: datasets are turned into horizon-2
//! environments, an exploration oracle covers them, and the cover is read
//! back as a predictor.

pub mod gadget;
pub mod one_red;
pub mod simulate;
pub mod two_red;

use std::sync::Arc;

use crate::access::{EpisodicEnv, ResetEnv};
use crate::error::{Error, Result};
use crate::explore::{pco, pcr, Algorithm, ExploreParams, ParamOverrides};
use crate::mdp::BlockMdp;
use crate::policy::Policy;
use crate::psdp::psdp_episode_demand;
use crate::regression::{BayesOracle, ConceptClass, ErmOracle};
use crate::rng::Seed;

pub use gadget::{action_grid, check_realizable, gadget_mdp, loss_tables, one_context_gadget, policy_value};
pub use one_red::{noiseless_one_red, one_red};
pub use simulate::{NoiselessResetSim, OneContextSim, TwoContextSim};
pub use two_red::{reg_to_rl, two_red, StitchedPredictor, TwoRedOptions, TwoRedOracle};

/// What an RL oracle is asked to do: cover a horizon-`horizon` environment
/// with `num_actions` actions to accuracy `eps` with confidence `1 - delta`.
#[derive(Clone, Debug)]
pub struct RlRequest {
    pub horizon: usize,
    pub num_actions: usize,
    pub eps: f64,
    pub delta: f64,
    /// The explicit model behind the environment, when the caller knows it.
    /// Only oracles that evaluate against ground truth read this.
    pub truth: Option<Arc<BlockMdp>>,
}

pub trait EpisodicRlOracle: Send + Sync {
    fn explore(&self, env: &mut dyn EpisodicEnv, req: &RlRequest) -> Result<Vec<Policy>>;
    /// Worst-case number of episodes `explore` may start.
    fn episode_demand(&self, req: &RlRequest) -> u64;
    /// Upper bound on the number of returned policies.
    fn max_policies(&self, req: &RlRequest) -> usize;
}

pub trait ResetRlOracle: Send + Sync {
    fn explore(&self, env: &mut dyn ResetEnv, req: &RlRequest) -> Result<Vec<Policy>>;
    /// Worst-case number of episodes plus initial resets.
    fn sample_demand(&self, req: &RlRequest) -> u64;
    fn max_policies(&self, req: &RlRequest) -> usize;
}

/// Returns a fixed policy set without interacting. Useful for testing the
/// reductions in isolation.
#[derive(Clone, Debug)]
pub struct FixedPolicies(pub Vec<Policy>);

impl EpisodicRlOracle for FixedPolicies {
    fn explore(&self, _: &mut dyn EpisodicEnv, _: &RlRequest) -> Result<Vec<Policy>> {
        Ok(self.0.clone())
    }
    fn episode_demand(&self, _: &RlRequest) -> u64 {
        0
    }
    fn max_policies(&self, _: &RlRequest) -> usize {
        self.0.len()
    }
}

impl ResetRlOracle for FixedPolicies {
    fn explore(&self, _: &mut dyn ResetEnv, _: &RlRequest) -> Result<Vec<Policy>> {
        Ok(self.0.clone())
    }
    fn sample_demand(&self, _: &RlRequest) -> u64 {
        0
    }
    fn max_policies(&self, _: &RlRequest) -> usize {
        self.0.len()
    }
}

/// Regression used inside an exploration-backed RL oracle.
#[derive(Clone, Debug)]
pub enum RlRegression {
    /// ERM over a class on the gadget's (augmented) observation space.
    Erm(Arc<ConceptClass>),
    /// Exact conditional means, resolved against `RlRequest::truth`.
    Bayes,
}

/// Exploration with PCO or PCR behind the RL-oracle interface.
#[derive(Clone, Debug)]
pub struct ExplorationOracle {
    pub algorithm: Algorithm,
    /// Latent state count of the environments it will face.
    pub s_count: usize,
    pub overrides: ParamOverrides,
    pub regression: RlRegression,
    pub seed: Seed,
}

impl ExplorationOracle {
    pub fn params(&self, req: &RlRequest) -> Result<ExploreParams> {
        ExploreParams::practical(
            self.algorithm,
            self.s_count,
            req.num_actions,
            req.horizon,
            req.eps.clamp(1e-12, 0.5),
            req.delta.clamp(1e-12, 0.5),
            &self.overrides,
        )
    }

    fn bayes(&self, req: &RlRequest) -> Result<BayesOracle> {
        req.truth
            .clone()
            .map(BayesOracle::for_model)
            .ok_or_else(|| Error::MissingTruth("Bayes regression inside an RL oracle needs the model".into()))
    }

    /// Worst case: every candidate is accepted and runs PSDP.
    fn demand(&self, req: &RlRequest, reset: bool) -> u64 {
        let Ok(p) = self.params(req) else { return u64::MAX };
        let rounds = if req.horizon == 1 { 1 } else { p.rounds } as u64;
        let na = req.num_actions as u64;
        let per_round: u64 = (0..req.horizon.saturating_sub(1))
            .map(|h| {
                let psdp = p.candidates as u64 * psdp_episode_demand(h + 1, req.num_actions, p.psdp_samples);
                if reset {
                    p.test_points as u64 + psdp
                } else {
                    2 * na * p.samples as u64 + p.test_points as u64 + p.candidates as u64 + psdp
                }
            })
            .sum();
        rounds * per_round
    }

    fn policy_bound(&self, req: &RlRequest) -> usize {
        self.params(req).map(|p| p.max_layer_size * req.horizon * p.rounds + 1).unwrap_or(usize::MAX)
    }
}

impl EpisodicRlOracle for ExplorationOracle {
    fn explore(&self, env: &mut dyn EpisodicEnv, req: &RlRequest) -> Result<Vec<Policy>> {
        if self.algorithm != Algorithm::Pco {
            return Err(Error::InvalidParameter("episodic access needs the PCO oracle".into()));
        }
        let params = self.params(req)?;
        let out = match &self.regression {
            RlRegression::Erm(class) => pco(&ErmOracle::new(class.clone()), &params, env, self.seed)?,
            RlRegression::Bayes => pco(&self.bayes(req)?, &params, env, self.seed)?,
        };
        Ok(out.policies)
    }
    fn episode_demand(&self, req: &RlRequest) -> u64 {
        self.demand(req, false)
    }
    fn max_policies(&self, req: &RlRequest) -> usize {
        self.policy_bound(req)
    }
}

impl ResetRlOracle for ExplorationOracle {
    fn explore(&self, env: &mut dyn ResetEnv, req: &RlRequest) -> Result<Vec<Policy>> {
        if self.algorithm != Algorithm::Pcr {
            return Err(Error::InvalidParameter("reset access needs the PCR oracle".into()));
        }
        let params = self.params(req)?;
        let out = match &self.regression {
            RlRegression::Erm(class) => pcr(&ErmOracle::new(class.clone()), &params, env, self.seed)?,
            RlRegression::Bayes => pcr(&self.bayes(req)?, &params, env, self.seed)?,
        };
        Ok(out.policies)
    }
    fn sample_demand(&self, req: &RlRequest) -> u64 {
        self.demand(req, true)
    }
    fn max_policies(&self, req: &RlRequest) -> usize {
        self.policy_bound(req)
    }
}
