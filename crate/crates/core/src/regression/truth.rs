//! Ground-truth descriptions attached to datasets so that the Bayes oracle can
//! return the exact conditional mean. Algorithms never inspect these.

use std::sync::Arc;

use crate::mdp::{Action, Obs, State};
use crate::policy::Policy;
use crate::psdp::RewardFn;

#[derive(Clone, Debug)]
pub enum LabelTruth {
    Latent(Arc<LatentTruth>),
    Process(SamplingProcess),
    /// A two-context dataset whose second coordinate is constant padding.
    PadSecond(Box<LabelTruth>),
}

/// Labels whose conditional mean factors through a decoder.
#[derive(Clone, Debug)]
pub struct LatentTruth {
    pub decoder: Vec<State>,
    pub num_states: usize,
    pub target: LatentTarget,
    /// Law of the contexts, when known. Needed to build gadgets.
    pub law: Option<ContextLaw>,
}

#[derive(Clone, Debug)]
pub enum LatentTarget {
    One(Vec<f64>),
    Two(Vec<Vec<f64>>),
}

/// Dense context law: `One[x]` or `Two[x1][x2]`.
#[derive(Clone, Debug)]
pub enum ContextLaw {
    One(Vec<f64>),
    Two(Vec<Vec<f64>>),
}

/// Labels produced by one of the exploration data-collection procedures.
/// The Bayes oracle resolves these against a model.
#[derive(Clone, Debug)]
pub enum SamplingProcess {
    /// Reward at `reward_layer` after taking `action` at `layer` and then
    /// following `continuation`.
    PsdpReturn { layer: usize, action: Action, reward_layer: usize, reward: RewardFn, continuation: Policy },
    /// Contrastive pairs `(x_h, x_{h+1})` whose negatives come from
    /// `mixture` composed with a uniform action at `layer`.
    Contrastive { layer: usize, action: Action, mixture: Vec<(Policy, f64)> },
    /// Indicator that the reset came from discriminator `index` with `action`.
    Discriminator { layer: usize, discriminators: Vec<Obs>, index: usize, action: Action },
}

impl LatentTruth {
    pub fn one(&self, x: Obs) -> Option<f64> {
        match &self.target {
            LatentTarget::One(f) => Some(f[self.decoder[x]]),
            LatentTarget::Two(_) => None,
        }
    }

    pub fn two(&self, x1: Obs, x2: Obs) -> Option<f64> {
        match &self.target {
            LatentTarget::Two(f) => Some(f[self.decoder[x1]][self.decoder[x2]]),
            LatentTarget::One(_) => None,
        }
    }
}
