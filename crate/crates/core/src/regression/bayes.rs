//! The Bayes-optimal regression oracle. It ignores sample labels and returns
//! the exact conditional mean described by the dataset's attached truth.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::explore::kinematics;
use crate::mdp::{BlockMdp, State};
use crate::psdp::latent_q_values;
use crate::regression::truth::{LabelTruth, LatentTarget, SamplingProcess};
use crate::regression::{
    OneContextDataset, OneContextOracle, Predictor1, Predictor2, Provenance, TwoContextDataset, TwoContextOracle,
};

pub fn bayes_one_context(f: Vec<f64>, decoder: Vec<State>) -> Predictor1 {
    Predictor1::new(Provenance::Bayes, move |x| f[decoder[x]])
}

pub fn bayes_two_context(f: Vec<Vec<f64>>, decoder: Vec<State>) -> Predictor2 {
    Predictor2::new(Provenance::Bayes, move |x1, x2| f[decoder[x1]][decoder[x2]])
}

#[derive(Clone, Debug, Default)]
pub struct BayesOracle {
    model: Option<Arc<BlockMdp>>,
}

impl BayesOracle {
    /// Resolves only latent truths.
    pub fn latent_only() -> Self {
        Self { model: None }
    }

    /// Also resolves truths produced by exploration procedures on `model`.
    pub fn for_model(model: Arc<BlockMdp>) -> Self {
        Self { model: Some(model) }
    }

    fn model(&self) -> Result<&BlockMdp> {
        self.model
            .as_deref()
            .ok_or_else(|| Error::MissingTruth("process truth needs a model-backed oracle".into()))
    }

    pub fn resolve_one(&self, truth: &LabelTruth) -> Result<Predictor1> {
        match truth {
            LabelTruth::Latent(t) => match &t.target {
                LatentTarget::One(f) => Ok(bayes_one_context(f.clone(), t.decoder.clone())),
                LatentTarget::Two(_) => Err(Error::MissingTruth("two-context target on a one-context dataset".into())),
            },
            LabelTruth::Process(SamplingProcess::PsdpReturn { layer, action, reward_layer, reward, continuation }) => {
                let m = self.model()?;
                let q = latent_q_values(m, *layer, *reward_layer, reward, continuation);
                let a = *action;
                let decoder = m.decoder().to_vec();
                Ok(Predictor1::new(Provenance::Bayes, move |x| q[decoder[x]][a]))
            }
            LabelTruth::Process(SamplingProcess::Discriminator { layer, discriminators, index, action }) => {
                let m = self.model()?;
                let states: Vec<State> = discriminators.iter().map(|&x| m.decoder()[x]).collect();
                let w = kinematics::w_column(m, *layer, &states, *index, *action);
                Ok(bayes_one_context(w, m.decoder().to_vec()))
            }
            LabelTruth::Process(SamplingProcess::Contrastive { .. }) => {
                Err(Error::MissingTruth("contrastive truth on a one-context dataset".into()))
            }
            LabelTruth::PadSecond(_) => Err(Error::MissingTruth("padded truth on a one-context dataset".into())),
        }
    }

    pub fn resolve_two(&self, truth: &LabelTruth) -> Result<Predictor2> {
        match truth {
            LabelTruth::Latent(t) => match &t.target {
                LatentTarget::Two(f) => Ok(bayes_two_context(f.clone(), t.decoder.clone())),
                LatentTarget::One(_) => Err(Error::MissingTruth("one-context target on a two-context dataset".into())),
            },
            LabelTruth::Process(SamplingProcess::Contrastive { layer, action, mixture }) => {
                let m = self.model()?;
                let f = kinematics::f_table(m, *layer, mixture, *action);
                Ok(bayes_two_context(f, m.decoder().to_vec()))
            }
            LabelTruth::PadSecond(inner) => {
                let p = self.resolve_one(inner)?;
                Ok(Predictor2::new(Provenance::Bayes, move |x1, _| p.eval(x1)))
            }
            LabelTruth::Process(_) => Err(Error::MissingTruth("one-context process on a two-context dataset".into())),
        }
    }
}

impl OneContextOracle for BayesOracle {
    fn fit_one(&self, data: &OneContextDataset, _eps: f64, _delta: f64) -> Result<Predictor1> {
        let truth = data.truth.as_ref().ok_or_else(|| Error::MissingTruth("dataset carries no truth".into()))?;
        self.resolve_one(truth)
    }
}

impl TwoContextOracle for BayesOracle {
    fn fit_two(&self, data: &TwoContextDataset, _eps: f64, _delta: f64) -> Result<Predictor2> {
        let truth = data.truth.as_ref().ok_or_else(|| Error::MissingTruth("dataset carries no truth".into()))?;
        self.resolve_two(truth)
    }
}
