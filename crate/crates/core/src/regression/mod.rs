//! Regression oracles over finite decoder classes and the reductions between
//! one-context, two-context and augmented-space regression.

mod bayes;
mod concept;
mod dataset;
mod erm;
mod predictor;
pub mod reductions;
pub mod truth;

pub use bayes::{bayes_one_context, bayes_two_context, BayesOracle};
pub use concept::{AugSpace, AugmentedConceptClass, ConceptClass};
pub use dataset::{OneContextDataset, TwoContextDataset};
pub use erm::{erm_one_context, erm_two_context, one_context_losses, two_context_losses, ErmFit, ErmOracle};
pub use predictor::{Predictor1, Predictor2, Provenance};
pub use reductions::{one_aug, one_two, two_aug, OneAug, OneTwo, TwoAug};

use crate::error::Result;

pub trait OneContextOracle: Send + Sync {
    fn fit_one(&self, data: &OneContextDataset, eps: f64, delta: f64) -> Result<Predictor1>;
}

pub trait TwoContextOracle: Send + Sync {
    fn fit_two(&self, data: &TwoContextDataset, eps: f64, delta: f64) -> Result<Predictor2>;
}

impl<T: OneContextOracle + ?Sized> OneContextOracle for std::sync::Arc<T> {
    fn fit_one(&self, data: &OneContextDataset, eps: f64, delta: f64) -> Result<Predictor1> {
        (**self).fit_one(data, eps, delta)
    }
}

impl<T: TwoContextOracle + ?Sized> TwoContextOracle for std::sync::Arc<T> {
    fn fit_two(&self, data: &TwoContextDataset, eps: f64, delta: f64) -> Result<Predictor2> {
        (**self).fit_two(data, eps, delta)
    }
}
