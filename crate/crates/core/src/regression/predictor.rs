use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mdp::Obs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Erm { index: usize },
    Bayes,
    Constant,
    OneTwo,
    OneAug,
    TwoAug,
    OneRed,
    NoiselessOneRed,
    TwoRed,
    Custom,
}

/// A fitted map `X -> [0,1]`.
#[derive(Clone)]
pub struct Predictor1 {
    f: Arc<dyn Fn(Obs) -> f64 + Send + Sync>,
    provenance: Provenance,
}

/// A fitted map `X x X -> [0,1]`.
#[derive(Clone)]
pub struct Predictor2 {
    f: Arc<dyn Fn(Obs, Obs) -> f64 + Send + Sync>,
    provenance: Provenance,
}

impl Predictor1 {
    pub fn new(provenance: Provenance, f: impl Fn(Obs) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), provenance }
    }
    pub fn constant(v: f64) -> Self {
        Self::new(Provenance::Constant, move |_| v)
    }
    pub fn table(provenance: Provenance, values: Vec<f64>) -> Self {
        Self::new(provenance, move |x| values[x])
    }
    pub fn eval(&self, x: Obs) -> f64 {
        (self.f)(x).clamp(0.0, 1.0)
    }
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

impl Predictor2 {
    pub fn new(provenance: Provenance, f: impl Fn(Obs, Obs) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), provenance }
    }
    pub fn constant(v: f64) -> Self {
        Self::new(Provenance::Constant, move |_, _| v)
    }
    pub fn eval(&self, x1: Obs, x2: Obs) -> f64 {
        (self.f)(x1, x2).clamp(0.0, 1.0)
    }
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

impl fmt::Debug for Predictor1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predictor1({:?})", self.provenance)
    }
}

impl fmt::Debug for Predictor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predictor2({:?})", self.provenance)
    }
}
