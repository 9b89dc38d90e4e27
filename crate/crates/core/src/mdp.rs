//! Block MDP models: a latent tabular MDP plus layered emissions whose
//! supports are disjoint across latent states.
//!
//! Layers are 0-based. `transition(h, s, a)` is the law of the layer-`h+1`
//! state given the layer-`h` state and action, for `h < horizon - 1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::ConceptClass;
use crate::rng::sample_index;

pub type State = usize;
pub type Obs = usize;
pub type Action = usize;

const RENORMALISE_WINDOW: f64 = 1e-6;

fn normalise(row: &mut [f64], context: impl Fn() -> String) -> Result<()> {
    let mut sum = 0.0;
    for &p in row.iter() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution { context: context(), sum: p });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > RENORMALISE_WINDOW {
        return Err(Error::InvalidDistribution { context: context(), sum });
    }
    // Leave rounding-level error alone so that renormalisation is idempotent.
    if (sum - 1.0).abs() > 8.0 * f64::EPSILON {
        for p in row.iter_mut() {
            *p /= sum;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentModel {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    initial: Vec<f64>,
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
}

impl LatentModel {
    /// `transitions[h][s][a]` is a distribution over layer-`h+1` states;
    /// there are `horizon - 1` such layers.
    pub fn new(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        mut initial: Vec<f64>,
        mut transitions: Vec<Vec<Vec<Vec<f64>>>>,
    ) -> Result<Self> {
        if horizon == 0 || num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidModel("horizon, states and actions must be positive".into()));
        }
        if initial.len() != num_states {
            return Err(Error::InvalidModel(format!(
                "initial distribution has {} entries, expected {num_states}",
                initial.len()
            )));
        }
        normalise(&mut initial, || "P1".to_string())?;
        if transitions.len() != horizon - 1 {
            return Err(Error::InvalidModel(format!(
                "{} transition layers, expected {}",
                transitions.len(),
                horizon - 1
            )));
        }
        for (h, layer) in transitions.iter_mut().enumerate() {
            if layer.len() != num_states {
                return Err(Error::InvalidModel(format!("transition layer {h} has wrong state count")));
            }
            for (s, per_state) in layer.iter_mut().enumerate() {
                if per_state.len() != num_actions {
                    return Err(Error::InvalidModel(format!(
                        "transition layer {h} state {s} has wrong action count"
                    )));
                }
                for (a, row) in per_state.iter_mut().enumerate() {
                    if row.len() != num_states {
                        return Err(Error::InvalidModel(format!(
                            "transition row ({h},{s},{a}) has wrong length"
                        )));
                    }
                    normalise(row, || format!("P[{h}][{s}][{a}]"))?;
                }
            }
        }
        Ok(Self { horizon, num_states, num_actions, initial, transitions })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn num_states(&self) -> usize {
        self.num_states
    }
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
    pub fn initial(&self) -> &[f64] {
        &self.initial
    }
    pub fn transition(&self, h: usize, s: State, a: Action) -> &[f64] {
        &self.transitions[h][s][a]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationModel {
    num_obs: usize,
    emissions: Vec<Vec<Vec<f64>>>,
    decoder: Vec<State>,
    supports: Vec<Vec<Vec<(Obs, f64)>>>,
}

impl ObservationModel {
    /// `emissions[h][s]` is a distribution over observations; its support must
    /// lie inside the decoder preimage of `s`.
    pub fn new(
        num_states: usize,
        num_obs: usize,
        mut emissions: Vec<Vec<Vec<f64>>>,
        decoder: Vec<State>,
    ) -> Result<Self> {
        if decoder.len() != num_obs {
            return Err(Error::InvalidModel(format!(
                "decoder has {} entries, expected {num_obs}",
                decoder.len()
            )));
        }
        if let Some(&bad) = decoder.iter().find(|&&s| s >= num_states) {
            return Err(Error::InvalidModel(format!("decoder maps to unknown state {bad}")));
        }
        let mut supports = Vec::with_capacity(emissions.len());
        for (h, layer) in emissions.iter_mut().enumerate() {
            if layer.len() != num_states {
                return Err(Error::InvalidModel(format!("emission layer {h} has wrong state count")));
            }
            let mut layer_supports = Vec::with_capacity(num_states);
            for (s, row) in layer.iter_mut().enumerate() {
                if row.len() != num_obs {
                    return Err(Error::InvalidModel(format!("emission row ({h},{s}) has wrong length")));
                }
                normalise(row, || format!("O[{h}][{s}]"))?;
                let mut support = Vec::new();
                for (x, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        if decoder[x] != s {
                            return Err(Error::InvalidModel(format!(
                                "O[{h}][{s}] puts mass on observation {x}, which decodes to {}",
                                decoder[x]
                            )));
                        }
                        support.push((x, p));
                    }
                }
                layer_supports.push(support);
            }
            supports.push(layer_supports);
        }
        Ok(Self { num_obs, emissions, decoder, supports })
    }

    pub fn num_obs(&self) -> usize {
        self.num_obs
    }
    pub fn emission(&self, h: usize, s: State) -> &[f64] {
        &self.emissions[h][s]
    }
    pub fn support(&self, h: usize, s: State) -> &[(Obs, f64)] {
        &self.supports[h][s]
    }
    pub fn decoder(&self) -> &[State] {
        &self.decoder
    }
}

#[derive(Clone, Debug)]
pub struct BlockMdp {
    latent: LatentModel,
    observations: ObservationModel,
    terminal: Option<(State, Obs)>,
    concept_class: Option<Arc<ConceptClass>>,
}

impl PartialEq for BlockMdp {
    fn eq(&self, other: &Self) -> bool {
        self.latent == other.latent
            && self.observations == other.observations
            && self.terminal == other.terminal
            && match (&self.concept_class, &other.concept_class) {
                (None, None) => true,
                (Some(a), Some(b)) => a == b,
                _ => false,
            }
    }
}

impl BlockMdp {
    pub fn new(latent: LatentModel, observations: ObservationModel) -> Result<Self> {
        if observations.emissions.len() != latent.horizon {
            return Err(Error::InvalidModel(format!(
                "{} emission layers for horizon {}",
                observations.emissions.len(),
                latent.horizon
            )));
        }
        if observations.emissions.first().map(|l| l.len()) != Some(latent.num_states) {
            return Err(Error::InvalidModel("emission state count mismatch".into()));
        }
        Ok(Self { latent, observations, terminal: None, concept_class: None })
    }

    pub(crate) fn with_terminal(mut self, state: State, obs: Obs) -> Self {
        self.terminal = Some((state, obs));
        self
    }

    pub fn with_concept_class(mut self, class: Arc<ConceptClass>) -> Result<Self> {
        if class.num_obs() != self.num_obs() || class.num_states() != self.num_states() {
            return Err(Error::InvalidModel("concept class does not match the model's spaces".into()));
        }
        self.concept_class = Some(class);
        Ok(self)
    }

    pub fn concept_class(&self) -> Option<&Arc<ConceptClass>> {
        self.concept_class.as_ref()
    }

    pub fn latent(&self) -> &LatentModel {
        &self.latent
    }
    pub fn observations(&self) -> &ObservationModel {
        &self.observations
    }
    pub fn horizon(&self) -> usize {
        self.latent.horizon
    }
    pub fn num_states(&self) -> usize {
        self.latent.num_states
    }
    pub fn num_actions(&self) -> usize {
        self.latent.num_actions
    }
    pub fn num_obs(&self) -> usize {
        self.observations.num_obs
    }
    pub fn initial(&self) -> &[f64] {
        &self.latent.initial
    }
    pub fn transition(&self, h: usize, s: State, a: Action) -> &[f64] {
        self.latent.transition(h, s, a)
    }
    pub fn emission(&self, h: usize, s: State) -> &[f64] {
        self.observations.emission(h, s)
    }
    pub fn emission_support(&self, h: usize, s: State) -> &[(Obs, f64)] {
        self.observations.support(h, s)
    }

    /// The ground-truth decoder. Verification code only; algorithms never see it.
    pub fn decoder(&self) -> &[State] {
        &self.observations.decoder
    }

    /// Absorbing state and its observation, present on truncated models.
    pub fn terminal(&self) -> Option<(State, Obs)> {
        self.terminal
    }

    pub fn is_terminal_state(&self, s: State) -> bool {
        self.terminal.map(|(t, _)| t == s).unwrap_or(false)
    }

    pub fn sample_initial_state<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> State {
        sample_index(&self.latent.initial, rng)
    }

    pub fn sample_next_state<R: rand::Rng + ?Sized>(&self, h: usize, s: State, a: Action, rng: &mut R) -> State {
        sample_index(self.latent.transition(h, s, a), rng)
    }

    pub fn sample_observation<R: rand::Rng + ?Sized>(&self, h: usize, s: State, rng: &mut R) -> Obs {
        let support = self.emission_support(h, s);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(x, p) in support {
            acc += p;
            if u < acc {
                return x;
            }
        }
        support.last().map(|&(x, _)| x).expect("emission with empty support")
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile::from_model(self);
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.into_model()
    }
}

#[derive(Serialize, Deserialize)]
struct ConceptFile {
    members: Vec<Vec<State>>,
    truth: usize,
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ModelFile {
    H: usize,
    S: usize,
    A: usize,
    X: usize,
    P1: Vec<f64>,
    P: Vec<Vec<Vec<Vec<f64>>>>,
    O: Vec<Vec<Vec<f64>>>,
    decoder_star: Vec<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    concept_class: Option<ConceptFile>,
}

impl ModelFile {
    fn from_model(m: &BlockMdp) -> Self {
        Self {
            H: m.horizon(),
            S: m.num_states(),
            A: m.num_actions(),
            X: m.num_obs(),
            P1: m.latent.initial.clone(),
            P: m.latent.transitions.clone(),
            O: m.observations.emissions.clone(),
            decoder_star: m.observations.decoder.clone(),
            concept_class: m.concept_class.as_ref().map(|c| ConceptFile {
                members: c.members().to_vec(),
                truth: c.truth_index(),
            }),
        }
    }

    fn into_model(self) -> Result<BlockMdp> {
        let latent = LatentModel::new(self.H, self.S, self.A, self.P1, self.P)?;
        let obs = ObservationModel::new(self.S, self.X, self.O, self.decoder_star)?;
        let model = BlockMdp::new(latent, obs)?;
        match self.concept_class {
            Some(c) => {
                let class = ConceptClass::new(c.members, self.S, c.truth)?;
                model.with_concept_class(Arc::new(class))
            }
            None => Ok(model),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BlockMdp {
        let latent = LatentModel::new(
            2,
            2,
            2,
            vec![0.5, 0.5],
            vec![vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.3, 0.7], vec![0.3, 0.7]]]],
        )
        .unwrap();
        let obs = ObservationModel::new(
            2,
            3,
            vec![vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]]; 2],
            vec![0, 0, 1],
        )
        .unwrap();
        BlockMdp::new(latent, obs).unwrap()
    }

    #[test]
    fn renormalises_within_window() {
        let l = LatentModel::new(1, 2, 1, vec![0.5, 0.5000005], vec![]).unwrap();
        let s: f64 = l.initial().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_outside_window() {
        let err = LatentModel::new(1, 2, 1, vec![0.5, 0.51], vec![]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
    }

    #[test]
    fn rejects_emission_outside_preimage() {
        let err = ObservationModel::new(2, 2, vec![vec![vec![0.5, 0.5], vec![0.0, 1.0]]], vec![0, 1]).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = tiny();
        let back = BlockMdp::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn sampled_observations_decode_to_their_state() {
        let m = tiny();
        let mut rng = crate::rng::Seed(3).rng();
        for _ in 0..100 {
            let s = m.sample_initial_state(&mut rng);
            let x = m.sample_observation(0, s, &mut rng);
            assert_eq!(m.decoder()[x], s);
        }
    }
}
