//! Oracle-to-oracle reductions: one-context from two-context, and oracles on
//! augmented spaces from oracles on the base space.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mdp::Obs;
use crate::regression::truth::{ContextLaw, LabelTruth, LatentTarget, LatentTruth};
use crate::regression::{
    AugSpace, OneContextDataset, OneContextOracle, Predictor1, Predictor2, Provenance, TwoContextDataset,
    TwoContextOracle,
};

/// Pad every context with the lowest observation present and regress on pairs.
pub fn one_two(
    reg2: &dyn TwoContextOracle,
    data: &OneContextDataset,
    eps: f64,
    delta: f64,
) -> Result<Predictor1> {
    let pad = data.samples.iter().map(|&(x, _)| x).min().ok_or(Error::EmptyDataset)?;
    let padded = TwoContextDataset {
        samples: data.samples.iter().map(|&(x, y)| (x, pad, y)).collect(),
        truth: data.truth.as_ref().map(|t| pad_truth(t, pad)),
    };
    let inner = reg2.fit_two(&padded, eps, delta)?;
    Ok(Predictor1::new(Provenance::OneTwo, move |x| inner.eval(x, pad)))
}

fn pad_truth(truth: &LabelTruth, pad: Obs) -> LabelTruth {
    match truth {
        LabelTruth::Latent(t) => match &t.target {
            LatentTarget::One(f) => {
                let s = t.num_states;
                let target = (0..s).map(|s1| vec![f[s1]; s]).collect();
                let law = match &t.law {
                    Some(ContextLaw::One(p)) => {
                        let n = t.decoder.len();
                        Some(ContextLaw::Two(
                            p.iter()
                                .map(|&px| {
                                    let mut row = vec![0.0; n];
                                    row[pad] = px;
                                    row
                                })
                                .collect(),
                        ))
                    }
                    _ => None,
                };
                LabelTruth::Latent(Arc::new(LatentTruth {
                    decoder: t.decoder.clone(),
                    num_states: s,
                    target: LatentTarget::Two(target),
                    law,
                }))
            }
            LatentTarget::Two(_) => LabelTruth::PadSecond(Box::new(truth.clone())),
        },
        other => LabelTruth::PadSecond(Box::new(other.clone())),
    }
}

/// Stratum of an augmented observation: `Some(b)` for the special symbol `b`.
fn stratum(space: AugSpace, x: Obs) -> Option<usize> {
    if x == space.zero_obs() {
        Some(0)
    } else if x == space.one_obs() {
        Some(1)
    } else {
        None
    }
}

fn mean_or_half(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        0.5
    } else {
        labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64
    }
}

pub fn one_aug(
    reg1: &dyn OneContextOracle,
    space: AugSpace,
    data: &OneContextDataset,
    eps: f64,
    delta: f64,
) -> Result<Predictor1> {
    let mut special: [Vec<bool>; 2] = [Vec::new(), Vec::new()];
    let mut interior = Vec::new();
    for &(x, y) in &data.samples {
        match stratum(space, x) {
            Some(b) => special[b].push(y),
            None => interior.push((x, y)),
        }
    }
    let r0 = mean_or_half(&special[0]);
    let r1 = mean_or_half(&special[1]);
    let inner = if interior.is_empty() {
        Predictor1::constant(0.5)
    } else {
        let sub = OneContextDataset {
            samples: interior,
            truth: data.truth.as_ref().and_then(|t| interior_truth_one(t, space)),
        };
        reg1.fit_one(&sub, eps / 6.0, delta / 6.0)?
    };
    Ok(Predictor1::new(Provenance::OneAug, move |x| match stratum(space, x) {
        Some(0) => r0,
        Some(_) => r1,
        None => inner.eval(x),
    }))
}

fn interior_truth_one(truth: &LabelTruth, space: AugSpace) -> Option<LabelTruth> {
    let LabelTruth::Latent(t) = truth else { return None };
    let LatentTarget::One(f) = &t.target else { return None };
    let law = match &t.law {
        Some(ContextLaw::One(p)) => {
            let mass: f64 = p[..space.base_obs].iter().sum();
            (mass > 0.0).then(|| ContextLaw::One(p[..space.base_obs].iter().map(|v| v / mass).collect()))
        }
        _ => None,
    };
    Some(LabelTruth::Latent(Arc::new(LatentTruth {
        decoder: t.decoder[..space.base_obs].to_vec(),
        num_states: space.base_states,
        target: LatentTarget::One(f[..space.base_states].to_vec()),
        law,
    })))
}

/// Cell of an augmented observation: 0 and 1 for the specials, 2 for interior.
fn cell(space: AugSpace, x: Obs) -> usize {
    stratum(space, x).unwrap_or(2)
}

pub fn two_aug(
    reg2: &dyn TwoContextOracle,
    space: AugSpace,
    data: &TwoContextDataset,
    eps: f64,
    delta: f64,
) -> Result<Predictor2> {
    let pad = data
        .samples
        .iter()
        .flat_map(|&(a, b, _)| [a, b])
        .filter(|&x| !space.is_special_obs(x))
        .min()
        .unwrap_or(0);
    let sub = move |x: Obs| if space.is_special_obs(x) { pad } else { x };
    let mut buckets: Vec<Vec<(Obs, Obs, bool)>> = vec![Vec::new(); 9];
    for &(x1, x2, y) in &data.samples {
        buckets[cell(space, x1) * 3 + cell(space, x2)].push((sub(x1), sub(x2), y));
    }
    let mut fitted = Vec::with_capacity(9);
    for (c, samples) in buckets.into_iter().enumerate() {
        if samples.is_empty() {
            fitted.push(Predictor2::constant(0.5));
            continue;
        }
        let truth = data.truth.as_ref().and_then(|t| cell_truth(t, space, c / 3, c % 3, pad));
        let d = TwoContextDataset { samples, truth };
        fitted.push(reg2.fit_two(&d, eps / 18.0, delta / 18.0)?);
    }
    Ok(Predictor2::new(Provenance::TwoAug, move |x1, x2| {
        let c = cell(space, x1) * 3 + cell(space, x2);
        fitted[c].eval(sub(x1), sub(x2))
    }))
}

fn cell_truth(truth: &LabelTruth, space: AugSpace, c1: usize, c2: usize, pad: Obs) -> Option<LabelTruth> {
    let LabelTruth::Latent(t) = truth else { return None };
    let LatentTarget::Two(f) = &t.target else { return None };
    let s = space.base_states;
    let lift = |c: usize, st: usize| match c {
        0 => space.zero_state(),
        1 => space.one_state(),
        _ => st,
    };
    let target = (0..s).map(|s1| (0..s).map(|s2| f[lift(c1, s1)][lift(c2, s2)]).collect()).collect();
    let law = match &t.law {
        Some(ContextLaw::Two(p)) => {
            let n = space.base_obs;
            let mut q = vec![vec![0.0; n]; n];
            let mut mass = 0.0;
            for (x1, row) in p.iter().enumerate() {
                for (x2, &v) in row.iter().enumerate() {
                    if v > 0.0 && cell(space, x1) == c1 && cell(space, x2) == c2 {
                        let a = if space.is_special_obs(x1) { pad } else { x1 };
                        let b = if space.is_special_obs(x2) { pad } else { x2 };
                        q[a][b] += v;
                        mass += v;
                    }
                }
            }
            (mass > 0.0).then(|| {
                for row in q.iter_mut() {
                    for v in row.iter_mut() {
                        *v /= mass;
                    }
                }
                ContextLaw::Two(q)
            })
        }
        _ => None,
    };
    Some(LabelTruth::Latent(Arc::new(LatentTruth {
        decoder: t.decoder[..space.base_obs].to_vec(),
        num_states: s,
        target: LatentTarget::Two(target),
        law,
    })))
}

/// `OneTwo` as an oracle.
#[derive(Clone)]
pub struct OneTwo {
    pub inner: Arc<dyn TwoContextOracle>,
}

impl OneContextOracle for OneTwo {
    fn fit_one(&self, data: &OneContextDataset, eps: f64, delta: f64) -> Result<Predictor1> {
        one_two(self.inner.as_ref(), data, eps, delta)
    }
}

#[derive(Clone)]
pub struct OneAug {
    pub inner: Arc<dyn OneContextOracle>,
    pub space: AugSpace,
}

impl OneContextOracle for OneAug {
    fn fit_one(&self, data: &OneContextDataset, eps: f64, delta: f64) -> Result<Predictor1> {
        one_aug(self.inner.as_ref(), self.space, data, eps, delta)
    }
}

#[derive(Clone)]
pub struct TwoAug {
    pub inner: Arc<dyn TwoContextOracle>,
    pub space: AugSpace,
}

impl TwoContextOracle for TwoAug {
    fn fit_two(&self, data: &TwoContextDataset, eps: f64, delta: f64) -> Result<Predictor2> {
        two_aug(self.inner.as_ref(), self.space, data, eps, delta)
    }
}
