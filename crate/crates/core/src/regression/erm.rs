//! Least-squares ERM over a finite decoder class.
//!
//! For a fixed decoder the minimiser over targets is the per-cell label mean,
//! so ERM reduces to scoring each decoder by its within-cell squared error.
//! Counts are aggregated per observation (or pair) first.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::regression::{
    ConceptClass, OneContextDataset, OneContextOracle, Predictor1, Predictor2, Provenance, TwoContextDataset,
    TwoContextOracle,
};

const TIE_RELATIVE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ErmOracle {
    class: Arc<ConceptClass>,
}

impl ErmOracle {
    pub fn new(class: Arc<ConceptClass>) -> Self {
        Self { class }
    }
    pub fn class(&self) -> &Arc<ConceptClass> {
        &self.class
    }
}

#[derive(Clone, Debug)]
pub struct ErmFit {
    pub index: usize,
    pub loss: f64,
    pub cell_means: Vec<f64>,
}

fn cell_mean(pos: f64, total: f64) -> f64 {
    if total > 0.0 {
        pos / total
    } else {
        0.5
    }
}

fn cell_loss(pos: f64, total: f64) -> f64 {
    let m = cell_mean(pos, total);
    pos * (1.0 - m) * (1.0 - m) + (total - pos) * m * m
}

fn select(losses: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, l) in losses.enumerate() {
        if l < best.1 - TIE_RELATIVE * best.1.abs().max(1.0) || best.1.is_infinite() {
            best = (i, l);
        }
    }
    best
}

/// Per-decoder cumulative squared loss on a one-context dataset.
pub fn one_context_losses(class: &ConceptClass, data: &OneContextDataset) -> Vec<f64> {
    let (counts, _) = one_context_counts(class, data);
    let s = class.num_states();
    class
        .members()
        .iter()
        .map(|phi| {
            let mut cells = vec![(0.0, 0.0); s];
            for (x, &(t, p)) in counts.iter().enumerate() {
                cells[phi[x]].0 += p;
                cells[phi[x]].1 += t;
            }
            cells.iter().map(|&(p, t)| cell_loss(p, t)).sum()
        })
        .collect()
}

fn one_context_counts(class: &ConceptClass, data: &OneContextDataset) -> (Vec<(f64, f64)>, usize) {
    let mut counts = vec![(0.0, 0.0); class.num_obs()];
    for &(x, y) in &data.samples {
        counts[x].0 += 1.0;
        if y {
            counts[x].1 += 1.0;
        }
    }
    (counts, data.samples.len())
}

pub fn erm_one_context(class: &ConceptClass, data: &OneContextDataset) -> Result<ErmFit> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(&(x, _)) = data.samples.iter().find(|(x, _)| *x >= class.num_obs()) {
        return Err(Error::InvalidParameter(format!("observation {x} is outside the class domain")));
    }
    let losses = one_context_losses(class, data);
    let (index, loss) = select(losses.into_iter());
    let (counts, _) = one_context_counts(class, data);
    let phi = class.member(index);
    let mut cells = vec![(0.0, 0.0); class.num_states()];
    for (x, &(t, p)) in counts.iter().enumerate() {
        cells[phi[x]].0 += p;
        cells[phi[x]].1 += t;
    }
    let cell_means = cells.iter().map(|&(p, t)| cell_mean(p, t)).collect();
    Ok(ErmFit { index, loss, cell_means })
}

type PairCounts = Vec<((usize, usize), (f64, f64))>;

fn pair_counts(data: &TwoContextDataset) -> PairCounts {
    let mut map: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
    for &(x1, x2, y) in &data.samples {
        let e = map.entry((x1, x2)).or_insert((0.0, 0.0));
        e.0 += 1.0;
        if y {
            e.1 += 1.0;
        }
    }
    let mut v: PairCounts = map.into_iter().collect();
    v.sort_unstable_by_key(|(k, _)| *k);
    v
}

fn two_context_cells(phi: &[usize], s: usize, counts: &PairCounts) -> Vec<(f64, f64)> {
    let mut cells = vec![(0.0, 0.0); s * s];
    for &((x1, x2), (t, p)) in counts {
        let c = phi[x1] * s + phi[x2];
        cells[c].0 += p;
        cells[c].1 += t;
    }
    cells
}

pub fn two_context_losses(class: &ConceptClass, data: &TwoContextDataset) -> Vec<f64> {
    let counts = pair_counts(data);
    let s = class.num_states();
    class
        .members()
        .iter()
        .map(|phi| two_context_cells(phi, s, &counts).iter().map(|&(p, t)| cell_loss(p, t)).sum())
        .collect()
}

pub fn erm_two_context(class: &ConceptClass, data: &TwoContextDataset) -> Result<ErmFit> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = class.num_obs();
    if let Some(&(x1, x2, _)) = data.samples.iter().find(|(a, b, _)| *a >= n || *b >= n) {
        return Err(Error::InvalidParameter(format!("pair ({x1},{x2}) is outside the class domain")));
    }
    let counts = pair_counts(data);
    let s = class.num_states();
    let (index, loss) = select(
        class
            .members()
            .iter()
            .map(|phi| two_context_cells(phi, s, &counts).iter().map(|&(p, t)| cell_loss(p, t)).sum()),
    );
    let cells = two_context_cells(class.member(index), s, &counts);
    let cell_means = cells.iter().map(|&(p, t)| cell_mean(p, t)).collect();
    Ok(ErmFit { index, loss, cell_means })
}

impl OneContextOracle for ErmOracle {
    fn fit_one(&self, data: &OneContextDataset, _eps: f64, _delta: f64) -> Result<Predictor1> {
        let fit = erm_one_context(&self.class, data)?;
        let phi = self.class.member(fit.index).to_vec();
        let means = fit.cell_means;
        Ok(Predictor1::new(Provenance::Erm { index: fit.index }, move |x| means[phi[x]]))
    }
}

impl TwoContextOracle for ErmOracle {
    fn fit_two(&self, data: &TwoContextDataset, _eps: f64, _delta: f64) -> Result<Predictor2> {
        let fit = erm_two_context(&self.class, data)?;
        let phi = self.class.member(fit.index).to_vec();
        let s = self.class.num_states();
        let means = fit.cell_means;
        Ok(Predictor2::new(Provenance::Erm { index: fit.index }, move |x1, x2| means[phi[x1] * s + phi[x2]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class() -> ConceptClass {
        ConceptClass::new(vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1], vec![0, 0, 1, 1]], 2, 0).unwrap()
    }

    #[test]
    fn picks_the_separating_decoder_with_lowest_index_on_ties() {
        let data = OneContextDataset::new(vec![(0, false), (1, false), (2, true), (3, true)]);
        let fit = erm_one_context(&class(), &data).unwrap();
        assert_eq!(fit.index, 0);
        assert_eq!(fit.loss, 0.0);
        assert_eq!(fit.cell_means, vec![0.0, 1.0]);
    }

    #[test]
    fn losses_match_brute_force() {
        let data = OneContextDataset::new(vec![(0, true), (1, false), (1, true), (2, true), (3, false)]);
        let c = class();
        let losses = one_context_losses(&c, &data);
        for (i, phi) in c.members().iter().enumerate() {
            let mut sums = [0.0; 2];
            let mut counts = [0.0; 2];
            for &(x, y) in &data.samples {
                sums[phi[x]] += y as u8 as f64;
                counts[phi[x]] += 1.0;
            }
            let brute: f64 = data
                .samples
                .iter()
                .map(|&(x, y)| {
                    let m = sums[phi[x]] / counts[phi[x]];
                    (y as u8 as f64 - m).powi(2)
                })
                .sum();
            assert!((brute - losses[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_cells_predict_one_half() {
        let data = TwoContextDataset::new(vec![(0, 0, true)]);
        let fit = erm_two_context(&class(), &data).unwrap();
        assert_eq!(fit.cell_means, vec![1.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert_eq!(erm_one_context(&class(), &OneContextDataset::default()).unwrap_err(), Error::EmptyDataset);
    }
}
