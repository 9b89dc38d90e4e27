//! Horizon-2 environments driven by regression samples. Each episode
//! consumes one sample; running out is an error rather than a reuse.

use std::collections::HashMap;

use rand::Rng as _;

use crate::access::{EpisodicEnv, ResetEnv};
use crate::error::{Error, Result};
use crate::mdp::{Action, Obs};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    First(usize),
    Done,
}

fn exhausted(limit: usize) -> Error {
    Error::DatasetExhausted { needed: limit as u64 + 1, available: limit as u64 }
}

/// Two-context simulator: the second observation is `x2` unless a flip with
/// probability `(a - y)^2` replaces it by the special "0" observation.
pub struct TwoContextSim<'a> {
    samples: &'a [(Obs, Obs, bool)],
    grid: &'a [f64],
    zero: Obs,
    rng: Rng,
    cursor: usize,
    phase: Phase,
}

impl<'a> TwoContextSim<'a> {
    pub fn new(samples: &'a [(Obs, Obs, bool)], grid: &'a [f64], zero: Obs, rng: Rng) -> Self {
        Self { samples, grid, zero, rng, cursor: 0, phase: Phase::Idle }
    }
}

impl EpisodicEnv for TwoContextSim<'_> {
    fn horizon(&self) -> usize {
        2
    }
    fn num_actions(&self) -> usize {
        self.grid.len()
    }
    fn begin_episode(&mut self) -> Result<Obs> {
        let i = self.cursor;
        let Some(&(x1, _, _)) = self.samples.get(i) else {
            return Err(exhausted(self.samples.len()));
        };
        self.cursor += 1;
        self.phase = Phase::First(i);
        Ok(x1)
    }
    fn act(&mut self, a: Action) -> Result<Option<Obs>> {
        match self.phase {
            Phase::Idle => Err(Error::NoActiveEpisode),
            Phase::Done => {
                self.phase = Phase::Idle;
                Err(Error::HorizonExceeded)
            }
            Phase::First(i) => {
                let (_, x2, y) = self.samples[i];
                let flip = (self.grid[a] - f64::from(u8::from(y))).powi(2);
                self.phase = Phase::Done;
                Ok(Some(if self.rng.random::<f64>() < flip { self.zero } else { x2 }))
            }
        }
    }
    fn episodes(&self) -> u64 {
        self.cursor as u64
    }
}

/// One-context simulator: the second observation is "0" with probability
/// `(a - y)^2` and "1" otherwise.
pub struct OneContextSim<'a> {
    samples: &'a [(Obs, bool)],
    grid: &'a [f64],
    zero: Obs,
    one: Obs,
    rng: Rng,
    cursor: usize,
    phase: Phase,
}

impl<'a> OneContextSim<'a> {
    pub fn new(samples: &'a [(Obs, bool)], grid: &'a [f64], zero: Obs, one: Obs, rng: Rng) -> Self {
        Self { samples, grid, zero, one, rng, cursor: 0, phase: Phase::Idle }
    }
}

impl EpisodicEnv for OneContextSim<'_> {
    fn horizon(&self) -> usize {
        2
    }
    fn num_actions(&self) -> usize {
        self.grid.len()
    }
    fn begin_episode(&mut self) -> Result<Obs> {
        let i = self.cursor;
        let Some(&(x, _)) = self.samples.get(i) else {
            return Err(exhausted(self.samples.len()));
        };
        self.cursor += 1;
        self.phase = Phase::First(i);
        Ok(x)
    }
    fn act(&mut self, a: Action) -> Result<Option<Obs>> {
        match self.phase {
            Phase::Idle => Err(Error::NoActiveEpisode),
            Phase::Done => {
                self.phase = Phase::Idle;
                Err(Error::HorizonExceeded)
            }
            Phase::First(i) => {
                let y = f64::from(u8::from(self.samples[i].1));
                let flip = (self.grid[a] - y).powi(2);
                self.phase = Phase::Done;
                Ok(Some(if self.rng.random::<f64>() < flip { self.zero } else { self.one }))
            }
        }
    }
    fn episodes(&self) -> u64 {
        self.cursor as u64
    }
}

/// Reset-access simulator for noiseless labels. Episodes and initial resets
/// consume samples; a reset at `x` reuses the label of an earlier sample at
/// `x`, so only registered contexts can be revisited.
pub struct NoiselessResetSim<'a> {
    samples: &'a [(Obs, bool)],
    grid: &'a [f64],
    zero: Obs,
    one: Obs,
    rng: Rng,
    cursor: usize,
    seen: HashMap<Obs, bool>,
    phase: Phase,
    resets: u64,
}

impl<'a> NoiselessResetSim<'a> {
    /// Fails if two samples share a context but disagree on the label.
    pub fn new(samples: &'a [(Obs, bool)], grid: &'a [f64], zero: Obs, one: Obs, rng: Rng) -> Result<Self> {
        let mut labels: HashMap<Obs, bool> = HashMap::new();
        for &(x, y) in samples {
            if *labels.entry(x).or_insert(y) != y {
                return Err(Error::NoiselessViolation { obs: x });
            }
        }
        Ok(Self { samples, grid, zero, one, rng, cursor: 0, seen: HashMap::new(), phase: Phase::Idle, resets: 0 })
    }

    fn consume(&mut self) -> Result<Obs> {
        let i = self.cursor;
        let Some(&(x, y)) = self.samples.get(i) else {
            return Err(exhausted(self.samples.len()));
        };
        self.cursor += 1;
        self.seen.insert(x, y);
        Ok(x)
    }

    fn second(&mut self, a: Action, y: bool) -> Obs {
        let flip = (self.grid[a] - f64::from(u8::from(y))).powi(2);
        if self.rng.random::<f64>() < flip {
            self.zero
        } else {
            self.one
        }
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }
}

impl EpisodicEnv for NoiselessResetSim<'_> {
    fn horizon(&self) -> usize {
        2
    }
    fn num_actions(&self) -> usize {
        self.grid.len()
    }
    fn begin_episode(&mut self) -> Result<Obs> {
        let x = self.consume()?;
        self.phase = Phase::First(self.cursor - 1);
        Ok(x)
    }
    fn act(&mut self, a: Action) -> Result<Option<Obs>> {
        match self.phase {
            Phase::Idle => Err(Error::NoActiveEpisode),
            Phase::Done => {
                self.phase = Phase::Idle;
                Err(Error::HorizonExceeded)
            }
            Phase::First(i) => {
                let y = self.samples[i].1;
                self.phase = Phase::Done;
                Ok(Some(self.second(a, y)))
            }
        }
    }
    fn episodes(&self) -> u64 {
        self.cursor as u64
    }
}

impl ResetEnv for NoiselessResetSim<'_> {
    fn reset_initial(&mut self) -> Result<Obs> {
        self.resets += 1;
        self.consume()
    }
    fn reset_step(&mut self, h: usize, x: Obs, a: Action) -> Result<Obs> {
        self.resets += 1;
        if h >= 1 {
            return Err(Error::HorizonExceeded);
        }
        let y = *self.seen.get(&x).ok_or(Error::UnregisteredObservation { layer: h, obs: x })?;
        Ok(self.second(a, y))
    }
    fn reset_queries(&self) -> u64 {
        self.resets
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn each_episode_consumes_one_sample() {
        let samples = vec![(0, 1, true), (1, 0, false)];
        let grid = [0.0, 1.0];
        let mut sim = TwoContextSim::new(&samples, &grid, 2, Seed(1).rng());
        assert_eq!(sim.begin_episode().unwrap(), 0);
        // Action 1.0 matches y = 1, so no flip.
        assert_eq!(sim.act(1).unwrap(), Some(1));
        assert_eq!(sim.begin_episode().unwrap(), 1);
        // Action 1.0 against y = 0 always flips.
        assert_eq!(sim.act(1).unwrap(), Some(2));
        assert!(matches!(sim.begin_episode(), Err(Error::DatasetExhausted { .. })));
    }

    #[test]
    fn noiseless_resets_need_a_prior_visit() {
        let samples = vec![(3, true), (4, false)];
        let grid = [0.0, 1.0];
        let mut sim = NoiselessResetSim::new(&samples, &grid, 10, 11, Seed(2).rng()).unwrap();
        assert!(matches!(sim.reset_step(0, 3, 0), Err(Error::UnregisteredObservation { .. })));
        assert_eq!(sim.reset_initial().unwrap(), 3);
        assert_eq!(sim.reset_step(0, 3, 1).unwrap(), 11);
        assert_eq!(sim.reset_step(0, 3, 0).unwrap(), 10);
    }

    #[test]
    fn conflicting_noiseless_labels_are_rejected() {
        let samples = vec![(3, true), (3, false)];
        let grid = [0.0, 1.0];
        let err = NoiselessResetSim::new(&samples, &grid, 10, 11, Seed(2).rng()).err().unwrap();
        assert_eq!(err, Error::NoiselessViolation { obs: 3 });
    }
}
