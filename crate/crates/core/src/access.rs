//! Sampling interfaces to an unknown Block MDP.
//!
//! Episodic access only allows full trajectories from the start state. Reset
//! access additionally allows restarting from any previously observed
//! observation.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mdp::{Action, BlockMdp, Obs, State};
use crate::policy::Policy;
use crate::rng::{Rng, Seed};

pub trait EpisodicEnv {
    fn horizon(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// Start a fresh episode and return the layer-0 observation. Abandons any
    /// episode in progress.
    fn begin_episode(&mut self) -> Result<Obs>;
    /// Take an action. Returns the next observation, or `None` once the last
    /// layer has been acted on.
    fn act(&mut self, a: Action) -> Result<Option<Obs>>;
    fn episodes(&self) -> u64;
}

pub trait ResetEnv: EpisodicEnv {
    /// Draw a fresh layer-0 observation without starting an episode.
    fn reset_initial(&mut self) -> Result<Obs>;
    /// Restart from a previously seen layer-`h` observation, act, and observe
    /// layer `h + 1`.
    fn reset_step(&mut self, h: usize, x: Obs, a: Action) -> Result<Obs>;
    fn reset_queries(&self) -> u64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub observations: Vec<Obs>,
    pub actions: Vec<Action>,
    latents: Option<Vec<State>>,
}

impl Trajectory {
    /// Latent states, available only from simulators. Verification only.
    pub fn latents(&self) -> Option<&[State]> {
        self.latents.as_deref()
    }
}

/// Start an episode and follow `policy` until layer `layer` is observed.
/// The episode is left open.
pub fn roll_in<E, R>(env: &mut E, policy: &Policy, layer: usize, rng: &mut R) -> Result<Vec<Obs>>
where
    E: EpisodicEnv + ?Sized,
    R: rand::Rng + ?Sized,
{
    let a_count = env.num_actions();
    let mut obs = Vec::with_capacity(layer + 1);
    obs.push(env.begin_episode()?);
    for h in 0..layer {
        let a = policy.sample_action(h, obs[h], a_count, rng);
        match env.act(a)? {
            Some(x) => obs.push(x),
            None => return Err(Error::HorizonExceeded),
        }
    }
    Ok(obs)
}

/// Run a full episode under `policy`.
pub fn rollout<E, R>(env: &mut E, policy: &Policy, rng: &mut R) -> Result<Trajectory>
where
    E: EpisodicEnv + ?Sized,
    R: rand::Rng + ?Sized,
{
    let a_count = env.num_actions();
    let mut observations = vec![env.begin_episode()?];
    let mut actions = Vec::new();
    for h in 0.. {
        let a = policy.sample_action(h, observations[h], a_count, rng);
        actions.push(a);
        match env.act(a)? {
            Some(x) => observations.push(x),
            None => break,
        }
    }
    Ok(Trajectory { observations, actions, latents: None })
}

#[derive(Clone, Copy, Debug)]
enum Cursor {
    Idle,
    At { layer: usize, state: State },
    Finished,
}

/// Episodic sampling from a known model, hiding its latent states.
#[derive(Clone, Debug)]
pub struct EpisodicAccess {
    mdp: Arc<BlockMdp>,
    rng: Rng,
    episodes: u64,
    cursor: Cursor,
}

impl EpisodicAccess {
    pub fn new(mdp: Arc<BlockMdp>, seed: Seed) -> Self {
        Self { mdp, rng: seed.stream("environment"), episodes: 0, cursor: Cursor::Idle }
    }

    pub fn model(&self) -> &Arc<BlockMdp> {
        &self.mdp
    }

    /// Full episode including the latent trace.
    pub fn sample_episode<R: rand::Rng + ?Sized>(&mut self, policy: &Policy, rng: &mut R) -> Result<Trajectory> {
        let a_count = self.num_actions();
        let mut observations = vec![self.begin_episode()?];
        let mut latents = vec![self.current_state()];
        let mut actions = Vec::new();
        for h in 0.. {
            let a = policy.sample_action(h, observations[h], a_count, rng);
            actions.push(a);
            match self.act(a)? {
                Some(x) => {
                    observations.push(x);
                    latents.push(self.current_state());
                }
                None => break,
            }
        }
        Ok(Trajectory { observations, actions, latents: Some(latents) })
    }

    fn current_state(&self) -> State {
        match self.cursor {
            Cursor::At { state, .. } => state,
            _ => unreachable!("no state outside an episode"),
        }
    }
}

impl EpisodicEnv for EpisodicAccess {
    fn horizon(&self) -> usize {
        self.mdp.horizon()
    }
    fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }
    fn begin_episode(&mut self) -> Result<Obs> {
        self.episodes += 1;
        let s = self.mdp.sample_initial_state(&mut self.rng);
        self.cursor = Cursor::At { layer: 0, state: s };
        Ok(self.mdp.sample_observation(0, s, &mut self.rng))
    }
    fn act(&mut self, a: Action) -> Result<Option<Obs>> {
        if a >= self.mdp.num_actions() {
            return Err(Error::InvalidParameter(format!("action {a} out of range")));
        }
        match self.cursor {
            Cursor::Idle => Err(Error::NoActiveEpisode),
            Cursor::Finished => Err(Error::HorizonExceeded),
            Cursor::At { layer, .. } if layer + 1 == self.mdp.horizon() => {
                self.cursor = Cursor::Finished;
                Ok(None)
            }
            Cursor::At { layer, state } => {
                let next = self.mdp.sample_next_state(layer, state, a, &mut self.rng);
                self.cursor = Cursor::At { layer: layer + 1, state: next };
                Ok(Some(self.mdp.sample_observation(layer + 1, next, &mut self.rng)))
            }
        }
    }
    fn episodes(&self) -> u64 {
        self.episodes
    }
}

/// Episodic access plus resets to any observation seen so far.
#[derive(Clone, Debug)]
pub struct ResetAccess {
    inner: EpisodicAccess,
    seen: Vec<HashSet<Obs>>,
    resets: u64,
}

impl ResetAccess {
    pub fn new(mdp: Arc<BlockMdp>, seed: Seed) -> Self {
        let h = mdp.horizon();
        Self { inner: EpisodicAccess::new(mdp, seed), seen: vec![HashSet::new(); h], resets: 0 }
    }

    pub fn model(&self) -> &Arc<BlockMdp> {
        self.inner.model()
    }

    pub fn is_registered(&self, h: usize, x: Obs) -> bool {
        self.seen.get(h).is_some_and(|s| s.contains(&x))
    }

    fn register(&mut self, h: usize, x: Obs) {
        self.seen[h].insert(x);
    }
}

impl EpisodicEnv for ResetAccess {
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }
    fn begin_episode(&mut self) -> Result<Obs> {
        let x = self.inner.begin_episode()?;
        self.register(0, x);
        Ok(x)
    }
    fn act(&mut self, a: Action) -> Result<Option<Obs>> {
        let layer = match self.inner.cursor {
            Cursor::At { layer, .. } => layer,
            _ => 0,
        };
        let next = self.inner.act(a)?;
        if let Some(x) = next {
            self.register(layer + 1, x);
        }
        Ok(next)
    }
    fn episodes(&self) -> u64 {
        self.inner.episodes()
    }
}

impl ResetEnv for ResetAccess {
    fn reset_initial(&mut self) -> Result<Obs> {
        self.resets += 1;
        let m = &self.inner.mdp;
        let s = m.sample_initial_state(&mut self.inner.rng);
        let x = m.sample_observation(0, s, &mut self.inner.rng);
        self.register(0, x);
        Ok(x)
    }

    fn reset_step(&mut self, h: usize, x: Obs, a: Action) -> Result<Obs> {
        let m = self.inner.mdp.clone();
        if h + 1 >= m.horizon() {
            return Err(Error::HorizonExceeded);
        }
        if a >= m.num_actions() {
            return Err(Error::InvalidParameter(format!("action {a} out of range")));
        }
        if !self.is_registered(h, x) {
            return Err(Error::UnregisteredObservation { layer: h, obs: x });
        }
        self.resets += 1;
        let s = m.decoder()[x];
        let next = m.sample_next_state(h, s, a, &mut self.inner.rng);
        let y = m.sample_observation(h + 1, next, &mut self.inner.rng);
        self.register(h + 1, y);
        Ok(y)
    }

    fn reset_queries(&self) -> u64 {
        self.resets
    }
}
