//! Seeded generators for test environments and regression datasets.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::analysis::max_reach_table;
use crate::error::{Error, Result};
use crate::mdp::{BlockMdp, LatentModel, Obs, ObservationModel, State};
use crate::reg_from_rl::gadget::{check_realizable, gadget_mdp};
use crate::regression::truth::{ContextLaw, LabelTruth, LatentTarget, LatentTruth};
use crate::regression::{ConceptClass, OneContextDataset, TwoContextDataset};
use crate::rng::{sample_index, Rng, Seed};

pub const MAX_GENERATION_ATTEMPTS: usize = 10_000;

/// Latent state of the combination lock that is still on track.
pub const LOCK_GOOD: State = 0;
pub const LOCK_BAD: State = 1;

fn dirichlet(alpha: f64, len: usize, rng: &mut Rng) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive concentration");
    let mut v: Vec<f64> = (0..len).map(|_| g.sample(rng)).collect();
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        // All draws underflowed; fall back to a point mass.
        v.iter_mut().for_each(|p| *p = 0.0);
        v[rng.random_range(0..len)] = 1.0;
    } else {
        v.iter_mut().for_each(|p| *p /= total);
    }
    v
}

/// A surjective random map `X -> S`.
fn random_decoder(num_obs: usize, num_states: usize, rng: &mut Rng) -> Vec<State> {
    let mut d: Vec<State> = (0..num_obs).map(|x| if x < num_states { x } else { rng.random_range(0..num_states) }).collect();
    d.shuffle(rng);
    d
}

/// `φ*` followed by `decoys` random decoders that each differ from it
/// somewhere. `shuffle` produces a candidate decoy.
fn class_with_decoys(
    truth: Vec<State>,
    num_states: usize,
    decoys: usize,
    rng: &mut Rng,
    mut shuffle: impl FnMut(&[State], &mut Rng) -> Vec<State>,
) -> Result<ConceptClass> {
    let mut members = vec![truth.clone()];
    let mut attempts = 0;
    while members.len() < decoys + 1 {
        attempts += 1;
        if attempts > MAX_GENERATION_ATTEMPTS {
            return Err(Error::GenerationTimeout { attempts });
        }
        let d = shuffle(&truth, rng);
        if d != truth {
            members.push(d);
        }
    }
    ConceptClass::new(members, num_states, 0)
}

fn block_emission(decoder: &[State], s: State, weights: Option<Vec<f64>>) -> Vec<f64> {
    let cell: Vec<Obs> = (0..decoder.len()).filter(|&x| decoder[x] == s).collect();
    let mut row = vec![0.0; decoder.len()];
    match weights {
        Some(w) => cell.iter().zip(w).for_each(|(&x, p)| row[x] = p),
        None => cell.iter().for_each(|&x| row[x] = 1.0 / cell.len() as f64),
    }
    row
}

/// Two-state combination lock. Playing the hidden action from the good
/// state stays good with probability `1 - noise`; everything else falls
/// into the absorbing bad state. Each state emits uniformly over its own
/// `emissions_per_state` observations.
pub fn make_lock(
    horizon: usize,
    num_actions: usize,
    noise: f64,
    emissions_per_state: usize,
    decoys: usize,
    seed: Seed,
) -> Result<(BlockMdp, Arc<ConceptClass>)> {
    if !(0.0..0.5).contains(&noise) {
        return Err(Error::InvalidParameter(format!("lock noise {noise} outside [0, 1/2)")));
    }
    if horizon == 0 || num_actions == 0 || emissions_per_state == 0 {
        return Err(Error::InvalidParameter("lock sizes must be positive".into()));
    }
    let mut rng = seed.stream("lock");
    let code: Vec<usize> = (0..horizon.saturating_sub(1)).map(|_| rng.random_range(0..num_actions)).collect();
    let transitions = code
        .iter()
        .map(|&right| {
            let good = (0..num_actions)
                .map(|a| if a == right { vec![1.0 - noise, noise] } else { vec![0.0, 1.0] })
                .collect();
            vec![good, vec![vec![0.0, 1.0]; num_actions]]
        })
        .collect();
    let latent = LatentModel::new(horizon, 2, num_actions, vec![1.0, 0.0], transitions)?;
    let mut decoder: Vec<State> = (0..2 * emissions_per_state).map(|x| x / emissions_per_state).collect();
    decoder.shuffle(&mut rng);
    let emissions =
        (0..horizon).map(|_| (0..2).map(|s| block_emission(&decoder, s, None)).collect()).collect();
    let obs = ObservationModel::new(2, decoder.len(), emissions, decoder.clone())?;
    let class = Arc::new(class_with_decoys(decoder, 2, decoys, &mut rng, |d, rng| {
        let mut p = d.to_vec();
        p.shuffle(rng);
        p
    })?);
    let mdp = BlockMdp::new(latent, obs)?.with_concept_class(class.clone())?;
    Ok((mdp, class))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSizes {
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
    pub obs: usize,
}

/// Random Block MDP whose every latent state at layers `1..H` can be
/// reached with probability at least `min_reach`. Layer 0 is exempt since
/// no policy influences it.
///
/// `min_reach = 1` with `actions >= states` takes a deterministic path:
/// action `a` moves to state `a mod S`.
pub fn make_random_block(sizes: BlockSizes, min_reach: f64, decoys: usize, seed: Seed) -> Result<(BlockMdp, Arc<ConceptClass>)> {
    let BlockSizes { horizon, states, actions, obs } = sizes;
    if horizon == 0 || states == 0 || actions == 0 {
        return Err(Error::InvalidParameter("sizes must be positive".into()));
    }
    if obs < states {
        return Err(Error::InvalidParameter(format!("{obs} observations cannot cover {states} states")));
    }
    if !(min_reach > 0.0 && min_reach <= 1.0) {
        return Err(Error::InvalidParameter(format!("min_reach {min_reach} outside (0, 1]")));
    }
    let mut rng = seed.stream("random-block");
    let decoder = random_decoder(obs, states, &mut rng);
    let emission_layer = |rng: &mut Rng| -> Vec<Vec<f64>> {
        (0..states)
            .map(|s| {
                let size = decoder.iter().filter(|&&d| d == s).count();
                block_emission(&decoder, s, Some(dirichlet(1.0, size, rng)))
            })
            .collect()
    };
    let deterministic = min_reach >= 1.0 && actions >= states;
    let mut attempts = 0;
    let mdp = loop {
        attempts += 1;
        if attempts > MAX_GENERATION_ATTEMPTS {
            return Err(Error::GenerationTimeout { attempts: attempts - 1 });
        }
        let initial = dirichlet(1.0, states, &mut rng);
        let transitions = (0..horizon - 1)
            .map(|_| {
                (0..states)
                    .map(|_| {
                        (0..actions)
                            .map(|a| {
                                if deterministic {
                                    let mut row = vec![0.0; states];
                                    row[a % states] = 1.0;
                                    row
                                } else {
                                    dirichlet(0.5, states, &mut rng)
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let emissions = (0..horizon).map(|_| emission_layer(&mut rng)).collect();
        let latent = LatentModel::new(horizon, states, actions, initial, transitions)?;
        let model = BlockMdp::new(latent, ObservationModel::new(states, obs, emissions, decoder.clone())?)?;
        let reach = max_reach_table(&model);
        if reach.iter().skip(1).flatten().all(|&r| r >= min_reach - 1e-12) {
            break model;
        }
    };
    let class = Arc::new(class_with_decoys(decoder, states, decoys, &mut rng, |_, rng| {
        random_decoder(obs, states, rng)
    })?);
    Ok((mdp.with_concept_class(class.clone())?, class))
}

/// Joint law `p(s1, s2) q1(x1 | s1) q2(x2 | s2)` from its factors.
pub fn factored_joint(decoder: &[State], pair: &[Vec<f64>], first: &[Vec<f64>], second: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let nx = decoder.len();
    (0..nx)
        .map(|x1| {
            (0..nx)
                .map(|x2| {
                    let (s1, s2) = (decoder[x1], decoder[x2]);
                    pair[s1][s2] * first[s1][x1] * second[s2][x2]
                })
                .collect()
        })
        .collect()
}

/// A random realizable joint law over `X x X` for `decoder`.
pub fn random_realizable_joint(decoder: &[State], num_states: usize, seed: Seed) -> Vec<Vec<f64>> {
    let mut rng = seed.stream("joint");
    let flat = dirichlet(1.0, num_states * num_states, &mut rng);
    let pair: Vec<Vec<f64>> = flat.chunks(num_states).map(<[f64]>::to_vec).collect();
    let cond = |rng: &mut Rng| -> Vec<Vec<f64>> {
        (0..num_states)
            .map(|s| {
                let size = decoder.iter().filter(|&&d| d == s).count();
                block_emission(decoder, s, Some(dirichlet(1.0, size, rng)))
            })
            .collect()
    };
    let first = cond(&mut rng);
    let second = cond(&mut rng);
    factored_joint(decoder, &pair, &first, &second)
}

/// Random surjective decoder, exposed for building regression instances.
pub fn random_surjective_decoder(num_obs: usize, num_states: usize, seed: Seed) -> Vec<State> {
    random_decoder(num_obs, num_states, &mut seed.stream("decoder"))
}

/// `n` i.i.d. samples `x ~ law`, `y ~ Ber(g(φ*(x)))`, with the latent truth
/// and law attached.
pub fn one_context_instance(decoder: &[State], num_states: usize, g: &[f64], law: &[f64], n: usize, seed: Seed) -> Result<OneContextDataset> {
    if g.len() != num_states || law.len() != decoder.len() {
        return Err(Error::InvalidParameter("target or law has the wrong size".into()));
    }
    let mut rng = seed.stream("one-context");
    let samples = (0..n)
        .map(|_| {
            let x = sample_index(law, &mut rng);
            (x, rng.random::<f64>() < g[decoder[x]])
        })
        .collect();
    Ok(OneContextDataset::new(samples).with_truth(LabelTruth::Latent(Arc::new(LatentTruth {
        decoder: decoder.to_vec(),
        num_states,
        target: LatentTarget::One(g.to_vec()),
        law: Some(ContextLaw::One(law.to_vec())),
    }))))
}

/// `n` i.i.d. samples `(x1, x2) ~ joint`, `y ~ Ber(f(φ*(x1), φ*(x2)))`.
/// The joint law must factor through the decoder.
pub fn two_context_instance(
    decoder: &[State],
    num_states: usize,
    f: &[Vec<f64>],
    joint: &[Vec<f64>],
    n: usize,
    seed: Seed,
) -> Result<TwoContextDataset> {
    check_realizable(joint, decoder, num_states)?;
    let nx = decoder.len();
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    let mut rng = seed.stream("two-context");
    let samples = (0..n)
        .map(|_| {
            let k = sample_index(&flat, &mut rng);
            let (x1, x2) = (k / nx, k % nx);
            (x1, x2, rng.random::<f64>() < f[decoder[x1]][decoder[x2]])
        })
        .collect();
    Ok(TwoContextDataset::new(samples).with_truth(LabelTruth::Latent(Arc::new(LatentTruth {
        decoder: decoder.to_vec(),
        num_states,
        target: LatentTarget::Two(f.to_vec()),
        law: Some(ContextLaw::Two(joint.to_vec())),
    }))))
}

/// `f(s1, s2) = 1[s1 = s2]`.
pub fn equality_target(num_states: usize) -> Vec<Vec<f64>> {
    (0..num_states).map(|a| (0..num_states).map(|b| f64::from(u8::from(a == b))).collect()).collect()
}

/// Environment description as it appears in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Lock {
        horizon: usize,
        actions: usize,
        #[serde(default)]
        noise: f64,
        emissions_per_state: usize,
        #[serde(default)]
        decoys: usize,
    },
    RandomBlock {
        horizon: usize,
        states: usize,
        actions: usize,
        obs: usize,
        min_reach: f64,
        #[serde(default)]
        decoys: usize,
    },
    /// The two-context gadget for the equality target on a random realizable law.
    Gadget {
        states: usize,
        obs: usize,
        eps_a: f64,
    },
}

impl EnvSpec {
    pub fn build(&self, seed: Seed) -> Result<(Arc<BlockMdp>, Arc<ConceptClass>)> {
        match *self {
            EnvSpec::Lock { horizon, actions, noise, emissions_per_state, decoys } => {
                let (m, c) = make_lock(horizon, actions, noise, emissions_per_state, decoys, seed)?;
                Ok((Arc::new(m), c))
            }
            EnvSpec::RandomBlock { horizon, states, actions, obs, min_reach, decoys } => {
                let (m, c) = make_random_block(BlockSizes { horizon, states, actions, obs }, min_reach, decoys, seed)?;
                Ok((Arc::new(m), c))
            }
            EnvSpec::Gadget { states, obs, eps_a } => {
                if obs < states || states == 0 {
                    return Err(Error::InvalidParameter("gadget needs at least one observation per state".into()));
                }
                let decoder = random_surjective_decoder(obs, states, seed);
                let joint = random_realizable_joint(&decoder, states, seed);
                let m = gadget_mdp(&decoder, states, &equality_target(states), &joint, eps_a)?;
                let base = ConceptClass::new(vec![decoder], states, 0)?;
                let class = Arc::new(base.augmented().into_class());
                Ok((Arc::new(m.with_concept_class(class.clone())?), class))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{exact_visitation, max_reach};
    use crate::policy::Policy;

    #[test]
    fn noiseless_lock_is_fully_reachable() {
        let (m, _) = make_lock(5, 3, 0.0, 2, 4, Seed(1)).unwrap();
        assert!((max_reach(&m, 4, LOCK_GOOD).0 - 1.0).abs() < 1e-12);
        let d = exact_visitation(&m, &Policy::uniform());
        assert!((d.state(4, LOCK_GOOD) - 3f64.powi(-4)).abs() < 1e-12);
    }

    #[test]
    fn lock_reach_shrinks_with_noise() {
        let mut last = 1.0;
        for noise in [0.0, 0.1, 0.3, 0.49] {
            let (m, _) = make_lock(4, 2, noise, 1, 0, Seed(2)).unwrap();
            let r = max_reach(&m, 3, LOCK_GOOD).0;
            assert!((r - (1.0 - noise).powi(3)).abs() < 1e-12);
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn random_block_meets_its_certificate_and_is_reproducible() {
        let sizes = BlockSizes { horizon: 4, states: 3, actions: 2, obs: 12 };
        let (a, class) = make_random_block(sizes, 0.15, 49, Seed(9)).unwrap();
        let (b, _) = make_random_block(sizes, 0.15, 49, Seed(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(class.len(), 50);
        for layer in max_reach_table(&a).iter().skip(1) {
            assert!(layer.iter().all(|&r| r >= 0.15 - 1e-12));
        }
        for d in class.members().iter().skip(1) {
            assert_ne!(d.as_slice(), class.ground_truth());
        }
    }

    #[test]
    fn deterministic_path_reaches_everything_surely() {
        let sizes = BlockSizes { horizon: 3, states: 3, actions: 3, obs: 6 };
        let (m, _) = make_random_block(sizes, 1.0, 0, Seed(5)).unwrap();
        for layer in max_reach_table(&m).iter().skip(1) {
            assert!(layer.iter().all(|&r| (r - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_target_gives_zero_labels() {
        let decoder = vec![0, 1, 1];
        let d = one_context_instance(&decoder, 2, &[0.0, 0.0], &[0.2, 0.3, 0.5], 500, Seed(1)).unwrap();
        assert!(d.samples.iter().all(|&(_, y)| !y));
    }

    #[test]
    fn product_laws_are_realizable() {
        let decoder = vec![0, 1, 0, 1];
        let p = [0.1, 0.2, 0.3, 0.4];
        let joint: Vec<Vec<f64>> = p.iter().map(|a| p.iter().map(|b| a * b).collect()).collect();
        assert!(two_context_instance(&decoder, 2, &equality_target(2), &joint, 10, Seed(1)).is_ok());
    }
}
