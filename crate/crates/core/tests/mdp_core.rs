use std::sync::Arc;

use proptest::prelude::*;
use rfcover::access::{rollout, EpisodicAccess, EpisodicEnv, ResetAccess, ResetEnv};
use rfcover::envs::{make_lock, make_random_block, BlockSizes};
use rfcover::mdp::{LatentModel, ObservationModel};
use rfcover::{BlockMdp, Error, Policy, Seed};

fn two_state(initial: Vec<f64>) -> rfcover::Result<BlockMdp> {
    let latent = LatentModel::new(2, 2, 1, initial, vec![vec![vec![vec![0.5, 0.5]], vec![vec![0.0, 1.0]]]])?;
    let emissions = vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]; 2];
    BlockMdp::new(latent, ObservationModel::new(2, 2, emissions, vec![0, 1])?)
}

#[test]
fn row_sums_beyond_the_window_are_rejected() {
    assert!(matches!(two_state(vec![0.5, 0.51]), Err(Error::InvalidDistribution { .. })));
    let m = two_state(vec![0.5, 0.5 + 5e-7]).unwrap();
    assert!((m.initial().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn emissions_outside_the_decoder_block_are_rejected() {
    let emissions = vec![vec![vec![0.5, 0.5], vec![0.0, 1.0]]];
    assert!(matches!(ObservationModel::new(2, 2, emissions, vec![0, 1]), Err(Error::InvalidModel(_))));
}

#[test]
fn json_round_trip_preserves_the_model() {
    let (m, _) = make_random_block(BlockSizes { horizon: 3, states: 2, actions: 2, obs: 5 }, 0.1, 3, Seed(4)).unwrap();
    let back = BlockMdp::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back.to_json().unwrap(), m.to_json().unwrap());
}

#[test]
fn episodic_access_counts_episodes_and_stops_at_the_horizon() {
    let (m, _) = make_lock(3, 2, 0.0, 2, 0, Seed(1)).unwrap();
    let mut env = EpisodicAccess::new(Arc::new(m), Seed(2));
    assert!(matches!(env.act(0), Err(Error::NoActiveEpisode)));
    env.begin_episode().unwrap();
    assert!(env.act(0).unwrap().is_some());
    assert!(env.act(0).unwrap().is_some());
    assert!(env.act(0).unwrap().is_none());
    assert_eq!(env.episodes(), 1);
}

#[test]
fn reset_access_only_accepts_emitted_observations() {
    let (m, _) = make_lock(3, 2, 0.0, 2, 0, Seed(1)).unwrap();
    let m = Arc::new(m);
    let mut env = ResetAccess::new(m.clone(), Seed(2));
    let x = env.reset_initial().unwrap();
    let other = (0..m.num_obs()).find(|&y| m.decoder()[y] != m.decoder()[x]).unwrap();
    assert!(matches!(env.reset_step(0, other, 0), Err(Error::UnregisteredObservation { .. })));
    let x1 = env.reset_step(0, x, 0).unwrap();
    assert!(env.is_registered(1, x1));
    assert_eq!(env.reset_queries(), 2);
}

#[test]
fn rollouts_take_one_action_per_layer() {
    let (m, _) = make_lock(4, 3, 0.0, 2, 0, Seed(9)).unwrap();
    let m = Arc::new(m);
    let mut env = EpisodicAccess::new(m.clone(), Seed(3));
    let mut rng = Seed(0).rng();
    let t = rollout(&mut env, &Policy::uniform(), &mut rng).unwrap();
    assert_eq!(t.observations.len(), 4);
    assert_eq!(t.actions.len(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampled_observations_decode_to_the_sampled_state(seed in 0u64..1000) {
        let (m, _) = make_random_block(BlockSizes { horizon: 3, states: 3, actions: 2, obs: 7 }, 0.05, 0, Seed(seed)).unwrap();
        let mut rng = Seed(seed).rng();
        let mut s = m.sample_initial_state(&mut rng);
        for h in 0..3 {
            let x = m.sample_observation(h, s, &mut rng);
            prop_assert_eq!(m.decoder()[x], s);
            if h < 2 {
                s = m.sample_next_state(h, s, 1, &mut rng);
            }
        }
    }
}
