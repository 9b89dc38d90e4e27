use std::sync::Arc;

use proptest::prelude::*;
use rfcover::access::EpisodicAccess;
use rfcover::analysis::{exact_visitation, max_reach, optimize_reward};
use rfcover::envs::make_lock;
use rfcover::experiments::psdp_case;
use rfcover::psdp::{policy_value, psdp, psdp_episode_demand, PsdpConfig, RewardFn};
use rfcover::regression::{BayesOracle, ErmOracle};
use rfcover::{Error, Policy, Seed};

#[test]
fn erm_backed_psdp_opens_a_lock() {
    let (m, class) = make_lock(4, 3, 0.0, 3, 20, Seed(12)).unwrap();
    let m = Arc::new(m);
    let good: Vec<f64> = m.decoder().iter().map(|&s| f64::from(u8::from(s == 0))).collect();
    let reward = RewardFn::table(good);
    let covers: Vec<Vec<Policy>> = (0..3).map(|h| vec![max_reach(&m, h, 0).1]).collect();
    let mut env = EpisodicAccess::new(m.clone(), Seed(13));
    let cfg = PsdpConfig { samples: 300, eps: 0.05, delta: 0.1 };
    let out = psdp(3, &ErmOracle::new(class), &reward, &covers, &[], &cfg, &mut env, &mut Seed(14).rng()).unwrap();
    assert_eq!(exact_visitation(&m, &out.policy).state(3, 0), 1.0);
    assert_eq!(out.episodes, psdp_episode_demand(3, 3, 300));
    assert!((out.value_estimate - 1.0).abs() < 0.1);
}

#[test]
fn reward_layer_must_lie_inside_the_horizon() {
    let (m, _) = make_lock(2, 2, 0.0, 1, 0, Seed(1)).unwrap();
    let m = Arc::new(m);
    let mut env = EpisodicAccess::new(m.clone(), Seed(2));
    let cfg = PsdpConfig { samples: 1, eps: 0.1, delta: 0.1 };
    let err = psdp(2, &BayesOracle::for_model(m), &RewardFn::table(vec![1.0; 2]), &[], &[], &cfg, &mut env, &mut Seed(0).rng());
    assert!(matches!(err, Err(Error::InvalidParameter(_))));
}

#[test]
fn policy_value_agrees_with_the_dp_optimum() {
    let (m, _) = make_lock(3, 2, 0.2, 2, 0, Seed(4)).unwrap();
    let reward = RewardFn::table((0..m.num_obs()).map(|x| x as f64 / 4.0).collect());
    let r = reward.clone();
    let (best, policy) = optimize_reward(&m, 2, &move |x| r.eval(x));
    assert!((policy_value(&m, &policy, 2, &reward) - best).abs() < 1e-12);
    assert!(policy_value(&m, &Policy::uniform(), 2, &reward) <= best + 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bayes_backed_psdp_is_optimal(seed in 0u64..10_000) {
        let case = psdp_case(Seed(seed)).unwrap();
        prop_assert!(case.optimum - case.achieved <= 1e-9, "{case:?}");
    }
}
