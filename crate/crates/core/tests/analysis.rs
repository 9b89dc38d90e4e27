use proptest::prelude::*;
use rfcover::analysis::{
    check_cover, check_truncated_cover, exact_visitation, max_reach, mixture_visitation, optimize_reward, truncate,
    CoverMode,
};
use rfcover::envs::{make_lock, make_random_block, BlockSizes};
use rfcover::experiments::random_table_policy;
use rfcover::{BlockMdp, Policy, Seed};

fn small_block(seed: u64) -> BlockMdp {
    make_random_block(BlockSizes { horizon: 3, states: 3, actions: 2, obs: 7 }, 0.05, 0, Seed(seed)).unwrap().0
}

#[test]
fn lock_reach_decays_with_noise() {
    let (m, _) = make_lock(4, 3, 0.1, 2, 0, Seed(5)).unwrap();
    for h in 0..4 {
        let (best, policy) = max_reach(&m, h, 0);
        assert!((best - 0.9f64.powi(h as i32)).abs() < 1e-12);
        assert!((exact_visitation(&m, &policy).state(h, 0) - best).abs() < 1e-12);
        let uniform = exact_visitation(&m, &Policy::uniform()).state(h, 0);
        assert!((uniform - (0.9f64 / 3.0).powi(h as i32)).abs() < 1e-12);
    }
}

#[test]
fn uniform_alone_does_not_cover_a_lock() {
    let (m, _) = make_lock(4, 3, 0.0, 2, 0, Seed(5)).unwrap();
    let report = check_cover(&m, &[Policy::uniform()], 0.1);
    assert!(!report.pass);
    assert!(report.failures().any(|e| e.state == 0 && e.layer == 3));
    assert!(report.failures().all(|e| e.layer >= 1));
    let plans: Vec<Policy> = (0..4).map(|h| max_reach(&m, h, 0).1).collect();
    assert!(check_cover(&m, &plans, 0.0).pass);
}

#[test]
fn truncated_cover_in_max_mode_is_met_by_the_optimal_plans() {
    let m = small_block(11);
    let plans: Vec<Policy> = (0..3).flat_map(|h| (0..3).map(move |s| (h, s))).map(|(h, s)| max_reach(&m, h, s).1).collect();
    for h in 0..3 {
        assert!(check_truncated_cover(&m, &plans, h, 1.0, CoverMode::Max, 0.01).pass);
    }
    assert!(!check_truncated_cover(&m, &[], 2, 1.0, CoverMode::Average, 0.01).pass);
}

#[test]
fn optimize_reward_matches_the_best_single_observation_plan() {
    let m = small_block(3);
    let x = 4;
    let (value, policy) = optimize_reward(&m, 2, &|y| f64::from(u8::from(y == x)));
    let d = exact_visitation(&m, &policy);
    assert!((d.observation(&m, 2, x) - value).abs() < 1e-12);
    let s = m.decoder()[x];
    assert!((value - max_reach(&m, 2, s).0 * m.emission(2, s)[x]).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn visitation_layers_are_distributions(seed in 0u64..500, pseed in 0u64..500) {
        let m = small_block(seed);
        let p = random_table_policy(3, m.num_obs(), 2, &mut Seed(pseed).rng());
        let d = exact_visitation(&m, &p);
        for h in 0..3 {
            prop_assert!((d.layer(h).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let obs: f64 = (0..m.num_obs()).map(|x| d.observation(&m, h, x)).sum();
            prop_assert!((obs - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_visitation_is_linear(seed in 0u64..500, w in 0.0f64..1.0) {
        let m = small_block(seed);
        let mut rng = Seed(seed).derive("policies").rng();
        let a = random_table_policy(3, m.num_obs(), 2, &mut rng);
        let b = random_table_policy(3, m.num_obs(), 2, &mut rng);
        let mix = mixture_visitation(&m, &[(a.clone(), w), (b.clone(), 1.0 - w)]);
        let (da, db) = (exact_visitation(&m, &a), exact_visitation(&m, &b));
        for h in 0..3 {
            for s in 0..3 {
                prop_assert!((mix.state(h, s) - (w * da.state(h, s) + (1.0 - w) * db.state(h, s))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn max_reach_dominates_every_policy(seed in 0u64..500, pseed in 0u64..500) {
        let m = small_block(seed);
        let d = exact_visitation(&m, &random_table_policy(3, m.num_obs(), 2, &mut Seed(pseed).rng()));
        for h in 0..3 {
            for s in 0..3 {
                prop_assert!(d.state(h, s) <= max_reach(&m, h, s).0 + 1e-12);
            }
        }
    }

    #[test]
    fn truncation_only_removes_mass(seed in 0u64..500, tau in 0.01f64..0.4) {
        let m = small_block(seed);
        let t = truncate(&m, &[], tau, tau).unwrap();
        let model = t.model();
        let term = t.terminal_state();
        let p = random_table_policy(3, m.num_obs(), 2, &mut Seed(seed).rng());
        let (orig, cut) = (exact_visitation(&m, &p), exact_visitation(model, &p));
        for h in 0..3 {
            for s in 0..3 {
                if t.reachable(h)[s] {
                    prop_assert!(cut.state(h, s) <= orig.state(h, s) + 1e-12);
                } else {
                    prop_assert!(cut.state(h, s) == 0.0);
                }
            }
            prop_assert!((cut.layer(h).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if h > 0 {
                prop_assert!(cut.state(h, term) >= cut.state(h - 1, term) - 1e-12);
            }
        }
    }

    #[test]
    fn gamma_only_enlarges_the_reachable_sets(seed in 0u64..300) {
        let m = small_block(seed);
        let gamma = vec![Policy::uniform(), Policy::constant(1)];
        let t = truncate(&m, &gamma, 0.2, 0.05).unwrap();
        for h in 0..3 {
            for s in 0..3 {
                prop_assert!(!t.reachable_without_gamma(h)[s] || t.reachable(h)[s]);
            }
        }
        prop_assert_eq!(t.reachable(0), t.reachable_without_gamma(0));
    }
}

#[test]
fn invalid_thresholds_are_rejected() {
    let m = small_block(1);
    assert!(truncate(&m, &[], 0.1, 0.2).is_err());
    assert!(truncate(&m, &[], 1.0, 0.5).is_err());
}
