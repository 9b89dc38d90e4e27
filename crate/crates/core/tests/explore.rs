use std::sync::Arc;

use rfcover::access::{EpisodicAccess, EpisodicEnv, ResetAccess};
use rfcover::analysis::check_cover;
use rfcover::envs::make_lock;
use rfcover::experiments::{end_to_end_run, explore_and_check, EndToEndConfig};
use rfcover::explore::{pco, pcr, Algorithm, DatasetMode, ExploreParams, ParamOverrides};
use rfcover::regression::{BayesOracle, ErmOracle};
use rfcover::{Error, Seed};

fn lock_params(algorithm: Algorithm, o: &ParamOverrides) -> ExploreParams {
    ExploreParams::practical(algorithm, 2, 3, 4, 0.1, 0.1, o).unwrap()
}

#[test]
fn pco_covers_a_noisy_lock() {
    let (m, class) = make_lock(4, 3, 0.1, 3, 20, Seed(21)).unwrap();
    let params = lock_params(Algorithm::Pco, &ParamOverrides::default());
    let run = explore_and_check(Arc::new(m), class, Algorithm::Pco, &params, 0.1, Seed(22)).unwrap();
    assert!(run.cover.pass, "{:?}", run.cover.failures().collect::<Vec<_>>());
    assert!(run.num_policies <= 4 * 4 * 2 * 2);
}

#[test]
fn pcr_covers_a_noisy_lock() {
    let (m, class) = make_lock(4, 3, 0.1, 3, 20, Seed(23)).unwrap();
    let params = lock_params(Algorithm::Pcr, &ParamOverrides::default());
    let run = explore_and_check(Arc::new(m), class, Algorithm::Pcr, &params, 0.1, Seed(24)).unwrap();
    assert!(run.cover.pass, "{:?}", run.cover.failures().collect::<Vec<_>>());
    assert!(run.resets > 0);
}

#[test]
fn shared_datasets_also_cover() {
    let o = ParamOverrides { dataset_mode: Some(DatasetMode::Shared), ..Default::default() };
    let (m, class) = make_lock(3, 2, 0.0, 2, 10, Seed(25)).unwrap();
    let m = Arc::new(m);
    for alg in [Algorithm::Pco, Algorithm::Pcr] {
        let params = ExploreParams::practical(alg, 2, 2, 3, 0.1, 0.1, &o).unwrap();
        let run = explore_and_check(m.clone(), class.clone(), alg, &params, 0.1, Seed(26)).unwrap();
        assert!(run.cover.pass, "{alg:?}");
    }
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let cfg = EndToEndConfig { runs: 1, ..Default::default() };
    let a = end_to_end_run(&cfg, Algorithm::Pco, 0).unwrap();
    let b = end_to_end_run(&cfg, Algorithm::Pco, 0).unwrap();
    assert_eq!(a.num_policies, b.num_policies);
    assert_eq!(a.episodes, b.episodes);
    assert_eq!(a.layer_sizes, b.layer_sizes);
    assert_eq!(a.cover.worst_deficit, b.cover.worst_deficit);
}

#[test]
fn horizon_one_returns_the_uniform_policy_without_sampling() {
    let (m, class) = make_lock(1, 2, 0.0, 2, 0, Seed(27)).unwrap();
    let m = Arc::new(m);
    let params = ExploreParams::practical(Algorithm::Pco, 2, 2, 1, 0.1, 0.1, &ParamOverrides::default()).unwrap();
    let mut env = EpisodicAccess::new(m.clone(), Seed(28));
    let out = pco(&ErmOracle::new(class), &params, &mut env, Seed(29)).unwrap();
    assert_eq!(out.policies.len(), 1);
    assert!(out.policies[0].is_uniform());
    assert_eq!(env.episodes(), 0);
    assert!(check_cover(&m, &out.policies, 0.0).pass);
}

#[test]
fn bayes_backed_pcr_covers_exactly_resolvable_labels() {
    let (m, _) = make_lock(3, 2, 0.0, 2, 0, Seed(30)).unwrap();
    let m = Arc::new(m);
    let params = ExploreParams::practical(Algorithm::Pcr, 2, 2, 3, 0.1, 0.1, &ParamOverrides::default()).unwrap();
    let mut env = ResetAccess::new(m.clone(), Seed(31));
    let out = pcr(&BayesOracle::for_model(m.clone()), &params, &mut env, Seed(32)).unwrap();
    assert!(check_cover(&m, &out.policies, 0.1).pass);
}

#[test]
fn invalid_overrides_are_rejected() {
    let o = ParamOverrides { samples: Some(0), ..Default::default() };
    assert!(matches!(
        ExploreParams::practical(Algorithm::Pco, 2, 2, 3, 0.1, 0.1, &o),
        Err(Error::InvalidParameter(_))
    ));
    assert!(ExploreParams::practical(Algorithm::Pco, 2, 2, 3, 1.5, 0.1, &ParamOverrides::default()).is_err());
    let parsed: Result<ParamOverrides, _> = serde_json::from_str(r#"{"bogus": 1}"#);
    assert!(parsed.is_err());
}
