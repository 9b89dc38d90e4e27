use std::sync::Arc;

use rfcover::envs::{
    equality_target, one_context_instance, random_realizable_joint, random_surjective_decoder, two_context_instance,
};
use rfcover::experiments::{bayes_pco_oracle, gadget_overrides, two_context_mse, two_red_case, TwoRedConfig};
use rfcover::reg_from_rl::{
    action_grid, reg_to_rl, two_red, EpisodicRlOracle, FixedPolicies, RlRequest, NoiselessResetSim, TwoRedOptions,
};
use rfcover::access::ResetEnv;
use rfcover::regression::{AugSpace, TwoContextDataset};
use rfcover::{Error, Policy, Seed};

#[test]
fn two_red_tolerates_a_doubled_state_bound() {
    // A looser state bound only refines the action grid, so the demand grows
    // and more samples are needed.
    let cfg = TwoRedConfig { instances: 1, s_count: 4, samples: 300_000, ..Default::default() };
    let mse = two_red_case(&cfg, 0).unwrap();
    assert!(mse <= 0.1, "MSE {mse}");
}

#[test]
fn two_red_reports_when_the_dataset_is_too_small() {
    let cfg = TwoRedConfig { instances: 1, samples: 1_000, ..Default::default() };
    assert!(matches!(two_red_case(&cfg, 0), Err(Error::DatasetExhausted { .. })));
}

#[test]
fn two_red_errors_are_the_per_policy_holdout_estimates() {
    let decoder = random_surjective_decoder(4, 2, Seed(5));
    let joint = random_realizable_joint(&decoder, 2, Seed(5));
    let f = equality_target(2);
    let data = two_context_instance(&decoder, 2, &f, &joint, 160_000, Seed(6)).unwrap();
    let space = AugSpace { base_obs: 4, base_states: 2 };
    let oracle = bayes_pco_oracle(4, gadget_overrides(), Seed(7));
    let stitched = two_red(&oracle, space, 2, &data, 0.05, 0.1, TwoRedOptions::default(), Seed(8)).unwrap();
    assert_eq!(stitched.policies().len(), stitched.errors().len());
    for x2 in 0..4 {
        assert!(stitched.errors().iter().all(|e| (0.0..=1.0).contains(&e.eval(x2))));
        let k = stitched.choose(x2);
        let best = stitched.errors().iter().map(|e| e.eval(x2)).fold(f64::INFINITY, f64::min);
        assert_eq!(stitched.errors()[k].eval(x2), best);
    }
    assert!(two_context_mse(&|a, b| stitched.eval(a, b), &decoder, &f, &joint) <= 0.05);
}

#[test]
fn reg_to_rl_solves_an_augmented_instance() {
    // Every nonempty cell runs `two_red` at eps / 18, so each needs about
    // 160k samples at eps = 0.9; the special mass sits on a single cell.
    let space = AugSpace { base_obs: 4, base_states: 2 };
    let mut decoder = random_surjective_decoder(4, 2, Seed(9));
    decoder.extend([space.zero_state(), space.one_state()]);
    let base = random_realizable_joint(&decoder[..4], 2, Seed(9));
    let mut joint = vec![vec![0.0; 6]; 6];
    for (x1, row) in base.iter().enumerate() {
        for (x2, &p) in row.iter().enumerate() {
            joint[x1][x2] = 0.75 * p;
        }
    }
    joint[space.zero_obs()][space.one_obs()] = 0.25;
    let mut f = vec![vec![0.0; 4]; 4];
    f[0][0] = 1.0;
    f[1][1] = 1.0;
    f[3][2] = 1.0;
    let data = two_context_instance(&decoder, 4, &f, &joint, 800_000, Seed(10)).unwrap();
    let oracle: Arc<dyn EpisodicRlOracle> = Arc::new(bayes_pco_oracle(4, gadget_overrides(), Seed(11)));
    let p = reg_to_rl(oracle, space, 2, &data, 0.9, 0.1, TwoRedOptions::default(), Seed(12)).unwrap();
    assert!(two_context_mse(&|a, b| p.eval(a, b), &decoder, &f, &joint) <= 0.05);
}

#[test]
fn fixed_policies_report_their_own_size() {
    let fixed = FixedPolicies(vec![Policy::constant(0), Policy::constant(1)]);
    let req = RlRequest { horizon: 2, num_actions: 2, eps: 0.1, delta: 0.1, truth: None };
    assert_eq!(EpisodicRlOracle::max_policies(&fixed, &req), 2);
}

#[test]
fn the_action_grid_spans_the_unit_interval() {
    let grid = action_grid(0.25).unwrap();
    assert_eq!(grid, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let grid = action_grid(0.3).unwrap();
    assert_eq!(grid.len(), 4);
    assert!(grid.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn noiseless_sim_rejects_unseen_contexts_and_deep_steps() {
    let decoder = vec![0, 1, 1];
    let data = one_context_instance(&decoder, 2, &[0.0, 1.0], &[0.5, 0.5, 0.0], 100, Seed(3)).unwrap();
    let grid = action_grid(0.5).unwrap();
    let space = AugSpace { base_obs: 3, base_states: 2 };
    let mut sim = NoiselessResetSim::new(&data.samples, &grid, space.zero_obs(), space.one_obs(), Seed(4).rng()).unwrap();
    let x = sim.reset_initial().unwrap();
    assert!(matches!(sim.reset_step(0, 2, 0), Err(Error::UnregisteredObservation { .. })));
    assert!(sim.reset_step(0, x, 1).is_ok());
    assert!(matches!(sim.reset_step(1, x, 0), Err(Error::HorizonExceeded)));
}

#[test]
fn empty_two_context_data_is_rejected() {
    let space = AugSpace { base_obs: 2, base_states: 1 };
    let oracle = bayes_pco_oracle(3, gadget_overrides(), Seed(1));
    let err = two_red(&oracle, space, 1, &TwoContextDataset::new(vec![]), 0.1, 0.1, TwoRedOptions::default(), Seed(2));
    assert!(err.is_err());
}
