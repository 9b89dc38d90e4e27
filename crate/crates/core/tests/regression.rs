use std::sync::Arc;

use proptest::prelude::*;
use rfcover::envs::{one_context_instance, random_realizable_joint, random_surjective_decoder, two_context_instance};
use rfcover::experiments::{one_context_mse, two_context_mse};
use rfcover::regression::{
    erm_one_context, erm_two_context, one_aug, one_context_losses, AugSpace, BayesOracle, ConceptClass, ErmOracle,
    OneContextDataset, OneContextOracle, OneTwo, Provenance, TwoContextDataset, TwoContextOracle,
};
use rfcover::{Error, Seed};

fn class_around(decoder: &[usize], states: usize, decoys: u64) -> ConceptClass {
    let mut members = vec![decoder.to_vec()];
    for k in 0..decoys {
        let d = random_surjective_decoder(decoder.len(), states, Seed(1000 + k));
        if !members.contains(&d) {
            members.push(d);
        }
    }
    ConceptClass::new(members, states, 0).unwrap()
}

#[test]
fn erm_recovers_the_true_decoder_from_enough_data() {
    let decoder = random_surjective_decoder(10, 3, Seed(1));
    let class = class_around(&decoder, 3, 30);
    let law = vec![0.1; 10];
    let data = one_context_instance(&decoder, 3, &[0.1, 0.5, 0.9], &law, 20_000, Seed(2)).unwrap();
    let fit = erm_one_context(&class, &data).unwrap();
    assert_eq!(class.member(fit.index), decoder.as_slice());
}

#[test]
fn erm_two_context_approximates_the_equality_target() {
    let decoder = random_surjective_decoder(6, 2, Seed(3));
    let class = class_around(&decoder, 2, 20);
    let joint = random_realizable_joint(&decoder, 2, Seed(4));
    let f = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
    let data = two_context_instance(&decoder, 2, &f, &joint, 40_000, Seed(5)).unwrap();
    let fit = erm_two_context(&class, &data).unwrap();
    assert_eq!(class.member(fit.index), decoder.as_slice());
    let p = ErmOracle::new(Arc::new(class)).fit_two(&data, 0.05, 0.1).unwrap();
    assert!(two_context_mse(&|a, b| p.eval(a, b), &decoder, &f, &joint) < 1e-3);
}

#[test]
fn bayes_oracle_needs_a_truth() {
    let data = OneContextDataset::new(vec![(0, true), (1, false)]);
    let err = BayesOracle::latent_only().fit_one(&data, 0.1, 0.1).unwrap_err();
    assert!(matches!(err, Error::MissingTruth(_)));
}

#[test]
fn bayes_oracle_is_exact_through_one_two() {
    let decoder = random_surjective_decoder(5, 2, Seed(8));
    let law = vec![0.2; 5];
    let g = [0.25, 0.75];
    let data = one_context_instance(&decoder, 2, &g, &law, 50, Seed(9)).unwrap();
    let oracle = OneTwo { inner: Arc::new(BayesOracle::latent_only()) };
    let p = oracle.fit_one(&data, 0.1, 0.1).unwrap();
    assert_eq!(p.provenance(), Provenance::OneTwo);
    assert_eq!(one_context_mse(&|x| p.eval(x), &decoder, &g, &law), 0.0);
}

#[test]
fn one_aug_without_interior_data_predicts_one_half_inside() {
    let space = AugSpace { base_obs: 3, base_states: 2 };
    let class = Arc::new(class_around(&[0, 1, 1], 2, 3));
    let data = OneContextDataset::new(vec![(space.zero_obs(), false), (space.one_obs(), true)]);
    let p = one_aug(&ErmOracle::new(class), space, &data, 0.1, 0.1).unwrap();
    assert_eq!(p.eval(space.zero_obs()), 0.0);
    assert_eq!(p.eval(space.one_obs()), 1.0);
    assert_eq!(p.eval(1), 0.5);
}

#[test]
fn augmented_class_is_regular() {
    let class = class_around(&[0, 1, 1, 0], 2, 5);
    let aug = class.augmented();
    assert!(aug.is_regular());
    let space = aug.space();
    assert_eq!(space.num_obs(), 6);
    assert_eq!(aug.class().ground_truth()[space.one_obs()], space.one_state());
}

#[test]
fn malformed_dataset_text_is_rejected() {
    assert!(OneContextDataset::from_text("1 2\n").is_err());
    assert!(TwoContextDataset::from_text("0 1\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dataset_text_round_trips(samples in prop::collection::vec((0usize..20, any::<bool>()), 0..50)) {
        let d = OneContextDataset::new(samples.clone());
        prop_assert_eq!(OneContextDataset::from_text(&d.to_text()).unwrap().samples, samples);
    }

    #[test]
    fn two_context_text_round_trips(samples in prop::collection::vec((0usize..9, 0usize..9, any::<bool>()), 0..50)) {
        let d = TwoContextDataset::new(samples.clone());
        prop_assert_eq!(TwoContextDataset::from_text(&d.to_text()).unwrap().samples, samples);
    }

    #[test]
    fn erm_selects_a_minimum_loss_decoder(seed in 0u64..300, n in 1usize..200) {
        let decoder = random_surjective_decoder(6, 2, Seed(seed));
        let class = class_around(&decoder, 2, 6);
        let data = one_context_instance(&decoder, 2, &[0.3, 0.6], &[1.0 / 6.0; 6], n, Seed(seed + 1)).unwrap();
        let losses = one_context_losses(&class, &data);
        let fit = erm_one_context(&class, &data).unwrap();
        let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(fit.loss <= min * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn erm_predictions_stay_in_the_unit_interval(seed in 0u64..300) {
        let decoder = random_surjective_decoder(5, 2, Seed(seed));
        let class = Arc::new(class_around(&decoder, 2, 4));
        let data = one_context_instance(&decoder, 2, &[0.1, 0.8], &[0.2; 5], 40, Seed(seed)).unwrap();
        let p = ErmOracle::new(class).fit_one(&data, 0.1, 0.1).unwrap();
        prop_assert!((0..5).all(|x| (0.0..=1.0).contains(&p.eval(x))));
    }
}
