//! Acceptance criteria, one test per criterion. Each prints a single
//! `AC-n PASS|FAIL (...)` line; run with `--nocapture` to see them.

use rfcover::experiments::{self, EndToEndConfig, Outcome, TwoRedConfig};
use rfcover::Seed;

const SEED: Seed = Seed(2024);

fn report(o: Outcome) {
    println!("{}", o.line());
    assert!(o.pass, "{}", o.line());
}

#[test]
fn ac1_pco_end_to_end() {
    report(experiments::ac1(&EndToEndConfig { seed: SEED, ..Default::default() }));
}

#[test]
fn ac2_pcr_end_to_end() {
    report(experiments::ac2(&EndToEndConfig { seed: SEED, ..Default::default() }));
}

#[test]
fn ac3_psdp_optimality() {
    report(experiments::ac3(50, SEED.derive("ac3")));
}

#[test]
fn ac4_two_red_mse() {
    report(experiments::ac4(&TwoRedConfig { seed: SEED.derive("ac4"), ..Default::default() }));
}

#[test]
fn ac5_kinematics_consistency() {
    report(experiments::ac5(10, SEED.derive("ac5")));
}

#[test]
fn ac6_truncation_invariants() {
    report(experiments::ac6(100, 20, SEED.derive("ac6")));
}

#[test]
fn ac7_gadget_fidelity() {
    report(experiments::ac7(10, 20, SEED.derive("ac7")));
}

#[test]
fn ac8_reduction_sanity() {
    report(experiments::ac8(SEED.derive("ac8")));
}
