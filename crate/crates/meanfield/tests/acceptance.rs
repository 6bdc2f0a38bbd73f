//! Acceptance suite: one test per numbered self-verification check.
//!
//! Each test runs its check at the pinned scenario and tolerance, prints the
//! one-line pass/fail row (visible with `cargo test -- --nocapture`, always
//! visible on failure), and asserts the verdict. The expensive coupled
//! benchmark behind checks 10, 11, and 14 is computed once and shared.

use meanfield::verify::{self, CriterionReport};

fn check(report: CriterionReport) {
    println!("{}", report.line());
    assert!(report.passed, "{}", report.line());
}

#[test]
fn criterion_01_diffusion_oracle() {
    check(verify::diffusion_oracle());
}

#[test]
fn criterion_02_mass_conservation() {
    check(verify::mass_conservation());
}

#[test]
fn criterion_03_positivity() {
    check(verify::positivity());
}

#[test]
fn criterion_04_initial_data_contraction() {
    check(verify::initial_data_contraction());
}

#[test]
fn criterion_05_delta_smoothing_decay() {
    check(verify::delta_smoothing_decay());
}

#[test]
fn criterion_06_conjugacy_certificates() {
    check(verify::conjugacy_certificates());
}

#[test]
fn criterion_07_smoothing_toolkit() {
    check(verify::smoothing_toolkit());
}

#[test]
fn criterion_08_gradient_contraction() {
    check(verify::gradient_contraction());
}

#[test]
fn criterion_09_cross_scheme_agreement() {
    check(verify::cross_scheme_agreement());
}

#[test]
fn criterion_10_coupled_equilibrium() {
    check(verify::coupled_equilibrium());
}

#[test]
fn criterion_11_equilibrium_uniqueness() {
    check(verify::equilibrium_uniqueness());
}

#[test]
fn criterion_12_bang_bang_dichotomy() {
    check(verify::bang_bang_dichotomy());
}

#[test]
fn criterion_13_jump_coupling_selection() {
    check(verify::jump_coupling_selection());
}

#[test]
fn criterion_14_particle_consistency() {
    check(verify::particle_consistency());
}
