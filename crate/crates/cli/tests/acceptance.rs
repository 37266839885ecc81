//! The acceptance gate: one test per criterion, each printing a pass/fail
//! line per underlying check (visible with `--nocapture`). The end-to-end
//! shooting criteria are `#[ignore]`d because they are the long pole; run
//! them with `cargo test --test acceptance -- --ignored`.

use coagscale::report::{self, Check};

fn gate(criterion: &str, checks: Vec<Check>) {
    let mut all = true;
    for c in &checks {
        println!(
            "{} {criterion} / {}: observed {:.6e}, expected {:.6e} within {:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check_name,
            c.observed,
            c.expected,
            c.tolerance
        );
        all &= c.pass;
    }
    assert!(all, "criterion failed: {criterion}");
}

#[test]
fn criterion_01_constant_solution_residual() {
    gate("constant solution", vec![report::check_constant_residual().unwrap()]);
}

#[test]
fn criterion_02_dispersion_scaling() {
    gate("dispersion scaling", report::check_dispersion().unwrap());
}

#[test]
fn criterion_03_peak_closed_form() {
    gate("peak closed form", vec![report::check_peak_closed_form().unwrap()]);
}

#[test]
fn criterion_04_peak_limits_and_signs() {
    gate("peak limits and signs", report::check_peak_limits().unwrap());
}

#[test]
fn criterion_05_convolution_residual() {
    gate("convolution residual", vec![report::check_convolution().unwrap()]);
}

#[test]
fn criterion_06_period_limits() {
    gate("period limits", report::check_period().unwrap());
}

#[test]
fn criterion_07_energy_gain() {
    gate("energy gain", report::check_gain().unwrap());
}

#[test]
fn criterion_08_adiabatic_suite() {
    gate("adiabatic suite", report::check_adiabatic().unwrap());
}

#[test]
fn criterion_09_amplitude_map() {
    gate("amplitude map", report::check_amplitude_map().unwrap());
}

#[test]
fn criterion_10_intermediate_invariant() {
    gate(
        "intermediate invariant",
        vec![report::check_intermediate_invariant().unwrap()],
    );
}

#[test]
fn criterion_11_matching_cross_oracle() {
    gate("matching cross-oracle", report::check_matching().unwrap());
}

/// Criteria 12 and 13: the full shoot at lambda = 0.1 plus consistency
/// diagnostics on the shot trajectory. Takes tens of minutes.
#[test]
#[ignore = "end-to-end shoot is the long pole; run with -- --ignored"]
fn criterion_12_13_end_to_end_shoot() {
    let threads = coagscale::parallel::thread_count();
    gate(
        "end-to-end shoot and diagnostics",
        report::slow_checks(0.1, threads).unwrap(),
    );
}
