//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the worst measured value against its pinned tolerance.
//!
//! Three clauses are known to be unattainable in double precision and fail
//! honestly with diagnostics rather than being weakened:
//! - `c4_inversion_battery_stehfest`: Gaver-Stehfest (≤ 20 terms, f64)
//!   cannot reach 1e-6 relative accuracy for decayed/oscillatory originals
//!   across x ∈ [0.1, 10].
//! - `c6_fractional_monte_carlo` (the v = 0.3 half): every tested fGn
//!   time-stepping scheme retains an n-independent residual (KS ≈ 0.04)
//!   under the H < 1/2 increments; the v = 0.7 half passes and the same
//!   v = 0.3 law is confirmed by the finite-difference route in criterion 7.
//! - `c9_pi_argument_derivative_signs`: the second s-derivative of the
//!   π-argument is 2Ψe^{bt}/(1−sΨ)³ < 0 (Ψ < 0); the stated non-negative
//!   floor cannot hold. The underlying monotone structure (first derivative
//!   completely monotone) is verified in the same report.

use fpk::validate::*;

fn report_and_assert(rep: CriterionReport) {
    let status = if rep.passed { "PASS" } else { "FAIL" };
    let worst = rep
        .measurements
        .iter()
        .map(|m| format!("{}={:.3e} (tol {:.1e})", m.label, m.value, m.tolerance))
        .collect::<Vec<_>>();
    println!("[{status}] {} {} — {} checks, {} ms", rep.id, rep.name, worst.len(), rep.wall_ms);
    for m in &rep.measurements {
        let flag = if m.pass { "ok  " } else { "FAIL" };
        println!("    {flag} {} = {:.6e} (tol {:.3e})", m.label, m.value, m.tolerance);
    }
    for n in &rep.notes {
        println!("    note: {n}");
    }
    assert!(
        rep.passed,
        "{} failed; worst measurements: {}",
        rep.id,
        worst.join(", ")
    );
}

fn opts() -> ValidateOptions {
    ValidateOptions::default()
}

#[test]
fn c1_laplace_pde_residual() {
    report_and_assert(criterion_1(&opts()).expect("criterion 1 ran"));
}

#[test]
fn c2_characteristic_oracle() {
    report_and_assert(criterion_2(&opts()).expect("criterion 2 ran"));
}

#[test]
fn c3_initial_condition_and_norm() {
    report_and_assert(criterion_3(&opts()).expect("criterion 3 ran"));
}

#[test]
fn c4_inversion_battery_talbot() {
    report_and_assert(criterion_4_talbot(&opts()).expect("criterion 4a ran"));
}

#[test]
fn c4_inversion_battery_stehfest() {
    report_and_assert(criterion_4_stehfest(&opts()).expect("criterion 4b ran"));
}

#[test]
fn c5_v_half_closed_form() {
    report_and_assert(criterion_5(&opts()).expect("criterion 5 ran"));
}

#[test]
fn c6_fractional_monte_carlo() {
    report_and_assert(criterion_6(&opts()).expect("criterion 6 ran"));
}

#[test]
fn c7_fd_pde_cross_check() {
    report_and_assert(criterion_7(&opts()).expect("criterion 7 ran"));
}

#[test]
fn c8_flux_solver() {
    report_and_assert(criterion_8(&opts()).expect("criterion 8 ran"));
}

#[test]
fn c9_density_positivity() {
    report_and_assert(criterion_9_positivity(&opts()).expect("criterion 9a ran"));
}

#[test]
fn c9_pi_argument_derivative_signs() {
    report_and_assert(criterion_9_monotonicity(&opts()).expect("criterion 9b ran"));
}

#[test]
fn c10_boundary_limit() {
    report_and_assert(criterion_10(&opts()).expect("criterion 10 ran"));
}
