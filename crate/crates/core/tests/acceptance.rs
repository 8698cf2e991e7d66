//! Acceptance matrix: one PASS/FAIL line per criterion.

use dbond_core::verify::{self, VerifyConfig};

fn check(id: &str) {
    let res = verify::run(id, &VerifyConfig::default()).expect("known check id");
    println!("{res}");
    assert!(res.passed(), "{res}");
}

#[test]
fn c1_intensity_face_value_vs_crank_nicolson() {
    check("C1");
}

#[test]
fn c2_intensity_market_recovery_vs_crank_nicolson() {
    check("C2");
}

#[test]
fn c3_two_factor_vs_adi() {
    check("C3");
}

#[test]
fn c4_vasicek_vs_adi() {
    check("C4");
}

#[test]
fn c5_three_factor_vs_monte_carlo() {
    check("C5");
}

#[test]
fn c6_bond_cds_parity() {
    check("C6");
}

#[test]
fn c7_affine_residuals_and_rk4() {
    check("C7");
}

#[test]
fn c8_zero_rate_volatility_degeneracy() {
    check("C8");
}

#[test]
fn c9_spread_table_shapes() {
    check("C9");
}

#[test]
fn c10_recovery_limits_and_bounds() {
    check("C10");
}
