//! Worked examples per module, each checked against an independent oracle.

use dbond_core::affine::{self, SolveMethod};
use dbond_core::oracles::{fd, mc};
use dbond_core::survival::{self, norm_cdf};
use dbond_core::verify::three_factor_case;
use dbond_core::*;

const PATHS: usize = 1_000_000;

fn base() -> Scenario {
    Scenario::base_case()
}

fn no_barrier(mut s: Scenario) -> Scenario {
    s.default_spec.barrier = Barrier::None;
    s.firm = None;
    s
}

fn vasicek(sigma: f64, r0: f64) -> ShortRateModel {
    ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma, r0 }
}

fn window(maturity: f64) -> TimeWindow {
    TimeWindow::new(0.0, maturity).unwrap()
}

fn mc_spec(seed: u64) -> mc::McSpec {
    mc::McSpec::new(PATHS, seed)
}

// --- affine ---

#[test]
fn riccati_closed_branches_match_rk4() {
    let drift_only = IntensityModel::vasicek_like(0.1, 0.0, 0.0);
    assert_eq!(affine::riccati_b_closed(&drift_only, &window(2.0)).unwrap(), 2.0);
    let cases = [(1.0, 0.0, 1.0, 1.0 - (-1.0f64).exp()), (0.0, 2.0, 1.0, 1.0f64.tanh())];
    for (c, e, tau, want) in cases {
        let closed = affine::riccati_closed(1.0, c, e, tau).unwrap();
        assert!((closed - want).abs() < 1e-15);
        let rk4 = affine::solve_riccati(1.0, c, e, tau).unwrap().eval(tau);
        assert!((rk4 - want).abs() < 1e-10, "c={c} e={e}: {rk4}");
    }
    let m = base().intensity;
    let closed = affine::riccati_b_closed(&m, &window(3.0)).unwrap();
    let numeric = affine::riccati_b_numeric(&m, &window(3.0)).unwrap().eval(3.0);
    assert!((closed - numeric).abs() < 1e-9);
}

/// Trapezoid rule on `n` panels, Richardson-extrapolated twice.
fn romberg(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let trap = |n: usize| {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    };
    let (t1, t2, t4) = (trap(n), trap(2 * n), trap(4 * n));
    let r1 = (4.0 * t2 - t1) / 3.0;
    let r2 = (4.0 * t4 - t2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

#[test]
fn a_coefficient_matches_independent_quadrature() {
    let m = base().intensity;
    let (b0, c, d) = (0.1, m.drift_slope_p, m.var_const.eval(0.0));
    let sol = affine::intensity_affine(&m, &window(1.0)).unwrap();
    // integrand in τ = T − s
    let bb = |tau: f64| -(-c * tau).exp_m1() / c;
    let oracle = -romberg(|tau| b0 * bb(tau) - 0.5 * d * bb(tau) * bb(tau), 0.0, 1.0, 64);
    assert!((sol.a(0.0) - oracle).abs() < 1e-8, "{} vs {oracle}", sol.a(0.0));
}

#[test]
fn market_system_limits() {
    let rate = vasicek(0.01, 0.07);
    let w = window(2.0);
    let m = base().intensity;
    let full = affine::market_recovery_affine(&m, &rate, 1.0, &w).unwrap();
    for t in [0.0, 0.7, 1.9] {
        assert_eq!(full.c(t), Some(0.0));
    }
    // R = 0, c = 0, no rate loadings: C = T − t, confirmed by RK4 of the C equation
    let flat = IntensityModel::vasicek_like(0.1, 0.0, 0.00017161);
    let zero = affine::market_recovery_affine(&flat, &rate, 0.0, &w).unwrap();
    let rk4 = affine::solve_riccati(1.0, 0.0, 0.0, 2.0).unwrap().eval(2.0);
    assert!((zero.c(0.0).unwrap() - 2.0).abs() < 1e-15);
    assert!((rk4 - 2.0).abs() < 1e-12);
}

#[test]
fn vasicek_zcb_coefficients() {
    assert!((affine::vasicek_b(1.0, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    let rate = vasicek(0.01, 0.07);
    let w = window(2.0);
    let z = pricing::zcb(&rate, &w);
    let num = fd::fd_zcb_1d(&rate, &w, &fd::GridSpec::one_d()).unwrap();
    assert!(((num - z) / z).abs() < 1e-5, "{num} vs {z}");
}

// --- survival ---

#[test]
fn norm_cdf_matches_series() {
    // N(x) = ½ + φ(x)·Σ x^{2n+1}/(2n+1)!!
    let x = 1.96f64;
    let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (mut term, mut sum) = (x, x);
    for n in 1..50 {
        term *= x * x / (2 * n + 1) as f64;
        sum += term;
    }
    let series = 0.5 + phi * sum;
    assert!((norm_cdf(x) - series).abs() < 1e-15, "{} vs {series}", norm_cdf(x));
}

#[test]
fn constant_intensity_is_poisson() {
    let m = IntensityModel::vasicek_like(0.0, 0.0, 0.0);
    let sol = affine::intensity_affine(&m, &window(1.0)).unwrap();
    let g = survival::intensity_survival(&sol, 0.1, &window(1.0));
    assert!((g.value - (-0.1f64).exp()).abs() < 1e-15);
}

#[test]
fn intensity_survival_matches_monte_carlo() {
    let mut s = no_barrier(base());
    s.p0 = 0.1;
    let v = validate_for_oracle(s).unwrap();
    let g = survival::scenario_survival(&v).unwrap().g_intensity;
    let est = mc::mc_survival(&v, &mc_spec(11)).unwrap();
    assert!(est.within(g, 3.0), "{g} vs {est:?}");
}

#[test]
fn barrier_branches_are_frozen_and_confirmed_by_fd() {
    // values at V/V_B = 1.5, r = 0.07, b = 0.03, s_V = 0.2, T − t = 1
    let firm = base().firm.unwrap();
    let w = window(1.0);
    let cases = [
        (Barrier::Constant { level: 1.0 }, 0.965323787111063),
        (Barrier::Discounted { level: 1.0 }, 0.969178240030659),
    ];
    for (b, frozen) in cases {
        let cf = survival::barrier_survival_const_r(&firm, 0.07, &b, &w).unwrap();
        assert!((cf - frozen).abs() < 1e-14, "{b:?}: {cf}");
        let num = fd::fd_barrier_survival_1d(&firm, 0.07, &b, &w, &fd::GridSpec::one_d().scaled(2)).unwrap();
        assert!((num - frozen).abs() < 1e-7, "{b:?}: fd {num}");
    }
}

#[test]
fn constant_barrier_matches_first_passage_monte_carlo() {
    let mut s = base();
    s.intensity = IntensityModel::vasicek_like(0.0, 0.0, 0.0);
    s.p0 = 0.0;
    let v = validate_for_oracle(s).unwrap();
    let f = survival::scenario_survival(&v).unwrap().f_barrier;
    let est = mc::mc_survival(&v, &mc_spec(12)).unwrap();
    assert!(est.within(f, 3.0), "{f} vs {est:?}");
}

#[test]
fn combined_survival_matches_adi() {
    for b in [Barrier::Constant { level: 1.0 }, Barrier::Discounted { level: 1.0 }] {
        let mut s = base();
        s.default_spec.barrier = b;
        let v = validate_for_oracle(s).unwrap();
        let w = survival::scenario_survival(&v).unwrap().w_total;
        let num = fd::fd_survival_2d(&v, &fd::GridSpec::two_d()).unwrap();
        assert!(((num - w) / w).abs() < 1e-4, "{b:?}: {num} vs {w}");
    }
}

#[test]
fn log_ratio_variance_matches_monte_carlo() {
    let rate = vasicek(0.02, 0.07);
    let firm = FirmModel { value: 1.5, volatility: 0.2, dividend: 0.0, rho_rate: -0.3 };
    let (u, maturity) = (0.0, 2.0);
    let want = survival::sigma_x_sq(&rate, &firm, u, maturity);
    let est = mc::mc_log_ratio_variance_rate(&rate, &firm, u, maturity, 1e-4, PATHS, 13).unwrap();
    assert!(est.within(want, 3.0), "{want} vs {est:?}");
}

#[test]
fn effective_variance_quadrature_matches_antiderivative() {
    let rate = vasicek(0.02, 0.07);
    let firm = FirmModel { value: 1.5, volatility: 0.2, dividend: 0.0, rho_rate: 0.0 };
    let w = window(3.0);
    let quad = survival::effective_variance(&rate, &firm, &w);
    let closed = survival::effective_variance_closed(&rate, &firm, &w);
    assert!((quad - closed).abs() < 1e-10);
}

#[test]
fn driftless_first_passage_matches_monte_carlo() {
    let f = survival::barrier_survival_stoch_r(1.5, 1.0, 0.04).unwrap();
    let est = mc::mc_driftless_first_passage(1.5, 0.04, 50, PATHS, 14);
    assert!(est.within(f, 3.0), "{f} vs {est:?}");
}

#[test]
fn stochastic_rate_survival_matches_monte_carlo() {
    let mut s = three_factor_case(0.0, 0.3, 1.0);
    s.rate = vasicek(0.02, 0.07);
    let v = validate_for_oracle(s).unwrap();
    let w = survival::scenario_survival(&v).unwrap().w_total;
    let est = mc::mc_survival(&v, &mc_spec(15)).unwrap();
    assert!(est.within(w, 3.0), "{w} vs {est:?}");
}

#[test]
fn implied_market_survival() {
    assert_eq!(survival::implied_survival_market_recovery(0.9, 0.95, 1.0).unwrap(), 1.0);
    // at R = 0 the implied survival is the forward-measure no-default probability
    let mut s = no_barrier(base());
    s.rate = vasicek(0.02, 0.07);
    s.default_spec.convention = RecoveryConvention::MarketPrice;
    s.default_spec.recovery = 0.0;
    let v = validate_for_oracle(s).unwrap();
    let b = pricing::price(&v).unwrap();
    let w = survival::implied_survival_market_recovery(b.price, b.discount, 0.0).unwrap();
    let est = mc::mc_survival(&v, &mc_spec(16)).unwrap();
    assert!(est.within(w, 3.0), "{w} vs {est:?}");
}

// --- pricing ---

#[test]
fn zcb_constant_rate() {
    let z = pricing::zcb(&ShortRateModel::Constant { r: 0.07 }, &window(1.0));
    assert_eq!(z, (-0.07f64).exp());
}

#[test]
fn unexpected_only_examples() {
    let mut s = no_barrier(base());
    s.p0 = 0.1;
    s.default_spec.recovery = 0.0;
    let v = validate_scenario(s.clone()).unwrap();
    let b = pricing::price(&v).unwrap();
    let sol = affine::intensity_affine(&v.intensity, &v.window).unwrap();
    assert_eq!(sol.method(), SolveMethod::ClosedForm);
    let co = sol.coefficients(0.0);
    assert!((b.price - b.discount * (co.a - co.b * 0.1).exp()).abs() < 1e-15);

    s.default_spec.recovery = 0.5;
    let v = validate_for_oracle(s).unwrap();
    let cf = pricing::price(&v).unwrap().price;
    let num = fd::fd_price_1d(&v, &fd::GridSpec::one_d()).unwrap();
    assert!(((num - cf) / cf).abs() < 1e-4);
}

#[test]
fn market_conventions_coincide_at_zero_recovery() {
    let mut s = no_barrier(base());
    s.default_spec.recovery = 0.0;
    let face = pricing::price_scenario(s.clone()).unwrap().price;
    s.default_spec.convention = RecoveryConvention::MarketPrice;
    let market = pricing::price_scenario(s).unwrap().price;
    assert!((face - market).abs() < 1e-10);
}

#[test]
fn vasicek_market_price_matches_adi() {
    let mut s = no_barrier(base());
    s.rate = vasicek(0.01, 0.07);
    s.default_spec.convention = RecoveryConvention::MarketPrice;
    let v = validate_for_oracle(s).unwrap();
    let cf = pricing::price(&v).unwrap().price;
    let num = fd::fd_price_2d(&v, &fd::GridSpec::two_d()).unwrap();
    assert!(((num - cf) / cf).abs() < 1e-3);
}

#[test]
fn two_factor_base_case_matches_monte_carlo() {
    let v = validate_for_oracle(base()).unwrap();
    let b = pricing::price(&v).unwrap();
    assert!((b.price - 0.783623210970755).abs() < 1e-14);
    let est = mc::mc_price(&v, &mc_spec(17)).unwrap();
    assert!(est.within(b.price, 3.0), "{} vs {est:?}", b.price);
}

#[test]
fn three_factor_examples() {
    let s = three_factor_case(0.0, 0.3, 1.0);
    let v = validate_for_oracle(s.clone()).unwrap();
    let cf = pricing::price(&v).unwrap().price;
    let est = mc::mc_price(&v, &mc_spec(18)).unwrap();
    assert!(est.within(cf, 3.0), "{cf} vs {est:?}");

    // no rate volatility: discounted-barrier two-factor price without dividend
    let mut s3 = s;
    s3.rate = ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma: 0.0, r0: 0.07 };
    s3.default_spec.barrier = Barrier::ZcbProportional { level: 1.0 };
    let mut s2 = s3.clone();
    s2.rate = ShortRateModel::Constant { r: 0.07 };
    s2.default_spec.barrier = Barrier::Discounted { level: 1.0 };
    let a = pricing::price_scenario(s3).unwrap().price;
    let b = pricing::price_scenario(s2).unwrap().price;
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn price_decreases_in_maturity_under_monte_carlo() {
    let mut prev = f64::INFINITY;
    for (i, maturity) in [0.5, 1.5, 3.0].into_iter().enumerate() {
        let mut s = base();
        s.window = window(maturity);
        let v = validate_for_oracle(s).unwrap();
        let cf = pricing::price(&v).unwrap().price;
        let est = mc::mc_price(&v, &mc::McSpec::new(200_000, 19 + i as u64)).unwrap();
        assert!(est.within(cf, 3.0), "T={maturity}: {cf} vs {est:?}");
        assert!(est.mean < prev);
        prev = est.mean;
    }
}

#[test]
fn spread_increases_in_intensity_at_one_year() {
    let spreads: Vec<f64> = (10..=100)
        .map(|k| {
            let mut s = base();
            s.p0 = k as f64 / 100.0;
            pricing::credit_spread(&validate_scenario(s).unwrap()).unwrap()
        })
        .collect();
    assert!(spreads.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn short_maturity_spread_is_positive() {
    let mut s = base();
    s.window = window(0.1);
    assert!(pricing::credit_spread(&validate_scenario(s).unwrap()).unwrap() > 0.0);
}
