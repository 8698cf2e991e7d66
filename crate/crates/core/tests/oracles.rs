use dbond_core::oracles::{fd, mc};
use dbond_core::*;

fn intensity_only() -> Scenario {
    let mut s = Scenario::base_case();
    s.default_spec.barrier = Barrier::None;
    s.firm = None;
    s
}

fn oracle(s: Scenario) -> ValidatedScenario {
    validate_for_oracle(s).unwrap()
}

#[test]
fn fd_full_recovery_is_the_discount_bond() {
    let mut s = intensity_only();
    s.default_spec.recovery = 1.0;
    for p0 in [0.0, 0.5, 2.0] {
        s.p0 = p0;
        let v = fd::fd_price_1d(&oracle(s.clone()), &fd::GridSpec::one_d()).unwrap();
        assert!((v - (-0.07f64).exp()).abs() < 1e-8, "p0={p0}: {v}");
    }
}

#[test]
fn fd_near_certain_default() {
    let mut s = intensity_only();
    s.p0 = 50.0;
    s.default_spec.recovery = 0.0;
    let v = fd::fd_price_1d(&oracle(s), &fd::GridSpec::one_d()).unwrap();
    assert!(v.abs() <= 1e-8 * (-0.07f64).exp(), "{v}");
}

#[test]
fn fd_convergence_order_is_two() {
    let v = oracle(intensity_only());
    let rep = fd::fd_report_1d(&v, &fd::GridSpec::one_d().scaled(2)).unwrap();
    let order = rep.observed_order.unwrap();
    assert!((1.7..=2.3).contains(&order), "{order}");

    let s = Scenario::base_case();
    let reps = fd::fd_2d(&oracle(s), &fd::GridSpec::two_d(), fd::FdTarget::Price, &[(1.5, 0.3)]).unwrap();
    let order = reps[0].observed_order.unwrap();
    assert!((1.7..=2.3).contains(&order), "{order}");
}

#[test]
fn fd_two_dimensional_collapses_without_barrier() {
    // a far barrier leaves only the intensity problem
    let mut s = Scenario::base_case();
    s.default_spec.barrier = Barrier::Constant { level: 1e-6 };
    let two = fd::fd_survival_2d(&oracle(s.clone()), &fd::GridSpec::two_d()).unwrap();
    let one = {
        let mut si = intensity_only();
        si.default_spec.recovery = 0.0;
        fd::fd_price_1d(&oracle(si), &fd::GridSpec::one_d()).unwrap() / (-0.07f64).exp()
    };
    assert!((two - one).abs() < 1e-6, "{two} vs {one}");
}

#[test]
fn fd_rejects_correlation_and_wrong_regimes() {
    let mut s = intensity_only();
    s.correlations.rate_intensity = 0.3;
    s.rate = ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma: 0.01, r0: 0.07 };
    let err = fd::fd_price_2d(&oracle(s), &fd::GridSpec::two_d()).unwrap_err();
    assert!(matches!(err, DbondError::UnsupportedCase(_) | DbondError::UnsupportedCorrelation { .. }), "{err}");
    let err = fd::fd_price_1d(&oracle(Scenario::base_case()), &fd::GridSpec::one_d()).unwrap_err();
    assert!(matches!(err, DbondError::UnsupportedRegime(_)));
}

#[test]
fn mc_riskless_limits() {
    let mut s = intensity_only();
    s.intensity = IntensityModel::vasicek_like(0.0, 0.0, 0.0);
    s.p0 = 0.0;
    let est = mc::mc_price(&oracle(s.clone()), &mc::McSpec::new(10_000, 1)).unwrap();
    assert!((est.mean - (-0.07f64).exp()).abs() < 1e-12);
    assert!(est.std_error < 1e-12);

    // Vasicek rate, no default risk: Z within 3 s.e.
    s.rate = ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma: 0.02, r0: 0.05 };
    let v = oracle(s);
    let z = pricing::zcb(&v.rate, &v.window);
    let est = mc::mc_price(&v, &mc::McSpec::new(200_000, 2)).unwrap();
    assert!(est.within(z, 3.0), "{z} vs {est:?}");
}

#[test]
fn mc_full_recovery_gives_discount() {
    let mut s = Scenario::base_case();
    s.default_spec.recovery = 1.0;
    let est = mc::mc_price(&oracle(s), &mc::McSpec::new(20_000, 3)).unwrap();
    assert!((est.mean - (-0.07f64).exp()).abs() < 1e-12);
}

#[test]
fn mc_constant_intensity_is_poisson() {
    let mut s = intensity_only();
    s.intensity = IntensityModel::vasicek_like(0.0, 0.0, 0.0);
    s.p0 = 0.4;
    let est = mc::mc_survival(&oracle(s), &mc::McSpec::new(200_000, 4)).unwrap();
    assert!(est.within((-0.4f64).exp(), 3.0), "{est:?}");
}

#[test]
fn mc_is_reproducible_and_thread_independent() {
    let v = oracle(Scenario::base_case());
    let spec = mc::McSpec::new(30_000, 5);
    let a = mc::mc_price(&v, &spec).unwrap();
    let b = mc::mc_price(&v, &spec).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| mc::mc_price(&v, &spec).unwrap());
    assert_eq!(a.mean.to_bits(), c.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), c.std_error.to_bits());
    let d = mc::mc_price(&v, &mc::McSpec::new(30_000, 6)).unwrap();
    assert_ne!(a.mean, d.mean);
}

#[test]
fn mc_standard_error_scaling() {
    let v = oracle(Scenario::base_case());
    let small = mc::mc_price(&v, &mc::McSpec::new(100_000, 7)).unwrap();
    let large = mc::mc_price(&v, &mc::McSpec::new(200_000, 7)).unwrap();
    let ratio = large.std_error / small.std_error;
    assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.1 * std::f64::consts::FRAC_1_SQRT_2, "{ratio}");
}

#[test]
fn antithetic_does_not_increase_standard_error() {
    for s in [Scenario::base_case(), dbond_core::verify::three_factor_case(-0.3, 0.3, 1.0)] {
        let v = oracle(s);
        let plain = mc::mc_price(&v, &mc::McSpec::new(100_000, 8)).unwrap();
        let anti = mc::mc_price(&v, &mc::McSpec::new(100_000, 8).antithetic(true)).unwrap();
        assert!(anti.std_error <= plain.std_error, "{anti:?} vs {plain:?}");
        assert!((anti.mean - plain.mean).abs() < 3.0 * plain.std_error.hypot(anti.std_error));
    }
}

#[test]
fn discrete_monitoring_overstates_survival() {
    let v = oracle(Scenario::base_case());
    let bridge = mc::mc_survival(&v, &mc::McSpec::new(100_000, 9).steps_per_year(12)).unwrap();
    let mut spec = mc::McSpec::new(100_000, 9).steps_per_year(12);
    spec.monitoring = mc::Monitoring::Discrete;
    let discrete = mc::mc_survival(&v, &spec).unwrap();
    assert!(discrete.mean > bridge.mean);
    let w = pricing::price(&v).unwrap().survival.w_total;
    assert!(bridge.within(w, 3.0), "{w} vs {bridge:?}");
}

#[test]
fn fd_and_mc_agree_without_closed_forms() {
    // checked against each other only, across the oracle-supported regimes
    let mut vas = intensity_only();
    vas.rate = ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma: 0.02, r0: 0.03 };
    vas.default_spec.convention = RecoveryConvention::MarketPrice;
    vas.intensity.drift_slope_r = StepFunction::constant(0.2);
    let mut disc = Scenario::base_case();
    disc.default_spec.barrier = Barrier::Discounted { level: 1.0 };
    disc.window = TimeWindow::new(0.0, 2.0).unwrap();
    let cases = [(intensity_only(), 21u64), (disc, 22), (vas, 23)];
    for (s, seed) in cases {
        let v = oracle(s);
        let num = if v.firm.is_none() && !v.rate.is_vasicek() {
            fd::fd_price_1d(&v, &fd::GridSpec::one_d()).unwrap()
        } else {
            fd::fd_price_2d(&v, &fd::GridSpec::two_d()).unwrap()
        };
        let est = mc::mc_price(&v, &mc::McSpec::new(400_000, seed)).unwrap();
        assert!(est.within(num, 3.0), "{num} vs {est:?}");
    }
}

#[test]
fn mc_correlated_gaussian_case_matches_cross_term() {
    // Gaussian rate and intensity under market recovery: correlation multiplies
    // the uncorrelated price by exp(k·ρ·s_r·√d·∫B̄(u)·B_p(u)du)
    let (theta, sigma, c, d, rho, recovery, tau) = (0.5, 0.02, 0.5, 0.01, 0.9, 0.3, 3.0);
    let mut s = intensity_only();
    s.rate = ShortRateModel::Vasicek { theta, mu: 0.07, sigma, r0: 0.07 };
    s.intensity = IntensityModel::vasicek_like(0.05, c, d);
    s.window = TimeWindow::new(0.0, tau).unwrap();
    s.default_spec.convention = RecoveryConvention::MarketPrice;
    s.default_spec.recovery = recovery;
    let uncorrelated = pricing::price_scenario(s.clone()).unwrap().price;
    let n = 2000;
    let h = tau / n as f64;
    let f = |u: f64| (-(-theta * u).exp_m1() / theta) * (-(-c * u).exp_m1() / c);
    let integral: f64 = (0..n)
        .map(|i| {
            let a = i as f64 * h;
            h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h))
        })
        .sum();
    let want = uncorrelated * ((1.0 - recovery) * rho * sigma * d.sqrt() * integral).exp();
    s.correlations.rate_intensity = rho;
    let est = mc::mc_price(&oracle(s), &mc::McSpec::new(400_000, 31)).unwrap();
    assert!(est.within(want, 3.0), "{want} vs {est:?} (uncorrelated {uncorrelated})");
    assert!(want > uncorrelated);
}
