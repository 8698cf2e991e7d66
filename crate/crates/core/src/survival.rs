//! No-default probabilities.
//!
//! Intensity survival is `e^{A − B·p}`. Barrier survival is the first-passage
//! probability of a log-Brownian firm value, either against a fixed or
//! discounted barrier at a constant rate, or (for a stochastic rate) of the
//! ratio `V/Z` against a barrier proportional to the default-free bond.
//! Under independence the total survival is the product of the two.

use crate::affine::{self, AffineSolution, DEFAULT_STEP};
use crate::error::{DbondError, Result};
use crate::models::{
    Barrier, FirmModel, ShortRateModel, TimeWindow, ValidatedScenario,
};
use crate::pricing;

/// Slack allowed above 1 before a survival value is reported as clamped.
pub const CLAMP_SLACK: f64 = 1e-12;

/// Standard normal CDF, `N(x) = ½·erfc(−x/√2)`.
///
/// `libm::erfc` is the FreeBSD msun rational approximation, accurate to about
/// one ulp, so the absolute error of `N` stays well under 1e-15.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// A probability clamped into [0, 1], with a flag set when the raw value was
/// further outside than [`CLAMP_SLACK`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    pub value: f64,
    pub clamped: bool,
}

impl Probability {
    pub fn clamp(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        let clamped = raw > 1.0 + CLAMP_SLACK || raw < -CLAMP_SLACK;
        if clamped {
            log::warn!("survival probability {raw} clamped to [0, 1]");
        }
        Self { value, clamped }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalResult {
    pub w_total: f64,
    pub g_intensity: f64,
    pub f_barrier: f64,
}

impl SurvivalResult {
    pub fn new(g_intensity: f64, f_barrier: f64) -> Self {
        Self {
            w_total: g_intensity * f_barrier,
            g_intensity,
            f_barrier,
        }
    }
}

/// `e^{A(t,T) − B(t,T)·p}`.
pub fn intensity_survival(affine: &AffineSolution, p: f64, window: &TimeWindow) -> Probability {
    let k = affine.coefficients(window.t);
    Probability::clamp((k.a - k.b * p).exp())
}

/// First-passage survival of `V` above a constant or discounted barrier.
///
/// With `y = ln(V/V_b(t))` and drift `ν` of `y`, reflection gives
/// `N((y + ντ)/(s√τ)) − e^{−2νy/s²}·N((−y + ντ)/(s√τ))`. A constant barrier
/// has `ν = r − b − s²/2`; the discounted barrier `V_B e^{−r(T−t)}` has
/// `y = ln(V/V_B) + rτ` and `ν = −b − s²/2`.
pub fn barrier_survival_const_r(
    firm: &FirmModel,
    r: f64,
    barrier: &Barrier,
    window: &TimeWindow,
) -> Result<f64> {
    window.check()?;
    let tau = window.tau();
    let s = firm.volatility;
    let s2 = s * s;
    let (y, nu) = match *barrier {
        Barrier::Constant { level } => {
            ((firm.value / level).ln(), r - firm.dividend - 0.5 * s2)
        }
        Barrier::Discounted { level } => {
            ((firm.value / level).ln() + r * tau, -firm.dividend - 0.5 * s2)
        }
        Barrier::None => return Ok(1.0),
        Barrier::ZcbProportional { .. } => {
            return Err(DbondError::UnsupportedRegime(
                "a bond-proportional barrier is priced with the stochastic-rate formula".into(),
            ))
        }
    };
    if y < 0.0 {
        return Err(DbondError::AlreadyDefaulted {
            value: firm.value,
            barrier: firm.value * (-y).exp(),
        });
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if tau == 0.0 {
        return Ok(1.0);
    }
    let sd = s * tau.sqrt();
    let d1 = (y + nu * tau) / sd;
    let d2 = (-y + nu * tau) / sd;
    let reflect = (-2.0 * nu * y / s2).exp();
    Ok((norm_cdf(d1) - reflect * norm_cdf(d2)).clamp(0.0, 1.0))
}

/// Intensity factor of a face-value scenario with a closed-form-compatible model.
fn intensity_factor(v: &ValidatedScenario) -> Result<f64> {
    if !v.intensity.rate_independent() {
        return Err(DbondError::UnsupportedCase(
            "face-value survival needs an intensity without rate loadings".into(),
        ));
    }
    let affine = affine::intensity_affine(&v.intensity, &v.window)?;
    Ok(intensity_survival(&affine, v.p0, &v.window).value)
}

/// `W = f·g` at a constant short rate.
pub fn combined_survival_const_r(v: &ValidatedScenario) -> Result<SurvivalResult> {
    let ShortRateModel::Constant { r } = v.rate else {
        return Err(DbondError::UnsupportedRegime(
            "constant-rate survival needs a constant short rate".into(),
        ));
    };
    let g = intensity_factor(v)?;
    let f = match (v.barrier(), &v.firm) {
        (Barrier::None, _) => 1.0,
        (b, Some(firm)) => barrier_survival_const_r(firm, r, &b, &v.window)?,
        (_, None) => unreachable!("validation requires a firm model with a barrier"),
    };
    Ok(SurvivalResult::new(g, f))
}

/// Instantaneous variance of `ln(V/Z)` at time `u` for maturity `T`.
pub fn sigma_x_sq(rate: &ShortRateModel, firm: &FirmModel, u: f64, maturity: f64) -> f64 {
    let (sr, bb) = match *rate {
        ShortRateModel::Constant { .. } => (0.0, 0.0),
        ShortRateModel::Vasicek { theta, sigma, .. } => {
            (sigma, affine::vasicek_b(theta, maturity - u))
        }
    };
    let sv = firm.volatility;
    let v = sr * sr * bb * bb + sv * sv + 2.0 * firm.rho_rate * sr * bb * sv;
    v.max(0.0)
}

/// `∫_t^T Σ_x²(u) du` by Simpson quadrature.
pub fn effective_variance(rate: &ShortRateModel, firm: &FirmModel, window: &TimeWindow) -> f64 {
    affine::segments(window.t, window.maturity, &[], DEFAULT_STEP)
        .iter()
        .map(|seg| seg.simpson(|u| sigma_x_sq(rate, firm, u, window.maturity)))
        .sum()
}

/// `∫_t^T Σ_x²(u) du` from the closed antiderivatives of `B̄` and `B̄²`.
pub fn effective_variance_closed(
    rate: &ShortRateModel,
    firm: &FirmModel,
    window: &TimeWindow,
) -> f64 {
    let tau = window.tau();
    let sv = firm.volatility;
    match *rate {
        ShortRateModel::Constant { .. } => sv * sv * tau,
        ShortRateModel::Vasicek { theta, sigma, .. } => {
            let e1 = affine::vasicek_b(theta, tau);
            let e2 = affine::vasicek_b(2.0 * theta, tau);
            let int_b = (tau - e1) / theta;
            let int_b2 = (tau - 2.0 * e1 + e2) / (theta * theta);
            sigma * sigma * int_b2 + sv * sv * tau + 2.0 * firm.rho_rate * sigma * sv * int_b
        }
    }
}

/// Survival of the driftless (zero-rate) ratio `x = V/Z` above `V_B` with total
/// variance `effvar`: `N(d̄₁) − (x/V_B)·N(d̄₂)`.
pub fn barrier_survival_stoch_r(x: f64, vb: f64, effvar: f64) -> Result<f64> {
    if x < vb {
        return Err(DbondError::AlreadyDefaulted { value: x, barrier: vb });
    }
    if x == vb {
        return Ok(0.0);
    }
    if effvar < 0.0 || !effvar.is_finite() {
        return Err(DbondError::DegenerateVariance(effvar));
    }
    if effvar == 0.0 {
        return Ok(1.0);
    }
    let sd = effvar.sqrt();
    let l = (x / vb).ln();
    let d1 = (l - 0.5 * effvar) / sd;
    let d2 = (-l - 0.5 * effvar) / sd;
    Ok((norm_cdf(d1) - (x / vb) * norm_cdf(d2)).clamp(0.0, 1.0))
}

/// `W = e^{A − B·p}·f(V/Z)` with a barrier proportional to the default-free bond.
pub fn combined_survival_stoch_r(v: &ValidatedScenario) -> Result<SurvivalResult> {
    let Barrier::ZcbProportional { level } = v.barrier() else {
        return Err(DbondError::UnsupportedRegime(
            "stochastic-rate barrier survival needs a bond-proportional barrier".into(),
        ));
    };
    let firm = v.firm.as_ref().expect("validation requires a firm model with a barrier");
    let g = intensity_factor(v)?;
    let z = pricing::zcb(&v.rate, &v.window);
    let effvar = effective_variance(&v.rate, firm, &v.window);
    let f = barrier_survival_stoch_r(firm.value / z, level, effvar)?;
    Ok(SurvivalResult::new(g, f))
}

/// Survival probability implied by a market-recovery price:
/// `Ĉ(1−R)/(Z − R·Ĉ)` for `R < 1` and 1 at `R = 1`.
pub fn implied_survival_market_recovery(bond_price: f64, zcb: f64, recovery: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&recovery) {
        return Err(DbondError::BadRecovery(recovery));
    }
    if recovery == 1.0 {
        return Ok(1.0);
    }
    let w = bond_price * (1.0 - recovery) / (zcb - recovery * bond_price);
    if !(-1e-10..=1.0 + 1e-10).contains(&w) || !w.is_finite() {
        return Err(DbondError::Inconsistent(w));
    }
    Ok(w.clamp(0.0, 1.0))
}

/// Survival of a validated scenario in whichever regime applies.
pub fn scenario_survival(v: &ValidatedScenario) -> Result<SurvivalResult> {
    match (v.barrier(), v.rate) {
        (Barrier::ZcbProportional { .. }, _) => combined_survival_stoch_r(v),
        (_, ShortRateModel::Constant { .. }) => combined_survival_const_r(v),
        (Barrier::None, ShortRateModel::Vasicek { .. }) => {
            let g = intensity_factor(v)?;
            Ok(SurvivalResult::new(g, 1.0))
        }
        (_, ShortRateModel::Vasicek { .. }) => Err(DbondError::UnsupportedRegime(
            "fixed and discounted barriers need a constant short rate".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{validate_scenario, IntensityModel, Scenario};

    #[test]
    fn norm_cdf_basics() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(-40.0)).abs() < 1e-300);
        assert_eq!(norm_cdf(40.0), 1.0);
    }

    #[test]
    fn constant_intensity_is_poisson() {
        let m = IntensityModel::vasicek_like(0.0, 0.0, 0.0);
        let w = TimeWindow::new(0.0, 1.0).unwrap();
        let a = affine::intensity_affine(&m, &w).unwrap();
        let p = intensity_survival(&a, 0.1, &w);
        assert!((p.value - (-0.1f64).exp()).abs() < 1e-15);
        assert!(!p.clamped);
    }

    #[test]
    fn survival_is_one_at_maturity() {
        let s = Scenario::base_case();
        let w = TimeWindow::new(1.0, 1.0).unwrap();
        let a = affine::intensity_affine(&s.intensity, &w).unwrap();
        assert_eq!(intensity_survival(&a, 0.4, &w).value, 1.0);
        let firm = s.firm.unwrap();
        assert_eq!(barrier_survival_const_r(&firm, 0.07, &s.barrier(), &w).unwrap(), 1.0);
    }

    #[test]
    fn barrier_edges() {
        let s = Scenario::base_case();
        let mut firm = s.firm.unwrap();
        let w = s.window;
        let b = Barrier::Constant { level: 1.0 };
        firm.value = 1.0;
        assert_eq!(barrier_survival_const_r(&firm, 0.07, &b, &w).unwrap(), 0.0);
        firm.value = 0.9;
        assert!(matches!(
            barrier_survival_const_r(&firm, 0.07, &b, &w),
            Err(DbondError::AlreadyDefaulted { .. })
        ));
        firm.value = 1e6;
        assert!(barrier_survival_const_r(&firm, 0.07, &b, &w).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn stoch_barrier_edges() {
        assert_eq!(barrier_survival_stoch_r(1.0, 1.0, 0.04).unwrap(), 0.0);
        assert!(barrier_survival_stoch_r(1e6, 1.0, 0.04).unwrap() > 1.0 - 1e-12);
        assert!(matches!(
            barrier_survival_stoch_r(0.5, 1.0, 0.04),
            Err(DbondError::AlreadyDefaulted { .. })
        ));
        assert_eq!(barrier_survival_stoch_r(1.5, 1.0, 0.0).unwrap(), 1.0);
        assert!(matches!(
            barrier_survival_stoch_r(1.5, 1.0, -1.0),
            Err(DbondError::DegenerateVariance(_))
        ));
    }

    #[test]
    fn sigma_x_degenerate_cases() {
        let firm = FirmModel { value: 1.5, volatility: 0.2, dividend: 0.0, rho_rate: -0.3 };
        let flat = ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma: 0.0, r0: 0.07 };
        assert!((sigma_x_sq(&flat, &firm, 0.0, 2.0) - 0.04).abs() < 1e-16);
        let vas = ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma: 0.02, r0: 0.07 };
        assert!((sigma_x_sq(&vas, &firm, 2.0, 2.0) - 0.04).abs() < 1e-16);
    }

    #[test]
    fn implied_survival_branches() {
        assert_eq!(implied_survival_market_recovery(0.8, 0.9, 1.0).unwrap(), 1.0);
        let w = implied_survival_market_recovery(0.8, 0.9, 0.0).unwrap();
        assert!((w - 0.8 / 0.9).abs() < 1e-15);
        assert!(matches!(
            implied_survival_market_recovery(0.95, 0.9, 0.0),
            Err(DbondError::Inconsistent(_))
        ));
    }

    #[test]
    fn no_barrier_survival_is_intensity_only() {
        let mut s = Scenario::base_case();
        s.default_spec.barrier = Barrier::None;
        let v = validate_scenario(s).unwrap();
        let res = combined_survival_const_r(&v).unwrap();
        assert_eq!(res.f_barrier, 1.0);
        assert_eq!(res.w_total, res.g_intensity);
    }
}
