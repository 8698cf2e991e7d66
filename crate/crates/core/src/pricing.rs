//! Bond prices, CDS values, credit spreads and term structures.
//!
//! Face-value regimes share one decomposition: the holder receives `R·Z`
//! whatever happens, plus `(1 − R)·Z` weighted by the survival probability.
//! Market-price recovery instead scales the default intensity by `1 − R`
//! inside the exponent, so no part of it is paid unconditionally.

use std::fmt;

use rayon::prelude::*;

use crate::affine;
use crate::error::{DbondError, Result};
use crate::models::{
    validate_scenario, Barrier, RecoveryConvention, Scenario, ShortRateModel, TimeWindow,
    ValidatedScenario,
};
use crate::survival::{self, SurvivalResult};

/// Which closed-form pricer a scenario falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Intensity default only, face-value recovery.
    UnexpectedOnly,
    /// Intensity default only, market-price recovery.
    UnexpectedOnlyMarket,
    /// Constant rate, firm-value barrier plus intensity.
    TwoFactor,
    /// Vasicek rate, bond-proportional barrier plus intensity.
    ThreeFactor,
}

impl Regime {
    pub fn of(s: &Scenario) -> Result<Self> {
        let conv = s.default_spec.convention;
        match (s.barrier(), s.rate, conv) {
            (Barrier::None, _, RecoveryConvention::FaceValue) => Ok(Regime::UnexpectedOnly),
            (Barrier::None, _, RecoveryConvention::MarketPrice) => Ok(Regime::UnexpectedOnlyMarket),
            (_, _, RecoveryConvention::MarketPrice) => Err(DbondError::UnsupportedRegime(
                "market-price recovery is only available without a barrier".into(),
            )),
            (Barrier::Constant { .. } | Barrier::Discounted { .. }, ShortRateModel::Constant { .. }, _) => {
                Ok(Regime::TwoFactor)
            }
            (Barrier::Constant { .. } | Barrier::Discounted { .. }, ShortRateModel::Vasicek { .. }, _) => {
                Err(DbondError::UnsupportedRegime(
                    "fixed and discounted barriers need a constant short rate; use zcb_proportional"
                        .into(),
                ))
            }
            (Barrier::ZcbProportional { .. }, _, _) => Ok(Regime::ThreeFactor),
        }
    }

    pub fn is_face_value(self) -> bool {
        !matches!(self, Regime::UnexpectedOnlyMarket)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::UnexpectedOnly => "unexpected_only",
            Regime::UnexpectedOnlyMarket => "unexpected_only_market",
            Regime::TwoFactor => "two_factor",
            Regime::ThreeFactor => "three_factor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBreakdown {
    pub price: f64,
    /// Part received regardless of default.
    pub recovery_leg: f64,
    /// Survival-weighted remainder.
    pub risky_leg: f64,
    pub survival: SurvivalResult,
    /// Default-free bond used for discounting.
    pub discount: f64,
    pub regime: Regime,
}

impl PriceBreakdown {
    fn face_value(recovery: f64, z: f64, survival: SurvivalResult, regime: Regime) -> Self {
        let recovery_leg = recovery * z;
        let risky_leg = (1.0 - recovery) * survival.w_total * z;
        Self {
            price: recovery_leg + risky_leg,
            recovery_leg,
            risky_leg,
            survival,
            discount: z,
            regime,
        }
    }
}

/// Default-free zero-coupon bond `Z(r, t; T)`.
pub fn zcb(rate: &ShortRateModel, window: &TimeWindow) -> f64 {
    match *rate {
        ShortRateModel::Constant { r } => (-r * window.tau()).exp(),
        ShortRateModel::Vasicek { r0, .. } => {
            let (a, b) = affine::vasicek_zcb_affine(rate, window).expect("Vasicek rate");
            (a - b * r0).exp()
        }
    }
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(DbondError::UnsupportedRegime(what.into()))
    }
}

/// Validates `s` and prices it with the matching closed-form pricer.
pub fn price_scenario(s: Scenario) -> Result<PriceBreakdown> {
    price(&validate_scenario(s)?)
}

/// Prices with whichever closed form matches the scenario's regime.
pub fn price(v: &ValidatedScenario) -> Result<PriceBreakdown> {
    match Regime::of(v)? {
        Regime::UnexpectedOnly => price_unexpected_only(v),
        Regime::UnexpectedOnlyMarket => price_unexpected_only_market(v),
        Regime::TwoFactor => price_two_factor(v),
        Regime::ThreeFactor => price_three_factor(v),
    }
}

/// `Z·[R + (1 − R)·e^{A − B·p}]`.
pub fn price_unexpected_only(v: &ValidatedScenario) -> Result<PriceBreakdown> {
    require(v.barrier() == Barrier::None, "this pricer takes no barrier")?;
    require(
        v.default_spec.convention == RecoveryConvention::FaceValue,
        "this pricer needs face-value recovery",
    )?;
    if !v.intensity.rate_independent() {
        return Err(DbondError::UnsupportedCase(
            "face-value recovery needs an intensity independent of the short rate".into(),
        ));
    }
    let affine = affine::intensity_affine(&v.intensity, &v.window)?;
    let g = survival::intensity_survival(&affine, v.p0, &v.window).value;
    let z = zcb(&v.rate, &v.window);
    Ok(PriceBreakdown::face_value(
        v.recovery(),
        z,
        SurvivalResult::new(g, 1.0),
        Regime::UnexpectedOnly,
    ))
}

/// Market-price recovery without a barrier. At a constant rate this is
/// `e^{−rτ}·e^{A − B·p}` with the intensity scaled by `1 − R`; under a
/// Vasicek rate it is `e^{A − B·r − C·p}`.
pub fn price_unexpected_only_market(v: &ValidatedScenario) -> Result<PriceBreakdown> {
    require(v.barrier() == Barrier::None, "this pricer takes no barrier")?;
    require(
        v.default_spec.convention == RecoveryConvention::MarketPrice,
        "this pricer needs market-price recovery",
    )?;
    let recovery = v.recovery();
    let z = zcb(&v.rate, &v.window);
    let price = match v.rate {
        ShortRateModel::Constant { .. } => {
            let sol = affine::intensity_affine_scaled(&v.intensity, &v.window, 1.0 - recovery)?;
            let k = sol.coefficients(v.window.t);
            z * (k.a - k.b * v.p0).exp()
        }
        ShortRateModel::Vasicek { r0, .. } => {
            let sol = affine::market_recovery_affine(&v.intensity, &v.rate, recovery, &v.window)?;
            let k = sol.coefficients(v.window.t);
            let c = k.c.expect("market system has a C coefficient");
            (k.a - k.b * r0 - c * v.p0).exp()
        }
    };
    // the physical survival probability of the intensity clock
    let g = if v.intensity.rate_independent() {
        let sol = affine::intensity_affine(&v.intensity, &v.window)?;
        survival::intensity_survival(&sol, v.p0, &v.window).value
    } else {
        survival::implied_survival_market_recovery(price, z, recovery)?
    };
    Ok(PriceBreakdown {
        price,
        recovery_leg: 0.0,
        risky_leg: price,
        survival: SurvivalResult::new(g, 1.0),
        discount: z,
        regime: Regime::UnexpectedOnlyMarket,
    })
}

/// `R·e^{−rτ} + W·(1 − R)·e^{−rτ}` with firm-value barrier and intensity default.
pub fn price_two_factor(v: &ValidatedScenario) -> Result<PriceBreakdown> {
    require(
        matches!(v.barrier(), Barrier::Constant { .. } | Barrier::Discounted { .. }),
        "this pricer needs a fixed or discounted barrier",
    )?;
    require(
        v.default_spec.convention == RecoveryConvention::FaceValue,
        "this pricer needs face-value recovery",
    )?;
    let w = survival::combined_survival_const_r(v)?;
    let z = zcb(&v.rate, &v.window);
    Ok(PriceBreakdown::face_value(v.recovery(), z, w, Regime::TwoFactor))
}

/// `R·Z + (1 − R)·e^{A − B·p}·[Z·N(d̄₁) − (V/V_B)·N(d̄₂)]`.
pub fn price_three_factor(v: &ValidatedScenario) -> Result<PriceBreakdown> {
    require(
        matches!(v.barrier(), Barrier::ZcbProportional { .. }),
        "this pricer needs a bond-proportional barrier",
    )?;
    require(
        v.default_spec.convention == RecoveryConvention::FaceValue,
        "this pricer needs face-value recovery",
    )?;
    let firm = v.firm.as_ref().expect("validated barrier scenario has a firm");
    if firm.dividend != 0.0 {
        return Err(DbondError::InvalidParameter {
            name: "firm.dividend",
            value: firm.dividend,
            constraint: "the stochastic-rate barrier model has no dividend",
        });
    }
    // Z·f(V/Z) = Z·N(d̄₁) − (V/V_B)·N(d̄₂), so the face-value split applies as is.
    let w = survival::combined_survival_stoch_r(v)?;
    let z = zcb(&v.rate, &v.window);
    Ok(PriceBreakdown::face_value(v.recovery(), z, w, Regime::ThreeFactor))
}

/// Single-premium CDS value `(1 − W)(1 − R)·Z` for face-value regimes.
pub fn cds_price(v: &ValidatedScenario) -> Result<f64> {
    let regime = Regime::of(v)?;
    if !regime.is_face_value() {
        return Err(DbondError::UnsupportedRegime(
            "the CDS value is defined for face-value recovery".into(),
        ));
    }
    let b = price(v)?;
    Ok((1.0 - b.survival.w_total) * (1.0 - v.recovery()) * b.discount)
}

/// `−ln(C/Z)/(T − t)`.
pub fn credit_spread(v: &ValidatedScenario) -> Result<f64> {
    let tau = v.window.tau();
    if tau == 0.0 {
        return Err(DbondError::DegenerateHorizon(v.window.maturity));
    }
    Ok(spread_of(&price(v)?, tau))
}

pub fn spread_of(b: &PriceBreakdown, tau: f64) -> f64 {
    // ln(Z/C) rather than −ln(C/Z), so a riskless bond gives +0
    (b.discount / b.price).ln() / tau
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermPoint {
    pub maturity: f64,
    pub price: f64,
    pub spread: f64,
    pub survival: f64,
}

/// One row per maturity, computed in parallel and returned in input order.
pub fn term_structure(v: &ValidatedScenario, maturities: &[f64]) -> Result<Vec<TermPoint>> {
    maturities
        .par_iter()
        .enumerate()
        .map(|(index, &maturity)| {
            let row_err = |source: DbondError| DbondError::Row {
                index,
                maturity,
                source: Box::new(source),
            };
            if index > 0 && !(maturity > maturities[index - 1]) {
                return Err(row_err(DbondError::InvalidParameter {
                    name: "maturity",
                    value: maturity,
                    constraint: "maturities must be strictly increasing",
                }));
            }
            if !(maturity > v.window.t) {
                return Err(row_err(DbondError::InvalidWindow { t: v.window.t, maturity }));
            }
            let mut s = v.scenario().clone();
            s.window = s.window.with_maturity(maturity);
            let row = validate_scenario(s).and_then(|rv| {
                let b = price(&rv)?;
                Ok(TermPoint {
                    maturity,
                    price: b.price,
                    spread: spread_of(&b, rv.window.tau()),
                    survival: b.survival.w_total,
                })
            });
            row.map_err(row_err)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Scenario;

    fn base() -> ValidatedScenario {
        validate_scenario(Scenario::base_case()).unwrap()
    }

    #[test]
    fn zcb_constant() {
        let w = TimeWindow::new(0.0, 1.0).unwrap();
        assert_eq!(zcb(&ShortRateModel::Constant { r: 0.07 }, &w), (-0.07f64).exp());
        let w0 = TimeWindow::new(1.0, 1.0).unwrap();
        assert_eq!(zcb(&ShortRateModel::Constant { r: 0.07 }, &w0), 1.0);
    }

    #[test]
    fn zcb_vasicek_without_volatility() {
        let w = TimeWindow::new(0.0, 2.0).unwrap();
        let rate = ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma: 0.0, r0: 0.07 };
        let z = zcb(&rate, &w);
        assert!((z - (-0.14f64).exp()).abs() < 1e-14, "{z}");
    }

    #[test]
    fn base_case_price_is_sane() {
        let b = price(&base()).unwrap();
        assert_eq!(b.regime, Regime::TwoFactor);
        assert!(b.price > 0.0 && b.price <= b.discount);
        assert_eq!(b.price, b.recovery_leg + b.risky_leg);
    }

    #[test]
    fn full_recovery_is_riskless() {
        let mut s = Scenario::base_case();
        s.default_spec.recovery = 1.0;
        let v = validate_scenario(s).unwrap();
        let b = price(&v).unwrap();
        assert_eq!(b.price, b.discount);
        assert_eq!(cds_price(&v).unwrap(), 0.0);
        assert_eq!(credit_spread(&v).unwrap(), 0.0);
    }

    #[test]
    fn spread_needs_horizon() {
        let mut s = Scenario::base_case();
        s.window = TimeWindow::new(1.0, 1.0).unwrap();
        let v = validate_scenario(s).unwrap();
        assert!(matches!(credit_spread(&v), Err(DbondError::DegenerateHorizon(_))));
    }

    #[test]
    fn cds_rejects_market_recovery() {
        let mut s = Scenario::base_case();
        s.default_spec.barrier = Barrier::None;
        s.default_spec.convention = RecoveryConvention::MarketPrice;
        let v = validate_scenario(s).unwrap();
        assert!(matches!(cds_price(&v), Err(DbondError::UnsupportedRegime(_))));
    }

    #[test]
    fn term_structure_single_row_matches_direct() {
        let v = base();
        let rows = term_structure(&v, &[1.0]).unwrap();
        let b = price(&v).unwrap();
        assert_eq!(rows[0].price, b.price);
        assert_eq!(rows[0].spread, credit_spread(&v).unwrap());
    }

    #[test]
    fn term_structure_reports_bad_row() {
        let v = base();
        match term_structure(&v, &[0.5, 1.0, 0.9]) {
            Err(DbondError::Row { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected row error, got {other:?}"),
        }
    }
}
