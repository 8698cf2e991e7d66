//! Scenario types, validation, and JSON ingestion.
//!
//! All intensity dynamics are stored in one canonical form,
//!
//! ```text
//! dp = (b(t) - c·p + β(t)·r) dt + sqrt(d(t) + e·p + ε(t)·r) dW
//! ```
//!
//! Inputs written with an additive slope (`b(t) + c·p`) are normalized at
//! load time by negating the slope. See `docs/schema.md` for the file format.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{DbondError, Result};
use crate::pricing;

/// Piecewise-constant function of calendar time.
///
/// `values[i]` applies on `[breakpoints[i], breakpoints[i+1])`; the last value
/// extends to infinity and the first value also covers times before
/// `breakpoints[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![value],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(DbondError::Schema {
                path: "breakpoints".into(),
                message: format!(
                    "breakpoints ({}) and values ({}) must be non-empty and of equal length",
                    breakpoints.len(),
                    values.len()
                ),
            });
        }
        if breakpoints.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(DbondError::Schema {
                path: "breakpoints".into(),
                message: "step function entries must be finite".into(),
            });
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DbondError::Schema {
                path: "breakpoints".into(),
                message: "breakpoints must be strictly increasing".into(),
            });
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        // index of the last breakpoint <= t
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.values[idx.saturating_sub(1)]
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Breakpoints lying strictly inside `(a, b)`.
    pub fn interior_breakpoints(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .iter()
            .copied()
            .filter(move |&x| x > a && x < b)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum StepFunctionRepr {
    Constant(f64),
    Table {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Serialize for StepFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.values.len() == 1 && self.breakpoints[0] == 0.0 {
            StepFunctionRepr::Constant(self.values[0]).serialize(s)
        } else {
            StepFunctionRepr::Table {
                breakpoints: self.breakpoints.clone(),
                values: self.values.clone(),
            }
            .serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match StepFunctionRepr::deserialize(d)? {
            StepFunctionRepr::Constant(v) => Ok(StepFunction::constant(v)),
            StepFunctionRepr::Table {
                breakpoints,
                values,
            } => StepFunction::new(breakpoints, values).map_err(serde::de::Error::custom),
        }
    }
}

/// Valuation time and maturity, both in years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t: f64,
    pub maturity: f64,
}

impl TimeWindow {
    pub fn new(t: f64, maturity: f64) -> Result<Self> {
        let w = Self { t, maturity };
        w.check()?;
        Ok(w)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.t.is_finite() && self.maturity.is_finite()) || self.t < 0.0 || self.t > self.maturity
        {
            return Err(DbondError::InvalidWindow {
                t: self.t,
                maturity: self.maturity,
            });
        }
        Ok(())
    }

    /// Time to maturity `T - t`.
    pub fn tau(&self) -> f64 {
        self.maturity - self.t
    }

    pub fn with_t(&self, t: f64) -> Self {
        Self {
            t,
            maturity: self.maturity,
        }
    }

    pub fn with_maturity(&self, maturity: f64) -> Self {
        Self {
            t: self.t,
            maturity,
        }
    }
}

/// Families of the intensity model with a closed-form Riccati solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityFamily {
    /// `c != 0`, `e = 0`
    MeanRevertConstVol,
    /// `c = 0`, `e = 0`
    DriftOnlyConstVol,
    /// `c = 0`, `e > 0`
    DriftSqrtVol,
    /// anything else; numeric Riccati only
    GeneralAffine,
}

impl IntensityFamily {
    pub fn has_closed_form(self) -> bool {
        !matches!(self, IntensityFamily::GeneralAffine)
    }
}

impl fmt::Display for IntensityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IntensityFamily::MeanRevertConstVol => "mean-reverting, constant volatility",
            IntensityFamily::DriftOnlyConstVol => "drift only, constant volatility",
            IntensityFamily::DriftSqrtVol => "drift only, square-root volatility",
            IntensityFamily::GeneralAffine => "general affine",
        };
        f.write_str(s)
    }
}

/// Affine default-intensity dynamics in canonical (mean-reverting) sign form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityModel {
    /// `b(t)`
    pub drift_const: StepFunction,
    /// `c`, entering the drift as `-c·p`
    pub drift_slope_p: f64,
    /// `β(t)`, entering the drift as `+β(t)·r`
    #[serde(default = "StepFunction::zero")]
    pub drift_slope_r: StepFunction,
    /// `d(t)`
    pub var_const: StepFunction,
    /// `e`
    #[serde(default)]
    pub var_slope_p: f64,
    /// `ε(t)`
    #[serde(default = "StepFunction::zero")]
    pub var_slope_r: StepFunction,
}

impl IntensityModel {
    /// Mean-reverting, constant-volatility dynamics with constant coefficients.
    pub fn vasicek_like(b: f64, c: f64, d: f64) -> Self {
        Self {
            drift_const: StepFunction::constant(b),
            drift_slope_p: c,
            drift_slope_r: StepFunction::zero(),
            var_const: StepFunction::constant(d),
            var_slope_p: 0.0,
            var_slope_r: StepFunction::zero(),
        }
    }

    pub fn with_var_slope(mut self, e: f64) -> Self {
        self.var_slope_p = e;
        self
    }

    pub fn family(&self) -> IntensityFamily {
        let c = self.drift_slope_p;
        let e = self.var_slope_p;
        match (c == 0.0, e == 0.0) {
            (false, true) => IntensityFamily::MeanRevertConstVol,
            (true, true) => IntensityFamily::DriftOnlyConstVol,
            (true, false) if e > 0.0 => IntensityFamily::DriftSqrtVol,
            _ => IntensityFamily::GeneralAffine,
        }
    }

    /// True when neither drift nor variance depends on the short rate.
    pub fn rate_independent(&self) -> bool {
        self.drift_slope_r.is_zero() && self.var_slope_r.is_zero()
    }

    pub fn drift(&self, p: f64, r: f64, t: f64) -> f64 {
        self.drift_const.eval(t) - self.drift_slope_p * p + self.drift_slope_r.eval(t) * r
    }

    pub fn variance(&self, p: f64, r: f64, t: f64) -> f64 {
        self.var_const.eval(t) + self.var_slope_p * p + self.var_slope_r.eval(t) * r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShortRateModel {
    Constant {
        r: f64,
    },
    Vasicek {
        theta: f64,
        mu: f64,
        sigma: f64,
        r0: f64,
    },
}

impl ShortRateModel {
    pub fn current_rate(&self) -> f64 {
        match *self {
            ShortRateModel::Constant { r } => r,
            ShortRateModel::Vasicek { r0, .. } => r0,
        }
    }

    /// Rate volatility; zero for the constant kind.
    pub fn sigma(&self) -> f64 {
        match *self {
            ShortRateModel::Constant { .. } => 0.0,
            ShortRateModel::Vasicek { sigma, .. } => sigma,
        }
    }

    pub fn is_vasicek(&self) -> bool {
        matches!(self, ShortRateModel::Vasicek { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmModel {
    /// Current firm value `V`.
    pub value: f64,
    /// `s_V`
    pub volatility: f64,
    /// Continuous dividend rate (constant-rate regime only).
    #[serde(default)]
    pub dividend: f64,
    /// Correlation between the rate and firm-value Brownian drivers.
    #[serde(default)]
    pub rho_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryConvention {
    /// `R` times the default-free zero-coupon bond at default.
    FaceValue,
    /// `R` times the pre-default bond price.
    MarketPrice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Barrier {
    None,
    /// `V_b(t) = V_B`
    Constant { level: f64 },
    /// `V_b(t) = V_B·exp(-r(T - t))`
    Discounted { level: f64 },
    /// `V_b(r, t) = V_B·Z(r, t; T)`
    ZcbProportional { level: f64 },
}

impl Barrier {
    pub fn level(&self) -> Option<f64> {
        match *self {
            Barrier::None => None,
            Barrier::Constant { level }
            | Barrier::Discounted { level }
            | Barrier::ZcbProportional { level } => Some(level),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefaultSpec {
    pub recovery: f64,
    pub convention: RecoveryConvention,
    #[serde(default = "no_barrier")]
    pub barrier: Barrier,
}

fn no_barrier() -> Barrier {
    Barrier::None
}

/// Correlations of the intensity driver with the rate and firm drivers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correlations {
    /// ρ13
    #[serde(default)]
    pub rate_intensity: f64,
    /// ρ23
    #[serde(default)]
    pub firm_intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub window: TimeWindow,
    pub intensity: IntensityModel,
    pub p0: f64,
    pub rate: ShortRateModel,
    pub firm: Option<FirmModel>,
    pub default_spec: DefaultSpec,
    pub correlations: Correlations,
}

impl Scenario {
    /// Base case of the credit-spread study: constant barrier, `p0 = 0.3`, `T = 1`.
    pub fn base_case() -> Self {
        Self {
            window: TimeWindow {
                t: 0.0,
                maturity: 1.0,
            },
            // c = 1.4248 x 0.0038 and d = 0.0131^2, written as exact decimals
            intensity: IntensityModel::vasicek_like(0.1, 0.00541424, 0.00017161),
            p0: 0.3,
            rate: ShortRateModel::Constant { r: 0.07 },
            firm: Some(FirmModel {
                value: 1.5,
                volatility: 0.2,
                dividend: 0.03,
                rho_rate: 0.0,
            }),
            default_spec: DefaultSpec {
                recovery: 0.5,
                convention: RecoveryConvention::FaceValue,
                barrier: Barrier::Constant { level: 1.0 },
            },
            correlations: Correlations::default(),
        }
    }

    pub fn recovery(&self) -> f64 {
        self.default_spec.recovery
    }

    pub fn barrier(&self) -> Barrier {
        self.default_spec.barrier
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            let message = inner.to_string();
            if message.starts_with("unknown field") || message.starts_with("unknown variant") {
                DbondError::Schema { path, message }
            } else {
                DbondError::Parse {
                    location: format!("{path} (line {}, column {})", inner.line(), inner.column()),
                    message,
                }
            }
        })?;
        Ok(file.into())
    }
}

/// Reads a scenario file. Unspecified optional fields take their documented defaults.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DbondError::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    Scenario::from_json(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DriftConvention {
    /// drift = b(t) - c·p
    #[default]
    MeanReverting,
    /// drift = b(t) + c·p
    Additive,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntensityFile {
    #[serde(default)]
    drift_convention: DriftConvention,
    drift_const: StepFunction,
    #[serde(default)]
    drift_slope_p: f64,
    #[serde(default = "StepFunction::zero")]
    drift_slope_r: StepFunction,
    #[serde(default = "StepFunction::zero")]
    var_const: StepFunction,
    #[serde(default)]
    var_slope_p: f64,
    #[serde(default = "StepFunction::zero")]
    var_slope_r: StepFunction,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    valuation_time: f64,
    maturity: f64,
    p0: f64,
    intensity: IntensityFile,
    rate: ShortRateModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    firm: Option<FirmModel>,
    default: DefaultSpec,
    #[serde(default)]
    correlations: Correlations,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let m = &s.intensity;
        Self {
            valuation_time: s.window.t,
            maturity: s.window.maturity,
            p0: s.p0,
            intensity: IntensityFile {
                drift_convention: DriftConvention::MeanReverting,
                drift_const: m.drift_const.clone(),
                drift_slope_p: m.drift_slope_p,
                drift_slope_r: m.drift_slope_r.clone(),
                var_const: m.var_const.clone(),
                var_slope_p: m.var_slope_p,
                var_slope_r: m.var_slope_r.clone(),
            },
            rate: s.rate,
            firm: s.firm,
            default: s.default_spec,
            correlations: s.correlations,
        }
    }
}

impl From<ScenarioFile> for Scenario {
    fn from(f: ScenarioFile) -> Self {
        let i = f.intensity;
        let drift_slope_p = match i.drift_convention {
            DriftConvention::MeanReverting => i.drift_slope_p,
            DriftConvention::Additive => -i.drift_slope_p,
        };
        Scenario {
            window: TimeWindow {
                t: f.valuation_time,
                maturity: f.maturity,
            },
            intensity: IntensityModel {
                drift_const: i.drift_const,
                drift_slope_p,
                drift_slope_r: i.drift_slope_r,
                var_const: i.var_const,
                var_slope_p: i.var_slope_p,
                var_slope_r: i.var_slope_r,
            },
            p0: f.p0,
            rate: f.rate,
            firm: f.firm,
            default_spec: f.default,
            correlations: f.correlations,
        }
    }
}

/// Which consumer the scenario is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// Closed-form pricers: intensity correlations must vanish.
    ClosedForm,
    /// Numerical oracles: correlations within [-1, 1] are accepted.
    Oracle,
}

/// A scenario whose invariants have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario {
    scenario: Scenario,
    family: IntensityFamily,
    mode: ValidationMode,
}

impl ValidatedScenario {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn family(&self) -> IntensityFamily {
        self.family
    }

    pub fn mode(&self) -> ValidationMode {
        self.mode
    }

    pub fn into_inner(self) -> Scenario {
        self.scenario
    }
}

impl std::ops::Deref for ValidatedScenario {
    type Target = Scenario;
    fn deref(&self) -> &Scenario {
        &self.scenario
    }
}

/// Validates a scenario for the closed-form pricers.
pub fn validate_scenario(s: Scenario) -> Result<ValidatedScenario> {
    validate_with(s, ValidationMode::ClosedForm)
}

/// Validates a scenario for the oracles, which accept intensity correlations.
pub fn validate_for_oracle(s: Scenario) -> Result<ValidatedScenario> {
    validate_with(s, ValidationMode::Oracle)
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(DbondError::InvalidParameter {
            name,
            value,
            constraint: "must be finite",
        })
    }
}

fn correlation(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value.abs() <= 1.0 {
        Ok(())
    } else {
        Err(DbondError::BadCorrelation { name, value })
    }
}

pub fn validate_with(s: Scenario, mode: ValidationMode) -> Result<ValidatedScenario> {
    s.window.check()?;

    let r = s.default_spec.recovery;
    if !(0.0..=1.0).contains(&r) {
        return Err(DbondError::BadRecovery(r));
    }

    finite("p0", s.p0)?;
    if s.p0 < 0.0 {
        return Err(DbondError::InvalidParameter {
            name: "p0",
            value: s.p0,
            constraint: "intensity must be >= 0",
        });
    }

    let m = &s.intensity;
    finite("drift_slope_p", m.drift_slope_p)?;
    finite("var_slope_p", m.var_slope_p)?;
    let d_min = m.var_const.min_value();
    if d_min < 0.0 {
        return Err(DbondError::NegativeVariance {
            name: "var_const",
            value: d_min,
        });
    }
    if m.var_slope_p < 0.0 {
        return Err(DbondError::NegativeVariance {
            name: "var_slope_p",
            value: m.var_slope_p,
        });
    }

    match s.rate {
        ShortRateModel::Constant { r } => {
            finite("r", r)?;
            if !m.rate_independent() {
                return Err(DbondError::UnsupportedCase(
                    "rate-dependent intensity coefficients need a stochastic short rate".into(),
                ));
            }
        }
        ShortRateModel::Vasicek {
            theta,
            mu,
            sigma,
            r0,
        } => {
            finite("theta", theta)?;
            finite("mu", mu)?;
            finite("sigma", sigma)?;
            finite("r0", r0)?;
            if theta <= 0.0 {
                return Err(DbondError::InvalidParameter {
                    name: "theta",
                    value: theta,
                    constraint: "mean-reversion speed must be > 0",
                });
            }
            if sigma < 0.0 {
                return Err(DbondError::InvalidParameter {
                    name: "sigma",
                    value: sigma,
                    constraint: "rate volatility must be >= 0",
                });
            }
        }
    }

    if let Some(f) = &s.firm {
        finite("firm.value", f.value)?;
        finite("firm.volatility", f.volatility)?;
        finite("firm.dividend", f.dividend)?;
        if f.value <= 0.0 {
            return Err(DbondError::InvalidParameter {
                name: "firm.value",
                value: f.value,
                constraint: "firm value must be > 0",
            });
        }
        if f.volatility <= 0.0 {
            return Err(DbondError::InvalidParameter {
                name: "firm.volatility",
                value: f.volatility,
                constraint: "firm volatility must be > 0",
            });
        }
        if f.dividend < 0.0 {
            return Err(DbondError::InvalidParameter {
                name: "firm.dividend",
                value: f.dividend,
                constraint: "dividend rate must be >= 0",
            });
        }
        correlation("firm.rho_rate", f.rho_rate)?;
    }

    correlation("rate_intensity", s.correlations.rate_intensity)?;
    correlation("firm_intensity", s.correlations.firm_intensity)?;
    if mode == ValidationMode::ClosedForm {
        if s.correlations.rate_intensity != 0.0 {
            return Err(DbondError::UnsupportedCorrelation {
                name: "rate_intensity",
                value: s.correlations.rate_intensity,
            });
        }
        if s.correlations.firm_intensity != 0.0 {
            return Err(DbondError::UnsupportedCorrelation {
                name: "firm_intensity",
                value: s.correlations.firm_intensity,
            });
        }
    }

    if let Some(level) = s.default_spec.barrier.level() {
        finite("barrier.level", level)?;
        if level <= 0.0 {
            return Err(DbondError::InvalidParameter {
                name: "barrier.level",
                value: level,
                constraint: "barrier level must be > 0",
            });
        }
        let firm = s.firm.ok_or(DbondError::InvalidParameter {
            name: "firm",
            value: f64::NAN,
            constraint: "a barrier requires a firm model",
        })?;
        let current = barrier_at_valuation(&s)?;
        if firm.value <= current {
            return Err(DbondError::AlreadyDefaulted {
                value: firm.value,
                barrier: current,
            });
        }
    }

    let family = s.intensity.family();
    Ok(ValidatedScenario {
        scenario: s,
        family,
        mode,
    })
}

/// Barrier level `V_b` at the valuation time, or `None` when there is no barrier.
pub fn barrier_at_valuation(s: &Scenario) -> Result<f64> {
    let tau = s.window.tau();
    Ok(match s.default_spec.barrier {
        Barrier::None => 0.0,
        Barrier::Constant { level } => level,
        Barrier::Discounted { level } => match s.rate {
            ShortRateModel::Constant { r } => level * (-r * tau).exp(),
            ShortRateModel::Vasicek { .. } => {
                return Err(DbondError::UnsupportedRegime(
                    "a discounted barrier needs a constant short rate; use zcb_proportional".into(),
                ))
            }
        },
        Barrier::ZcbProportional { level } => level * pricing::zcb(&s.rate, &s.window),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_evaluates_pieces() {
        let f = StepFunction::new(vec![0.0, 1.0, 2.0], vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(f.eval(-1.0), 0.1);
        assert_eq!(f.eval(0.0), 0.1);
        assert_eq!(f.eval(0.999), 0.1);
        assert_eq!(f.eval(1.0), 0.2);
        assert_eq!(f.eval(1.5), 0.2);
        assert_eq!(f.eval(2.0), 0.3);
        assert_eq!(f.eval(50.0), 0.3);
        assert!(!f.is_constant());
    }

    #[test]
    fn step_function_rejects_unsorted() {
        assert!(StepFunction::new(vec![1.0, 0.5], vec![1.0, 2.0]).is_err());
        assert!(StepFunction::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn base_case_is_accepted() {
        let v = validate_scenario(Scenario::base_case()).unwrap();
        assert_eq!(v.family(), IntensityFamily::MeanRevertConstVol);
        assert_eq!(v.recovery(), 0.5);
    }

    #[test]
    fn bad_recovery_rejected() {
        let mut s = Scenario::base_case();
        s.default_spec.recovery = 1.2;
        assert_eq!(validate_scenario(s), Err(DbondError::BadRecovery(1.2)));
    }

    #[test]
    fn firm_at_barrier_is_already_defaulted() {
        let mut s = Scenario::base_case();
        s.firm.as_mut().unwrap().value = 1.0;
        assert!(matches!(
            validate_scenario(s),
            Err(DbondError::AlreadyDefaulted { .. })
        ));
    }

    #[test]
    fn negative_variance_rejected() {
        let mut s = Scenario::base_case();
        s.intensity.var_const = StepFunction::new(vec![0.0, 0.5], vec![0.01, -0.01]).unwrap();
        assert!(matches!(
            validate_scenario(s),
            Err(DbondError::NegativeVariance { .. })
        ));
    }

    #[test]
    fn correlations_checked_per_mode() {
        let mut s = Scenario::base_case();
        s.correlations.firm_intensity = 0.3;
        assert!(matches!(
            validate_scenario(s.clone()),
            Err(DbondError::UnsupportedCorrelation { .. })
        ));
        assert!(validate_for_oracle(s.clone()).is_ok());
        s.correlations.firm_intensity = 1.5;
        assert!(matches!(
            validate_for_oracle(s),
            Err(DbondError::BadCorrelation { .. })
        ));
    }

    #[test]
    fn bad_firm_correlation_rejected() {
        let mut s = Scenario::base_case();
        s.firm.as_mut().unwrap().rho_rate = -1.01;
        assert!(matches!(
            validate_scenario(s),
            Err(DbondError::BadCorrelation { .. })
        ));
    }

    #[test]
    fn family_tags() {
        let m = IntensityModel::vasicek_like(0.1, 0.0, 0.01);
        assert_eq!(m.family(), IntensityFamily::DriftOnlyConstVol);
        assert_eq!(m.clone().with_var_slope(2.0).family(), IntensityFamily::DriftSqrtVol);
        let mut g = m.with_var_slope(2.0);
        g.drift_slope_p = 0.3;
        assert_eq!(g.family(), IntensityFamily::GeneralAffine);
    }

    #[test]
    fn additive_drift_convention_is_negated() {
        let text = r#"{
            "maturity": 2.0,
            "p0": 0.1,
            "intensity": {"drift_convention": "additive", "drift_const": 0.1,
                          "drift_slope_p": -0.5, "var_const": 0.0001},
            "rate": {"kind": "constant", "r": 0.05},
            "default": {"recovery": 0.4, "convention": "face_value"}
        }"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.intensity.drift_slope_p, 0.5);
        assert_eq!(s.default_spec.barrier, Barrier::None);
        assert_eq!(s.window.t, 0.0);
    }

    #[test]
    fn empty_text_is_parse_error() {
        assert!(matches!(Scenario::from_json(""), Err(DbondError::Parse { .. })));
    }

    #[test]
    fn unknown_key_is_schema_error() {
        let mut v: serde_json::Value = serde_json::from_str(&Scenario::base_case().to_json()).unwrap();
        v["firm"]["leverage"] = serde_json::json!(2.0);
        match Scenario::from_json(&v.to_string()) {
            Err(DbondError::Schema { path, .. }) => assert!(path.contains("firm"), "{path}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_names_the_field() {
        let text = Scenario::base_case().to_json().replace("\"p0\": 0.3", "\"p0\": \"x\"");
        match Scenario::from_json(&text) {
            Err(DbondError::Parse { location, .. }) => assert!(location.contains("p0"), "{location}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn step_table_loads() {
        let text = r#"{
            "maturity": 3.0, "p0": 0.2,
            "intensity": {"drift_const": {"breakpoints": [0.0, 1.0, 2.0], "values": [0.1, 0.2, 0.4]},
                          "drift_slope_p": 0.3, "var_const": 0.0001},
            "rate": {"kind": "constant", "r": 0.05},
            "default": {"recovery": 0.4, "convention": "face_value"}
        }"#;
        let s = Scenario::from_json(text).unwrap();
        let b = &s.intensity.drift_const;
        assert_eq!(b.eval(0.5), 0.1);
        assert_eq!(b.eval(1.5), 0.2);
        assert_eq!(b.eval(2.5), 0.4);
    }

    #[test]
    fn shipped_base_case_matches_builtin() {
        let text = include_str!("../scenarios/base_case.json");
        assert_eq!(Scenario::from_json(text).unwrap(), Scenario::base_case());
    }
}
