//! `key=value` parameter overrides applied to the scenario's JSON form.
//!
//! Keys are either short aliases (`R`, `p0`, `s_V`, ...) or dotted paths into
//! the scenario file (`default.barrier.level`). Values parse as JSON when they
//! can, otherwise they are taken as strings, so `rate.kind=vasicek` works.

use dbond_core::{DbondError, Result, Scenario};
use serde_json::Value;

/// Short name → dotted path. `r` is resolved against the rate kind.
const ALIASES: &[(&str, &str)] = &[
    ("R", "default.recovery"),
    ("p0", "p0"),
    ("T", "maturity"),
    ("t", "valuation_time"),
    ("r0", "rate.r0"),
    ("theta", "rate.theta"),
    ("mu_r", "rate.mu"),
    ("s_r", "rate.sigma"),
    ("V", "firm.value"),
    ("s_V", "firm.volatility"),
    ("b_div", "firm.dividend"),
    ("rho12", "firm.rho_rate"),
    ("rho13", "correlations.rate_intensity"),
    ("rho23", "correlations.firm_intensity"),
    ("V_B", "default.barrier.level"),
    ("b", "intensity.drift_const"),
    ("c", "intensity.drift_slope_p"),
    ("d", "intensity.var_const"),
    ("e", "intensity.var_slope_p"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: String,
}

pub fn parse(arg: &str) -> Result<Override> {
    match arg.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok(Override { key: k.trim().into(), value: v.trim().into() }),
        _ => Err(DbondError::Schema {
            path: arg.into(),
            message: "overrides take the form key=value".into(),
        }),
    }
}

fn resolve(key: &str, doc: &Value) -> String {
    if key == "r" {
        let vasicek = doc.pointer("/rate/kind").and_then(Value::as_str) == Some("vasicek");
        return if vasicek { "rate.r0" } else { "rate.r" }.into();
    }
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map(|(_, path)| path.to_string())
        .unwrap_or_else(|| key.to_string())
}

fn literal(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.into()))
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let schema = |message: &str| DbondError::Schema { path: path.into(), message: message.into() };
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| schema("path runs through a non-object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.get_mut(*part).ok_or_else(|| schema("no such section"))?;
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    unreachable!("split yields at least one part")
}

/// Applies overrides in order and re-reads the scenario, so the usual parse
/// and schema diagnostics apply to the result.
pub fn apply(scenario: &Scenario, overrides: &[Override]) -> Result<Scenario> {
    if overrides.is_empty() {
        return Ok(scenario.clone());
    }
    let mut doc: Value = serde_json::from_str(&scenario.to_json()).expect("canonical scenario JSON");
    for o in overrides {
        let path = resolve(&o.key, &doc);
        set_path(&mut doc, &path, literal(&o.value))?;
    }
    Scenario::from_json(&doc.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dbond_core::{Barrier, ShortRateModel};

    fn ov(s: &str) -> Override {
        parse(s).unwrap()
    }

    #[test]
    fn aliases_and_paths() {
        let base = Scenario::base_case();
        let s = apply(&base, &[ov("R=1"), ov("p0=0.7"), ov("default.barrier.level=0.9"), ov("r=0.05")]).unwrap();
        assert_eq!(s.recovery(), 1.0);
        assert_eq!(s.p0, 0.7);
        assert_eq!(s.barrier(), Barrier::Constant { level: 0.9 });
        assert_eq!(s.rate, ShortRateModel::Constant { r: 0.05 });
    }

    #[test]
    fn switch_rate_kind() {
        let base = Scenario::base_case();
        let s = apply(
            &base,
            &[ov("rate={\"kind\":\"vasicek\",\"theta\":0.5,\"mu\":0.07,\"sigma\":0.01,\"r0\":0.06}"), ov("r=0.04")],
        )
        .unwrap();
        assert_eq!(s.rate, ShortRateModel::Vasicek { theta: 0.5, mu: 0.07, sigma: 0.01, r0: 0.04 });
    }

    #[test]
    fn bad_overrides() {
        let base = Scenario::base_case();
        assert!(parse("novalue").is_err());
        assert!(matches!(apply(&base, &[ov("firm.colour=1")]), Err(DbondError::Schema { .. })));
        assert!(matches!(apply(&base, &[ov("nosuch.key=1")]), Err(DbondError::Schema { .. })));
        assert!(apply(&base, &[ov("p0=abc")]).is_err());
    }
}
