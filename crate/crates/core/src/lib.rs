//! Pricing of defaultable zero-coupon bonds under combined barrier (expected)
//! and intensity (unexpected) default.
//!
//! The crate is organised bottom-up:
//!
//! - [`models`]: scenario types, validation and JSON ingestion.
//! - [`affine`]: Riccati and quadrature solutions for exponential-affine coefficients.
//! - [`survival`]: intensity, barrier and combined no-default probabilities.
//! - [`pricing`]: bond prices, CDS values, credit spreads and term structures.
//! - [`oracles`]: finite-difference and Monte Carlo reference solvers.
//! - [`figures`] and [`verify`]: credit-spread tables and the verification matrix.

pub mod affine;
pub mod error;
pub mod figures;
pub mod models;
pub mod oracles;
pub mod pricing;
pub mod survival;
pub mod verify;

pub use error::{DbondError, Result};
pub use models::{
    load_scenario, validate_for_oracle, validate_scenario, Barrier, Correlations, DefaultSpec,
    FirmModel, IntensityFamily, IntensityModel, RecoveryConvention, Scenario, ShortRateModel,
    StepFunction, TimeWindow, ValidatedScenario,
};
pub use pricing::{PriceBreakdown, Regime};
pub use survival::{Probability, SurvivalResult};

/// The base-case scenario file shipped with the crate.
pub const BASE_CASE_JSON: &str = include_str!("../scenarios/base_case.json");
