//! Closed-form absorption rates.
//!
//! Below threshold the p-photon rate is
//!
//! ```text
//! I(φ) = [r / (4(1−r²))]^p · p! · Σ_k C(2k,k) C(2p−2k,p−k) (r + cos φ)^k (r − cos φ)^{p−k}
//! ```
//!
//! and far above threshold it approaches
//!
//! ```text
//! I(φ) = (a1 r √(2n0) / 8)^p · Σ_s C(2s,s) C(2p−2s,p−s) (1 + cos φ)^s (1 − cos φ)^{p−s},
//! ```
//!
//! whose shape depends on neither `r` nor `n0`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fringe::{self, FringePattern};
use crate::params::{DEFAULT_BAND, DerivedParams, RegimeTag};
use crate::special::{ln_central_binomial, ln_factorial};
use crate::tables::{PUBLISHED, Tables};

/// Largest pump rate accepted by the below-threshold formula.
pub const R_MAX_BELOW: f64 = 1.0 - 1.0e-6;

/// Above this pump rate the below-threshold formula is flagged as marginal
/// for typical `n0`.
pub const R_WARN_BELOW: f64 = 0.99;

pub(crate) fn check_order(p: u32) -> Result<()> {
    if p == 0 {
        return Err(Error::domain("absorber order p must be at least 1"));
    }
    Ok(())
}

pub(crate) fn check_below(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::ParameterDomain {
            name: "r",
            value: r,
            reason: "scaled pump rate must be finite and non-negative",
        });
    }
    if r >= 1.0 {
        return Err(Error::domain(format!(
            "r = {r} is at or above threshold; the below-threshold formula does not apply, \
             use the above-threshold path (asymptotic rate or the moment engine)"
        )));
    }
    if r > R_MAX_BELOW {
        return Err(Error::domain(format!(
            "r = {r} is within 1e-6 of threshold; use the moment engine"
        )));
    }
    Ok(())
}

/// Weight `C(2k,k)·C(2p−2k,p−k)` as f64, exact while it fits in 53 bits.
fn central_pair_weight(p: u32, k: u32) -> f64 {
    libm::exp(ln_central_binomial(k) + ln_central_binomial(p - k)).round_if_small(p)
}

trait RoundIfSmall {
    fn round_if_small(self, p: u32) -> Self;
}

impl RoundIfSmall for f64 {
    /// Integer weights are recovered exactly from the log form for modest p.
    fn round_if_small(self, p: u32) -> f64 {
        if p <= 24 { libm::round(self) } else { self }
    }
}

fn pair_sum(p: u32, plus: f64, minus: f64) -> f64 {
    let mut acc = crate::special::CompensatedSum::default();
    for k in 0..=p {
        acc.add(central_pair_weight(p, k) * powi(plus, k) * powi(minus, p - k));
    }
    acc.value()
}

/// Natural log of the below-threshold rate; `-inf` at zero pump.
pub fn log_rate_below(p: u32, r: f64, phi: f64) -> Result<f64> {
    check_order(p)?;
    check_below(r)?;
    if r == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let c = libm::cos(phi);
    let sum = pair_sum(p, r + c, r - c);
    let one_minus = (1.0 - r) * (1.0 + r);
    let ln_scale = f64::from(p) * libm::log(r / (4.0 * one_minus)) + ln_factorial(p);
    Ok(if sum > 0.0 { ln_scale + libm::log(sum) } else { f64::NEG_INFINITY })
}

/// p-photon absorption rate below threshold, `0 ≤ r < 1`.
pub fn rate_below(p: u32, r: f64, phi: f64) -> Result<f64> {
    log_rate_below(p, r, phi).map(libm::exp)
}

/// Shape of the far-above-threshold fringe,
/// `Σ_s C(2s,s) C(2p−2s,p−s) (1 + cos φ)^s (1 − cos φ)^{p−s}`.
pub fn asymptotic_shape(p: u32, phi: f64) -> f64 {
    let c = libm::cos(phi);
    pair_sum(p, 1.0 + c, 1.0 - c)
}

fn check_above(derived: &DerivedParams) -> Result<()> {
    let a1 = derived.a1();
    if a1 <= 0.0 {
        return Err(Error::domain(format!(
            "a1 = {a1} is not above threshold; the asymptotic rate needs a1 > 0"
        )));
    }
    if a1 < DEFAULT_BAND {
        return Err(Error::domain(format!(
            "a1 = {a1} < {DEFAULT_BAND}: too close to threshold for the asymptotic rate, \
             use the moment engine"
        )));
    }
    Ok(())
}

pub fn log_rate_above_asymptotic(p: u32, derived: &DerivedParams, phi: f64) -> Result<f64> {
    check_order(p)?;
    check_above(derived)?;
    let base = derived.a1() * derived.intensity_scale() / 8.0;
    let shape = asymptotic_shape(p, phi);
    Ok(f64::from(p) * libm::log(base)
        + if shape > 0.0 { libm::log(shape) } else { f64::NEG_INFINITY })
}

/// Far-above-threshold rate (`a1 ≥ 6`). Overflows f64 for large `n0` and
/// `p`; prefer [`log_rate_above_asymptotic`].
pub fn rate_above_asymptotic(p: u32, derived: &DerivedParams, phi: f64) -> Result<f64> {
    log_rate_above_asymptotic(p, derived, phi).map(libm::exp)
}

/// Explicit table row for p = 1..6.
pub fn table1_rate(p: u32, r: f64, phi: f64) -> Result<f64> {
    table1_rate_with(&PUBLISHED, p, r, phi)
}

pub fn table1_rate_with(tables: &Tables, p: u32, r: f64, phi: f64) -> Result<f64> {
    check_below(r)?;
    let row = tables
        .rate_row(p)
        .ok_or_else(|| Error::domain(format!("no tabulated rate for p = {p} (rows cover 1..=6)")))?;
    Ok(row.evaluate(r, phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibilitySource {
    Table,
    /// Beyond the tabulated orders: refined visibility of the general-formula
    /// pattern.
    GeneralFormula,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormVisibility {
    pub value: f64,
    pub source: VisibilitySource,
}

impl ClosedFormVisibility {
    pub fn is_fallback(&self) -> bool {
        self.source == VisibilitySource::GeneralFormula
    }
}

/// Below-threshold visibility from the tabulated expressions.
pub fn visibility_below_closed_form(p: u32, r: f64) -> Result<ClosedFormVisibility> {
    visibility_below_closed_form_with(&PUBLISHED, p, r)
}

pub fn visibility_below_closed_form_with(
    tables: &Tables,
    p: u32,
    r: f64,
) -> Result<ClosedFormVisibility> {
    check_order(p)?;
    check_below(r)?;
    if let Some(row) = tables.visibility_row(p) {
        return Ok(ClosedFormVisibility { value: row.evaluate(r), source: VisibilitySource::Table });
    }
    log::debug!("p = {p} beyond tabulated orders; using the general formula");
    let grid = fringe::phase_grid(fringe::DEFAULT_PHASE_POINTS);
    let value = fringe::visibility(&grid, |phi| log_rate_below(p, r, phi).unwrap_or(f64::NAN))?;
    Ok(ClosedFormVisibility { value, source: VisibilitySource::GeneralFormula })
}

/// Sampled below-threshold fringe.
pub fn fringe_below(p: u32, r: f64, phi_grid: Vec<f64>) -> Result<FringePattern> {
    check_order(p)?;
    check_below(r)?;
    Ok(FringePattern::from_log_rate(p, RegimeTag::Below, phi_grid, |phi| {
        log_rate_below(p, r, phi).expect("validated above")
    }))
}

/// Sampled far-above-threshold fringe.
pub fn fringe_above_asymptotic(
    p: u32,
    derived: &DerivedParams,
    phi_grid: Vec<f64>,
) -> Result<FringePattern> {
    check_order(p)?;
    check_above(derived)?;
    Ok(FringePattern::from_log_rate(p, RegimeTag::Above, phi_grid, |phi| {
        log_rate_above_asymptotic(p, derived, phi).expect("validated above")
    }))
}

fn powi(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}
