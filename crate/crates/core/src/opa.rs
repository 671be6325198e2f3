//! Correspondence with the single-pass high-gain parametric amplifier: its
//! multi-photon rates are the below-threshold oscillator rates at
//! `r = tanh G`.

use alloc::format;
use alloc::vec::Vec;

use crate::analytic::{fringe_below, rate_below};
use crate::error::{Error, Result};
use crate::fringe::FringePattern;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OpaParams {
    /// Single-pass gain.
    pub gain: f64,
}

impl OpaParams {
    pub fn new(gain: f64) -> Result<Self> {
        check_gain(gain)?;
        Ok(OpaParams { gain })
    }

    pub fn equivalent_r(&self) -> f64 {
        libm::tanh(self.gain)
    }
}

fn check_gain(gain: f64) -> Result<()> {
    if !(gain >= 0.0) || gain.is_nan() {
        return Err(Error::ParameterDomain { name: "gain", value: gain, reason: "gain must be non-negative" });
    }
    Ok(())
}

/// `r = tanh G`.
pub fn r_from_gain(gain: f64) -> Result<f64> {
    check_gain(gain)?;
    Ok(libm::tanh(gain))
}

/// `G = artanh r` for `0 ≤ r < 1`.
pub fn gain_from_r(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!(
            "r = {r} has no amplifier counterpart; the gain map covers 0 ≤ r < 1"
        )));
    }
    Ok(libm::atanh(r))
}

/// p-photon rate behind the amplifier; identical to the oscillator rate at
/// `r = tanh G`.
pub fn opa_rate(p: u32, gain: f64, phi: f64) -> Result<f64> {
    rate_below(p, r_from_gain(gain)?, phi)
}

pub fn opa_fringe(p: u32, gain: f64, phi_grid: Vec<f64>) -> Result<FringePattern> {
    fringe_below(p, r_from_gain(gain)?, phi_grid)
}

pub fn opa_visibility(p: u32, gain: f64, phi_grid: Vec<f64>) -> Result<f64> {
    opa_fringe(p, gain, phi_grid)?.visibility()
}
