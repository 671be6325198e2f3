//! Physical parameters, the dimensionless quantities derived from them, and
//! the operating-regime gate.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Typical laboratory value of the threshold photon-number scale.
pub const DEFAULT_N0: f64 = 1.0e6;

/// Half-width, in units of `a1`, of the band classified as near threshold.
pub const DEFAULT_BAND: f64 = 6.0;

/// Pump-to-signal decay ratio below which adiabatic elimination is refused.
pub const MIN_DECAY_RATIO: f64 = 10.0;

/// Pump-to-signal decay ratio below which a warning is logged.
pub const WARN_DECAY_RATIO: f64 = 100.0;

/// Physical rates of the oscillator.
///
/// `gamma` and `gamma3` are the signal/idler and pump-mode cavity decay
/// rates, `kappa` the mode-coupling constant, and `epsilon` the (real,
/// non-negative) normalized classical pump amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct NdpoParams {
    pub gamma: f64,
    pub gamma3: f64,
    pub kappa: f64,
    pub epsilon: f64,
}

impl NdpoParams {
    pub fn validate(&self) -> Result<()> {
        positive("gamma", self.gamma)?;
        positive("gamma3", self.gamma3)?;
        positive("kappa", self.kappa)?;
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::ParameterDomain {
                name: "epsilon",
                value: self.epsilon,
                reason: "pump amplitude must be real, finite and non-negative",
            });
        }
        let ratio = self.gamma3 / self.gamma;
        if ratio < MIN_DECAY_RATIO {
            return Err(Error::ParameterDomain {
                name: "gamma3",
                value: self.gamma3,
                reason: "adiabatic elimination needs gamma3/gamma >= 10",
            });
        }
        if ratio < WARN_DECAY_RATIO {
            log::warn!("gamma3/gamma = {ratio:.3} < 100: adiabatic elimination of the pump is marginal");
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        derive(self)
    }
}

/// Dimensionless quantities controlling the stationary state.
///
/// Built only through [`derive`] or [`DerivedParams::from_scaled`], so the
/// relations `sigma = r·n0`, `a1 = √(2n0)(r−1)` and `a2 = −√(2n0)(r+1)` always
/// hold.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct DerivedParams {
    n0: f64,
    r: f64,
    sigma: f64,
    a1: f64,
    a2: f64,
}

impl DerivedParams {
    /// From the threshold scale `n0` and scaled pump rate `r`, which fully
    /// determine every dimensionless result.
    pub fn from_scaled(n0: f64, r: f64) -> Result<Self> {
        positive("n0", n0)?;
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::ParameterDomain {
                name: "r",
                value: r,
                reason: "scaled pump rate must be finite and non-negative",
            });
        }
        let root = libm::sqrt(2.0 * n0);
        Ok(DerivedParams {
            n0,
            r,
            sigma: r * n0,
            a1: root * (r - 1.0),
            a2: -root * (r + 1.0),
        })
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }

    /// `√(2 n0)`
    pub fn sqrt_2n0(&self) -> f64 {
        libm::sqrt(2.0 * self.n0)
    }

    /// Scale `r√(2n0)` multiplying each factor of the absorber intensity.
    pub fn intensity_scale(&self) -> f64 {
        self.r * self.sqrt_2n0()
    }

    pub fn classify(&self, band: f64) -> Regime {
        classify(self, band)
    }
}

pub fn derive(params: &NdpoParams) -> Result<DerivedParams> {
    params.validate()?;
    let n0 = 2.0 * params.gamma * params.gamma3 / (params.kappa * params.kappa);
    let r = params.kappa * params.epsilon / params.gamma;
    DerivedParams::from_scaled(n0, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum RegimeTag {
    Below,
    NearThreshold,
    Above,
}

impl core::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            RegimeTag::Below => "below",
            RegimeTag::NearThreshold => "near_threshold",
            RegimeTag::Above => "above",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Regime {
    pub tag: RegimeTag,
    pub a1_band: f64,
}

/// Below iff `a1 ≤ −band`, Above iff `a1 ≥ band`, NearThreshold otherwise.
///
/// # Panics
/// If `band` is not strictly positive.
pub fn classify(derived: &DerivedParams, band: f64) -> Regime {
    assert!(band > 0.0, "regime band must be positive, got {band}");
    let a1 = derived.a1;
    let tag = if a1 <= -band {
        RegimeTag::Below
    } else if a1 >= band {
        RegimeTag::Above
    } else {
        RegimeTag::NearThreshold
    };
    Regime { tag, a1_band: band }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}
