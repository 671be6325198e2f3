//! Absorption rates by contracting the absorber expansion against a set of
//! stationary moments. Works in every regime; below threshold it must agree
//! with the closed forms.

use alloc::format;
use alloc::vec::Vec;

use crate::absorber::{contraction_table, expand_absorber_power};
use crate::analytic::{check_below, check_order};
use crate::error::{Error, Result};
use crate::fringe::FringePattern;
use crate::moments::{CoupledMoments, FactorizedMoments, MomentSource, gaussian_even_moment};
use crate::params::{DEFAULT_N0, DerivedParams, Regime, RegimeTag};
use crate::special::{CompensatedSum, LN_2, binomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum MomentModel {
    /// Four independent Gaussians (below threshold only).
    Factorized,
    /// Coupled `(u1, u3)` radial density with Gaussian `u2`, `u4`.
    Coupled,
}

impl MomentModel {
    pub fn for_regime(tag: RegimeTag) -> Self {
        match tag {
            RegimeTag::Below => MomentModel::Factorized,
            RegimeTag::NearThreshold | RegimeTag::Above => MomentModel::Coupled,
        }
    }
}

/// `I(φ) = exp(ln_prefactor) · Σ_j poly[j] cos^j φ` for one `(p, derived,
/// model)`; the moments are evaluated once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEngine {
    p: u32,
    ln_prefactor: f64,
    poly: Vec<f64>,
}

impl RateEngine {
    pub fn new(p: u32, derived: &DerivedParams, model: MomentModel) -> Result<Self> {
        check_order(p)?;
        match model {
            MomentModel::Factorized => {
                let src = FactorizedMoments::new(derived.a1(), derived.a2(), p)?;
                Self::from_moments(p, derived, &src)
            }
            MomentModel::Coupled => {
                let src = CoupledMoments::new(derived.a1(), derived.a2(), p)?;
                Self::from_moments(p, derived, &src)
            }
        }
    }

    pub fn from_moments(p: u32, derived: &DerivedParams, source: &dyn MomentSource) -> Result<Self> {
        let table = contraction_table(&expand_absorber_power(p)?);
        let mut sums = alloc::vec![CompensatedSum::default(); p as usize + 1];
        for (key, coefs) in &table.entries {
            let w = source.moment(*key);
            for (acc, &c) in sums.iter_mut().zip(coefs) {
                acc.add(c as f64 * w);
            }
        }
        let ln_scale = if derived.r() == 0.0 {
            f64::NEG_INFINITY
        } else {
            libm::log(derived.intensity_scale())
        };
        Ok(RateEngine {
            p,
            ln_prefactor: f64::from(p) * (ln_scale - LN_2),
            poly: sums.iter().map(CompensatedSum::value).collect(),
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Coefficients of the bracket as a polynomial in `cos φ`.
    pub fn cos_polynomial(&self) -> &[f64] {
        &self.poly
    }

    pub fn log_rate(&self, phi: f64) -> f64 {
        let x = libm::cos(phi);
        let v = self.poly.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        if v > 0.0 && self.ln_prefactor > f64::NEG_INFINITY {
            self.ln_prefactor + libm::log(v)
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn rate(&self, phi: f64) -> f64 {
        libm::exp(self.log_rate(phi))
    }

    pub fn fringe(&self, regime: RegimeTag, phi_grid: Vec<f64>) -> FringePattern {
        FringePattern::from_log_rate(self.p, regime, phi_grid, |phi| self.log_rate(phi))
    }
}

fn check_regime(derived: &DerivedParams, regime: Regime) -> Result<()> {
    let actual = derived.classify(regime.a1_band).tag;
    if actual != regime.tag {
        return Err(Error::RegimeMismatch(format!(
            "a1 = {} classifies as {actual} with band {}, not {}",
            derived.a1(),
            regime.a1_band,
            regime.tag
        )));
    }
    Ok(())
}

/// Engine for the moment set appropriate to `regime`, which must agree with
/// the classification of `derived`.
pub fn engine_for(p: u32, derived: &DerivedParams, regime: Regime) -> Result<RateEngine> {
    check_regime(derived, regime)?;
    RateEngine::new(p, derived, MomentModel::for_regime(regime.tag))
}

pub fn log_rate_general(p: u32, derived: &DerivedParams, phi: f64, regime: Regime) -> Result<f64> {
    Ok(engine_for(p, derived, regime)?.log_rate(phi))
}

/// `⟨α3^p α3*^p⟩` from the general moment contraction.
pub fn rate_general(p: u32, derived: &DerivedParams, phi: f64, regime: Regime) -> Result<f64> {
    Ok(engine_for(p, derived, regime)?.rate(phi))
}

pub fn fringe_general(
    p: u32,
    derived: &DerivedParams,
    regime: Regime,
    phi_grid: Vec<f64>,
) -> Result<FringePattern> {
    Ok(engine_for(p, derived, regime)?.fringe(regime.tag, phi_grid))
}

/// `F(u, v, φ) = [u cos(φ/2) − i v sin(φ/2)]²`, where `u`, `v` are
/// independent Gaussians with parameters `a_u`, `a_v`:
/// `⟨F^k⟩ = Σ_l C(2k,2l) ⟨u^{2l}⟩ ⟨v^{2k−2l}⟩ (−1)^{k−l} cos^{2l}(φ/2) sin^{2k−2l}(φ/2)`.
pub fn f_moment_series(k: u32, a_u: f64, a_v: f64, phi: f64) -> Result<f64> {
    let (c2, s2) = (libm::pow(libm::cos(0.5 * phi), 2.0), libm::pow(libm::sin(0.5 * phi), 2.0));
    let mut acc = CompensatedSum::default();
    for l in 0..=k {
        let sign = if (k - l) % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(
            sign * binomial(2 * k, 2 * l) as f64
                * gaussian_even_moment(l, a_u)?
                * gaussian_even_moment(k - l, a_v)?
                * libm::pow(c2, f64::from(l))
                * libm::pow(s2, f64::from(k - l)),
        );
    }
    Ok(acc.value())
}

/// `⟨F(u1, u4, φ)^k⟩ = (2k)! / (k! 4^k (2n0)^{k/2} (1−r²)^k) · (r + cos φ)^k`
/// below threshold.
pub fn f_moment_closed_form(k: u32, r: f64, n0: f64, phi: f64) -> Result<f64> {
    check_below(r)?;
    let kf = f64::from(k);
    let ln_mag = crate::special::ln_double_ratio(k)
        - kf * (2.0 * LN_2 + 0.5 * libm::log(2.0 * n0) + libm::log((1.0 - r) * (1.0 + r)));
    Ok(libm::exp(ln_mag) * libm::pow(r + libm::cos(phi), kf))
}

/// Below-threshold rate through the decomposition
/// `(r√(2n0))^p Σ_k C(p,k) (−1)^{p−k} ⟨F(u1,u4,φ)^k⟩ ⟨F(u2,u3,φ)^{p−k}⟩`, using
/// `(−1)^j ⟨F(u2,u3,φ)^j⟩ = ⟨F(u1,u4,φ+π)^j⟩`. The result does not depend
/// on `n0`; the typical laboratory value is used internally.
pub fn f_decomposition_rate(p: u32, r: f64, phi: f64) -> Result<f64> {
    check_order(p)?;
    check_below(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let n0 = DEFAULT_N0;
    let scale = r * libm::sqrt(2.0 * n0);
    let mut acc = CompensatedSum::default();
    for k in 0..=p {
        acc.add(
            binomial(p, k) as f64
                * f_moment_closed_form(k, r, n0, phi)?
                * f_moment_closed_form(p - k, r, n0, phi + core::f64::consts::PI)?,
        );
    }
    Ok(libm::pow(scale, f64::from(p)) * acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{asymptotic_shape, rate_below};
    use crate::fringe::phase_grid;
    use crate::params::DEFAULT_BAND;
    use crate::special::rel_diff;
    use core::f64::consts::FRAC_PI_4;

    fn phis() -> Vec<f64> {
        (0..25).map(|i| -3.0 + 0.25 * f64::from(i)).collect()
    }

    #[test]
    fn three_way_agreement_below_threshold() {
        for p in 1..=6 {
            for r in [0.15, 0.5, 0.9] {
                let d = DerivedParams::from_scaled(DEFAULT_N0, r).unwrap();
                let regime = d.classify(DEFAULT_BAND);
                let engine = engine_for(p, &d, regime).unwrap();
                for phi in phis() {
                    let closed = rate_below(p, r, phi).unwrap();
                    let general = engine.rate(phi);
                    let fdec = f_decomposition_rate(p, r, phi).unwrap();
                    assert!(rel_diff(general, closed) < 1e-10, "p={p} r={r} φ={phi}: {general} vs {closed}");
                    assert!(rel_diff(fdec, closed) < 1e-10, "p={p} r={r} φ={phi}: {fdec} vs {closed}");
                }
            }
        }
    }

    #[test]
    fn f_moments() {
        let (r, n0) = (0.6, 1.0e6);
        let d = DerivedParams::from_scaled(n0, r).unwrap();
        let first = (r + libm::cos(0.4)) / (2.0 * libm::sqrt(2.0 * n0) * (1.0 - r * r));
        assert!(rel_diff(f_moment_closed_form(1, r, n0, 0.4).unwrap(), first) < 1e-14);
        for k in 0..=6 {
            for phi in [0.0, 0.4, 1.3, 2.9] {
                let series = f_moment_series(k, d.a1(), d.a2(), phi).unwrap();
                let closed = f_moment_closed_form(k, r, n0, phi).unwrap();
                assert!(rel_diff(series, closed) < 1e-9, "k={k} φ={phi}");
            }
        }
        let table = crate::analytic::table1_rate(2, 0.9, FRAC_PI_4).unwrap();
        assert!(rel_diff(f_decomposition_rate(2, 0.9, FRAC_PI_4).unwrap(), table) < 1e-12);
    }

    #[test]
    fn p1_general_rate_is_flat() {
        for r in [0.5, 1.0, 1.03] {
            let d = DerivedParams::from_scaled(1e6, r).unwrap();
            let e = RateEngine::new(1, &d, MomentModel::Coupled).unwrap();
            assert!(e.cos_polynomial()[1].abs() <= 1e-12 * e.cos_polynomial()[0].abs());
        }
    }

    #[test]
    fn regime_mismatch_is_reported() {
        let d = DerivedParams::from_scaled(1e6, 0.5).unwrap();
        let wrong = Regime { tag: RegimeTag::Above, a1_band: DEFAULT_BAND };
        assert!(matches!(rate_general(2, &d, 0.0, wrong), Err(Error::RegimeMismatch(_))));
    }

    #[test]
    fn above_threshold_approaches_asymptote() {
        let d = DerivedParams::from_scaled(1e6, 1.0 + 42.0 / libm::sqrt(2e6)).unwrap();
        let regime = d.classify(DEFAULT_BAND);
        assert_eq!(regime.tag, RegimeTag::Above);
        let e = engine_for(2, &d, regime).unwrap();
        let peak = e.log_rate(0.0);
        for phi in phase_grid(90) {
            let got = libm::exp(e.log_rate(phi) - peak);
            let want = asymptotic_shape(2, phi) / asymptotic_shape(2, 0.0);
            assert!((got - want).abs() < 1e-3);
        }
    }

    #[test]
    fn shape_independent_of_n0_far_above() {
        let at = |n0: f64| {
            let d = DerivedParams::from_scaled(n0, 1.0 + 100.0 / libm::sqrt(2.0 * n0)).unwrap();
            let e = RateEngine::new(2, &d, MomentModel::Coupled).unwrap();
            let peak = e.log_rate(0.0);
            phase_grid(72).into_iter().map(move |phi| libm::exp(e.log_rate(phi) - peak)).collect::<Vec<_>>()
        };
        let spread = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        // u2/u4 terms leak in at relative order 1/(a1·|a2|), |a2| ≈ 2√(2n0):
        // about 5e-6 between n0 = 1e6 and 1e8, shrinking as 1/√n0.
        let (lo, mid, hi) = (at(1e6), at(1e8), at(1e10));
        let coarse = spread(&lo, &mid);
        let fine = spread(&mid, &hi);
        assert!(coarse < 1e-5, "{coarse}");
        assert!(fine < 1e-6, "{fine}");
        assert!((coarse / fine - 10.0).abs() < 1.0);
    }

    #[test]
    fn threshold_visibility_is_between_regimes() {
        let d = DerivedParams::from_scaled(1e6, 1.0).unwrap();
        let e = engine_for(2, &d, d.classify(DEFAULT_BAND)).unwrap();
        let v = e.fringe(RegimeTag::NearThreshold, phase_grid(720)).visibility().unwrap();
        let below = crate::analytic::visibility_below_closed_form(2, 0.97).unwrap().value;
        assert!(0.2 < v && v < below, "{v}");
    }
}
