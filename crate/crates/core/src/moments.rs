//! Stationary moments of the pseudo-quadrature variables.
//!
//! Below threshold all four variables are independent Gaussians. Near and
//! above threshold `u1`, `u3` are coupled through the radial density
//! `N exp(−(u1² + u3² − a1)²/2)` while `u2`, `u4` stay Gaussian. The radial
//! integrals `R(2k+1, a1) = ∫ρ^{2k+1} e^{−(ρ²−a1)²/2} dρ` obey
//! `R_k = (k−1) R_{k−2} + a1 R_{k−1}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::{LN_2, LN_PI, beta_half_integers, erfcx, ln_erfc};

/// Half-exponents of `⟨u1^{2s} u2^{2m} u3^{2t} u4^{2n}⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentKey {
    pub s: u32,
    pub t: u32,
    pub m: u32,
    pub n: u32,
}

impl MomentKey {
    pub const fn new(s: u32, t: u32, m: u32, n: u32) -> Self {
        MomentKey { s, t, m, n }
    }

    pub fn order(&self) -> u32 {
        self.s + self.t + self.m + self.n
    }
}

/// Anything that can supply even moments of the four variables.
pub trait MomentSource {
    fn moment(&self, key: MomentKey) -> f64;
}

/// `⟨u^{2k}⟩ = (2k)!/(k! (4|a|)^k)` for `u ∝ exp(−|a| u²)`.
pub fn gaussian_even_moment(k: u32, a: f64) -> Result<f64> {
    if !(a < 0.0) || !a.is_finite() {
        return Err(Error::domain(alloc::format!(
            "Gaussian moments need a < 0, got a = {a}"
        )));
    }
    Ok(gaussian_table(k, a)[k as usize])
}

/// `⟨u^{2j}⟩` for `j = 0..=k` as a running product `Π (2i−1)/(2|a|)`.
fn gaussian_table(k: u32, a: f64) -> Vec<f64> {
    let two_abs = 2.0 * libm::fabs(a);
    let mut out = Vec::with_capacity(k as usize + 1);
    let mut acc = 1.0;
    out.push(acc);
    for i in 1..=k {
        acc *= f64::from(2 * i - 1) / two_abs;
        out.push(acc);
    }
    out
}

/// `ln N` with `N = √2 / (π^{3/2} erfc(−a1/√2))`; finite for any `a1`.
pub fn ln_normalization(a1: f64) -> f64 {
    0.5 * LN_2 - 1.5 * LN_PI - ln_erfc(-a1 / core::f64::consts::SQRT_2)
}

/// Normalization of the coupled `(u1, u3)` density. Overflows to `inf` for
/// `a1` below about −37.5; use [`ln_normalization`] there.
pub fn normalization(a1: f64) -> f64 {
    libm::exp(ln_normalization(a1))
}

/// `R(2k+1, a1)` for `k = 0..=kmax`, stored as `ln R(1)` plus the ratios
/// `R(2k+1)/R(1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    a1: f64,
    ln_r0: f64,
    ratios: Vec<f64>,
}

impl RadialTable {
    pub fn new(a1: f64, kmax: u32) -> Self {
        let kmax = kmax as usize;
        if a1 >= -1.0 {
            Self::forward(a1, kmax)
        } else {
            Self::backward(a1, kmax)
        }
    }

    /// Upward recursion; stable once `a1` is no longer appreciably negative.
    fn forward(a1: f64, kmax: usize) -> Self {
        let r0 = libm::sqrt(2.0 * PI) / 4.0 * libm::erfc(-a1 / core::f64::consts::SQRT_2);
        let mut values = Vec::with_capacity(kmax + 1);
        values.push(r0);
        if kmax >= 1 {
            values.push(0.5 * libm::exp(-0.5 * a1 * a1) + a1 * r0);
        }
        for j in 2..=kmax {
            let next = (j - 1) as f64 * values[j - 2] + a1 * values[j - 1];
            values.push(next);
        }
        let ratios = values.iter().map(|v| v / r0).collect();
        RadialTable { a1, ln_r0: libm::log(r0), ratios }
    }

    /// For `a1 = −b < −1` write `R_k = ½ e^{−b²/2} J_k` with the minimal
    /// solution `J_{k+1} = k J_{k−1} − b J_k`; its ratios `J_k/J_{k−1} =
    /// k/(b + J_{k+1}/J_k)` are obtained by downward recursion.
    fn backward(a1: f64, kmax: usize) -> Self {
        let b = -a1;
        // The continued fraction converges slowly for b near 1; restart from
        // ever deeper until the leading ratio settles.
        let mut start = kmax + 256;
        let mut rho = Self::ratios_from(b, kmax, start);
        loop {
            start *= 2;
            let deeper = Self::ratios_from(b, kmax, start);
            let settled = libm::fabs(deeper[1] - rho[1]) <= 1e-16 * deeper[1];
            rho = deeper;
            if settled || start > 1 << 22 {
                break;
            }
        }
        let mut ratios = Vec::with_capacity(kmax + 1);
        let mut acc = 1.0;
        ratios.push(acc);
        for &r in &rho[1..=kmax] {
            acc *= r;
            ratios.push(acc);
        }
        let ln_j0 = libm::log(libm::sqrt(PI / 2.0) * erfcx(b / core::f64::consts::SQRT_2));
        RadialTable { a1, ln_r0: -LN_2 - 0.5 * b * b + ln_j0, ratios }
    }

    /// `J_k/J_{k−1}` for `k = 1..=kmax` (index 0 unused), recursing down
    /// from `start` with a zero seed.
    fn ratios_from(b: f64, kmax: usize, start: usize) -> Vec<f64> {
        let mut rho = alloc::vec![0.0; kmax.max(1) + 1];
        let mut next = 0.0;
        for k in (1..=start).rev() {
            let r = k as f64 / (b + next);
            if k < rho.len() {
                rho[k] = r;
            }
            next = r;
        }
        rho
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn kmax(&self) -> u32 {
        (self.ratios.len() - 1) as u32
    }

    /// `ln R(2k+1, a1)`.
    pub fn ln_radial(&self, k: u32) -> f64 {
        self.ln_r0 + libm::log(self.ratios[k as usize])
    }

    /// `R(2k+1, a1) / R(1, a1)`.
    pub fn ratio(&self, k: u32) -> f64 {
        self.ratios[k as usize]
    }

    /// `⟨u1^{2s} u3^{2t}⟩ = 2N R(2s+2t+1) B(s+½, t+½)`, using `2N R(1) = 1/π`.
    pub fn coupled_moment(&self, s: u32, t: u32) -> f64 {
        if s == 0 && t == 0 {
            return 1.0;
        }
        self.ratio(s + t) * beta_half_integers(s, t) / PI
    }
}

fn check_odd(big_s: u32) -> Result<u32> {
    if big_s % 2 == 0 {
        return Err(Error::domain(alloc::format!(
            "radial function needs an odd positive order, got S = {big_s}"
        )));
    }
    Ok((big_s - 1) / 2)
}

/// `ln R(S, a1)` for odd `S ≥ 1`.
pub fn ln_radial(big_s: u32, a1: f64) -> Result<f64> {
    let k = check_odd(big_s)?;
    Ok(RadialTable::new(a1, k).ln_radial(k))
}

/// `R(S, a1) = ∫₀^∞ ρ^S e^{−(ρ²−a1)²/2} dρ` for odd `S ≥ 1`.
pub fn radial(big_s: u32, a1: f64) -> Result<f64> {
    ln_radial(big_s, a1).map(libm::exp)
}

/// `⟨u1^{2s} u3^{2t}⟩` under the coupled density; exactly 1 for `s = t = 0`.
pub fn coupled_moment(s: u32, t: u32, a1: f64) -> f64 {
    RadialTable::new(a1, s + t).coupled_moment(s, t)
}

/// `ln ⟨u1^{2s} u3^{2t}⟩`.
pub fn ln_coupled_moment(s: u32, t: u32, a1: f64) -> f64 {
    libm::log(coupled_moment(s, t, a1))
}

/// `2N · R(1, a1) · B(½, ½)` assembled from the independently computed
/// normalization and radial integral; equal to 1 up to rounding.
pub fn coupled_normalization(a1: f64) -> f64 {
    let ln_total = LN_2 + ln_normalization(a1) + RadialTable::new(a1, 0).ln_radial(0) + LN_PI;
    libm::exp(ln_total)
}

/// Four independent Gaussians: `u1`, `u3` with `a1 < 0` and `u2`, `u4` with `a2`.
#[derive(Debug, Clone)]
pub struct FactorizedMoments {
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl FactorizedMoments {
    pub fn new(a1: f64, a2: f64, max_order: u32) -> Result<Self> {
        gaussian_even_moment(0, a1)?;
        gaussian_even_moment(0, a2)?;
        Ok(FactorizedMoments { g1: gaussian_table(max_order, a1), g2: gaussian_table(max_order, a2) })
    }
}

impl MomentSource for FactorizedMoments {
    fn moment(&self, key: MomentKey) -> f64 {
        let MomentKey { s, t, m, n } = key;
        self.g1[s as usize] * self.g1[t as usize] * self.g2[m as usize] * self.g2[n as usize]
    }
}

/// Coupled `(u1, u3)` moments with Gaussian `u2`, `u4`.
#[derive(Debug, Clone)]
pub struct CoupledMoments {
    radial: RadialTable,
    g2: Vec<f64>,
}

impl CoupledMoments {
    pub fn new(a1: f64, a2: f64, max_order: u32) -> Result<Self> {
        gaussian_even_moment(0, a2)?;
        Ok(CoupledMoments { radial: RadialTable::new(a1, max_order), g2: gaussian_table(max_order, a2) })
    }

    pub fn radial(&self) -> &RadialTable {
        &self.radial
    }
}

impl MomentSource for CoupledMoments {
    fn moment(&self, key: MomentKey) -> f64 {
        let MomentKey { s, t, m, n } = key;
        self.radial.coupled_moment(s, t) * self.g2[m as usize] * self.g2[n as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::rel_diff;

    #[test]
    fn gaussian_moments() {
        assert_eq!(gaussian_even_moment(0, -3.0).unwrap(), 1.0);
        assert!(rel_diff(gaussian_even_moment(2, -2.0).unwrap(), 0.1875) < 1e-15);
        let a2 = -1414.2;
        assert!(rel_diff(gaussian_even_moment(1, a2).unwrap(), 1.0 / (2.0 * 1414.2)) < 1e-15);
        assert!(gaussian_even_moment(1, 0.0).is_err());
        assert!(gaussian_even_moment(1, 2.0).is_err());
    }

    #[test]
    fn normalization_values() {
        assert!(rel_diff(normalization(0.0), 0.253_974_543_736_963_9) < 1e-14);
        let limit = core::f64::consts::SQRT_2 / (2.0 * PI * libm::sqrt(PI));
        assert!(rel_diff(normalization(50.0), limit) < 1e-15);
        let ln_n = ln_normalization(-100.0);
        assert!(ln_n.is_finite() && ln_n > 4000.0);
    }

    #[test]
    fn radial_reference_values() {
        assert!(rel_diff(radial(1, 0.0).unwrap(), libm::sqrt(PI / 8.0)) < 1e-15);
        assert!(rel_diff(radial(3, 0.0).unwrap(), 0.5) < 1e-15);
        // reference values from 50-digit quadrature
        assert!(rel_diff(radial(9, -5.0).unwrap(), 8.767_824_585_009_78e-9) < 1e-12);
        assert!(rel_diff(radial(9, 0.0).unwrap(), 1.879_971_205_973_25) < 1e-13);
        assert!(rel_diff(radial(9, 5.0).unwrap(), 975.078_398_822_691_4) < 1e-13);
        assert!(rel_diff(radial(9, 42.0).unwrap(), 3_913_201.424_599_852) < 1e-13);
        assert!(radial(4, 0.0).is_err());
        assert!(radial(0, 0.0).is_err());
    }

    #[test]
    fn radial_explicit_rows() {
        for a1 in [-3.0, -1.0, -0.5, 0.0, 0.7, 2.0, 6.0] {
            let e = libm::exp(-0.5 * a1 * a1);
            let inv = 1.0 / (2.0 * PI * normalization(a1));
            let rows = [
                inv,
                0.5 * e + a1 * inv,
                0.5 * a1 * e + (1.0 + a1 * a1) * inv,
                (1.0 + 0.5 * a1 * a1) * e + (3.0 * a1 + a1 * a1 * a1) * inv,
                (2.5 * a1 + 0.5 * a1 * a1 * a1) * e + (3.0 + 6.0 * a1 * a1 + a1.powi(4)) * inv,
            ];
            for (k, &want) in rows.iter().enumerate() {
                let got = radial(2 * k as u32 + 1, a1).unwrap();
                assert!(rel_diff(got, want) < 1e-11, "a1={a1} S={}: {got} vs {want}", 2 * k + 1);
            }
        }
    }

    #[test]
    fn backward_and_forward_paths_meet() {
        for a1 in [-1.0 - 1e-12, -1.0] {
            let t = RadialTable::new(a1, 12);
            let f = RadialTable::forward(a1, 12);
            for k in 0..=12 {
                assert!((t.ln_radial(k) - f.ln_radial(k)).abs() < 1e-10);
            }
        }
        let b = RadialTable::backward(-2.0, 12);
        let f = RadialTable::forward(-2.0, 12);
        for k in 0..=12 {
            assert!(rel_diff(b.ratio(k), f.ratio(k)) < 1e-9);
        }
    }

    #[test]
    fn coupled_normalization_is_one() {
        for a1 in [-100.0, -6.0, 0.0, 6.0, 42.0, 500.0] {
            assert!((coupled_normalization(a1) - 1.0).abs() < 1e-10, "a1 = {a1}");
            assert_eq!(coupled_moment(0, 0, a1), 1.0);
        }
    }

    #[test]
    fn coupled_moment_values() {
        assert!(rel_diff(coupled_moment(1, 1, 0.0), 0.125) < 1e-14);
        // 2N·R(3,0)·B(3/2,1/2) = 2N · ½ · π/2
        assert!(rel_diff(coupled_moment(1, 0, 0.0), normalization(0.0) * PI / 2.0) < 1e-14);
        for (s, t) in [(1, 0), (2, 1), (3, 3)] {
            let a1 = 500.0;
            let approx = beta_half_integers(s, t) * libm::pow(a1, f64::from(s + t)) / PI;
            assert!(rel_diff(coupled_moment(s, t, a1), approx) < 1e-3);
            assert_eq!(coupled_moment(s, t, a1), coupled_moment(t, s, a1));
        }
    }

    #[test]
    fn deep_below_threshold_matches_gaussian() {
        // For a1 ≪ 0 the coupled density tends to two Gaussians with parameter a1.
        let a1 = -700.0;
        for (s, t) in [(1, 0), (1, 1), (2, 1)] {
            let g = gaussian_even_moment(s, a1).unwrap() * gaussian_even_moment(t, a1).unwrap();
            assert!(rel_diff(coupled_moment(s, t, a1), g) < 1e-2);
        }
    }

    #[test]
    fn sources_agree_on_shared_factors() {
        let f = FactorizedMoments::new(-50.0, -150.0, 4).unwrap();
        let c = CoupledMoments::new(-50.0, -150.0, 4).unwrap();
        let key = MomentKey::new(0, 0, 2, 1);
        assert!(rel_diff(f.moment(key), c.moment(key)) < 1e-15);
        assert!(FactorizedMoments::new(1.0, -3.0, 2).is_err());
        assert!(CoupledMoments::new(1.0, -3.0, 2).is_ok());
    }
}
