//! Quadrature oracle.
//!
//! Evaluates the radial integrals and the moments of the full stationary
//! density
//!
//! ```text
//! P(u) ∝ exp{a1 X + a2 Y − [(X + Y)² + 4XY]/2},   X = u1² + u3²,  Y = u2² + u4²,
//! ```
//!
//! by direct numerical integration, independent of the recursions and
//! closed forms it checks. Rotational symmetry in the `(u1, u3)` and
//! `(u2, u4)` planes reduces every moment to
//!
//! ```text
//! ⟨u1^{2s} u2^{2m} u3^{2t} u4^{2n}⟩ = B(s+½,t+½) B(m+½,n+½) / π² · I(s+t, m+n) / I(0, 0),
//! I(j, k) = ∫∫_{x,y≥0} x^j y^k exp(a1 x + a2 y − (x² + 6xy + y²)/2) dx dy.
//! ```

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::absorber::MAX_ORDER;
use crate::engine::RateEngine;
use crate::error::{Error, Result};
use crate::moments::{MomentKey, MomentSource};
use crate::params::DerivedParams;
use crate::special::{CompensatedSum, beta_half_integers};

/// Panel limit per integration axis.
pub const MAX_PANELS: usize = 2048;

/// Highest absorber order the oracle is meant for.
pub const MAX_ORACLE_ORDER: u32 = 4;
const _: () = assert!(MAX_ORACLE_ORDER <= MAX_ORDER);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(rename_all = "snake_case"))]
pub enum QuadratureRule {
    /// 21-point Kronrod extension of the 10-point Gauss rule, globally
    /// adaptive bisection.
    GaussKronrod21,
}

impl QuadratureRule {
    pub fn nodes(&self) -> usize {
        21
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuadratureSpec {
    /// Radial cut-off for [`quad_radial`]; `None` picks
    /// `√(max(a1, 0) + 12) + 12`.
    pub upper_cut: Option<f64>,
    /// Drop of the log-integrand, relative to its peak, at which the 2-D
    /// moment integrals are truncated.
    pub tail_exponent: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            upper_cut: None,
            tail_exponent: 80.0,
            rel_tol: 1e-12,
            max_panels: 512,
            rule: QuadratureRule::GaussKronrod21,
        }
    }
}

impl QuadratureSpec {
    fn validated(&self) -> Result<Self> {
        if !(self.rel_tol > 0.0) || self.max_panels == 0 || self.max_panels > MAX_PANELS {
            return Err(Error::domain(alloc::format!(
                "quadrature spec needs rel_tol > 0 and 1 ≤ max_panels ≤ {MAX_PANELS}"
            )));
        }
        if let Some(cut) = self.upper_cut {
            if !(cut > 0.0 && cut.is_finite()) {
                return Err(Error::domain("upper_cut must be finite and positive"));
            }
        }
        if !(self.tail_exponent > 0.0 && self.tail_exponent.is_finite()) {
            return Err(Error::domain("tail_exponent must be finite and positive"));
        }
        Ok(*self)
    }

    /// Same spec with every truncation doubled.
    pub fn with_doubled_cut(&self, a1: f64) -> Self {
        QuadratureSpec {
            upper_cut: Some(2.0 * self.upper_cut.unwrap_or_else(|| default_cut(a1))),
            tail_exponent: 2.0 * self.tail_exponent,
            ..*self
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

/// Kronrod estimate and |Kronrod − Gauss| on `[a, b]`.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for i in 0..10 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, libm::fabs((kronrod - gauss) * h))
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    let spec = spec.validated()?;
    if a == b {
        return Ok(0.0);
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(spec.max_panels);
    let (v, e) = gk21(&f, a, b);
    panels.push((a, b, v, e));
    loop {
        let total: CompensatedSum = panels.iter().map(|p| p.2).collect();
        let total = total.value();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::domain("integrand is not finite on the integration range"));
        }
        if err <= spec.rel_tol * libm::fabs(total) || err == 0.0 {
            return Ok(total);
        }
        if panels.len() >= spec.max_panels {
            return Err(Error::Convergence {
                achieved: err / libm::fabs(total),
                requested: spec.rel_tol,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.3.total_cmp(&y.1.3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Panel can no longer be split in double precision.
            return Err(Error::Convergence { achieved: err / libm::fabs(total), requested: spec.rel_tol });
        }
        let (v1, e1) = gk21(&f, lo, mid);
        let (v2, e2) = gk21(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

fn default_cut(a1: f64) -> f64 {
    libm::sqrt(libm::fmax(a1, 0.0) + 12.0) + 12.0
}

fn check_odd(big_s: u32) -> Result<()> {
    if big_s % 2 == 0 {
        return Err(Error::domain(alloc::format!("radial order must be odd and positive, got {big_s}")));
    }
    Ok(())
}

/// `ln ∫₀^cut ρ^S e^{−(ρ²−a1)²/2} dρ`. For `a1 < 0` the factor `e^{−a1²/2}`
/// is taken out of the integrand so deep below threshold stays finite.
pub fn quad_ln_radial(big_s: u32, a1: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_odd(big_s)?;
    let cut = spec.upper_cut.unwrap_or_else(|| default_cut(a1));
    let shift = if a1 < 0.0 { 0.5 * a1 * a1 } else { 0.0 };
    let s = f64::from(big_s);
    let f = |rho: f64| {
        let x = rho * rho;
        // −(x − a1)²/2 + shift, arranged to avoid cancellation.
        let e = if a1 < 0.0 { x * (a1 - 0.5 * x) } else { -0.5 * (x - a1) * (x - a1) };
        libm::exp(s * libm::log(rho) + e)
    };
    // Far above threshold the peak at ρ = √a1 is narrow compared with the
    // range; break the range around it so no panel can step over it.
    let mut breaks = alloc::vec![0.0];
    if a1 > 0.0 {
        let w = libm::sqrt(2.0 * spec.tail_exponent);
        for x in [a1 - w, a1, a1 + w] {
            let rho = libm::sqrt(libm::fmax(x, 0.0));
            if rho > *breaks.last().expect("non-empty") && rho < cut {
                breaks.push(rho);
            }
        }
    }
    breaks.push(cut);
    let mut value = 0.0;
    for pair in breaks.windows(2) {
        value += integrate(f, pair[0], pair[1], spec)?;
    }
    Ok(libm::log(value) - shift)
}

/// `R(S, a1)` by adaptive quadrature.
pub fn quad_radial(big_s: u32, a1: f64, spec: &QuadratureSpec) -> Result<f64> {
    quad_ln_radial(big_s, a1, spec).map(libm::exp)
}

/// `ln I(j, k) + h`, where `h` is the peak of `a1 x − x²/2` over `x ≥ 0`
/// (common to every `(j, k)`).
fn ln_full_integral(j: u32, k: u32, a1: f64, a2: f64, spec: &QuadratureSpec) -> Result<f64> {
    let big_l = spec.tail_exponent;
    let x_star = libm::fmax(a1, 0.0);
    let h_star = a1 * x_star - 0.5 * x_star * x_star;
    let (x_lo, x_hi) = if a1 > 0.0 {
        (libm::fmax(0.0, a1 - libm::sqrt(2.0 * big_l)), a1 + libm::sqrt(2.0 * big_l))
    } else {
        (0.0, -libm::fabs(a1) + libm::sqrt(a1 * a1 + 2.0 * big_l))
    };
    let (jf, kf) = (f64::from(j), f64::from(k));
    let inner = |x: f64| -> Result<f64> {
        // y-exponent −y²/2 − b y with b = 3x − a2 > 0.
        let b = 3.0 * x - a2;
        let y_hi = -b + libm::sqrt(b * b + 2.0 * big_l);
        integrate(
            |y| if kf == 0.0 { libm::exp(-0.5 * y * y - b * y) } else { libm::exp(kf * libm::log(y) - 0.5 * y * y - b * y) },
            0.0,
            y_hi,
            spec,
        )
    };
    // The outer integrand is evaluated inside a closure that cannot return
    // errors; the first inner failure is remembered and reported.
    let failure = core::cell::Cell::new(None);
    let value = integrate(
        |x| {
            let xf = if jf == 0.0 { 0.0 } else { jf * libm::log(x) };
            let outer = libm::exp(xf + a1 * x - 0.5 * x * x - h_star);
            if outer == 0.0 {
                return 0.0;
            }
            match inner(x) {
                Ok(v) => outer * v,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        },
        x_lo,
        x_hi,
        spec,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(libm::log(value))
}

/// Moments of the full stationary density, tabulated up to a total order.
#[derive(Debug, Clone)]
pub struct FullDistributionMoments {
    max_order: u32,
    /// `ln I(j,k) − ln I(0,0)`, indexed `[j][k]`.
    ln_ratio: Vec<Vec<f64>>,
}

impl FullDistributionMoments {
    pub fn new(derived: &DerivedParams, max_order: u32, spec: &QuadratureSpec) -> Result<Self> {
        let (a1, a2) = (derived.a1(), derived.a2());
        let base = ln_full_integral(0, 0, a1, a2, spec)?;
        let mut ln_ratio = Vec::with_capacity(max_order as usize + 1);
        for j in 0..=max_order {
            let mut row = Vec::with_capacity((max_order - j) as usize + 1);
            for k in 0..=(max_order - j) {
                let v = if j == 0 && k == 0 { 0.0 } else { ln_full_integral(j, k, a1, a2, spec)? - base };
                row.push(v);
            }
            ln_ratio.push(row);
        }
        Ok(FullDistributionMoments { max_order, ln_ratio })
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn get(&self, key: MomentKey) -> f64 {
        let (j, k) = (key.s + key.t, key.m + key.n);
        assert!(j + k <= self.max_order, "moment order {} beyond tabulated {}", j + k, self.max_order);
        let angular = beta_half_integers(key.s, key.t) * beta_half_integers(key.m, key.n) / (PI * PI);
        angular * libm::exp(self.ln_ratio[j as usize][k as usize])
    }
}

impl MomentSource for FullDistributionMoments {
    fn moment(&self, key: MomentKey) -> f64 {
        self.get(key)
    }
}

/// `⟨u1^{2s} u2^{2m} u3^{2t} u4^{2n}⟩` under the full stationary density.
pub fn quad_moment_full(
    s: u32,
    t: u32,
    m: u32,
    n: u32,
    derived: &DerivedParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let key = MomentKey::new(s, t, m, n);
    if key.order() > 2 * MAX_ORACLE_ORDER {
        return Err(Error::Resource { p: key.order(), limit: 2 * MAX_ORACLE_ORDER });
    }
    let (a1, a2) = (derived.a1(), derived.a2());
    let ln_num = ln_full_integral(s + t, m + n, a1, a2, spec)?;
    let ln_den = ln_full_integral(0, 0, a1, a2, spec)?;
    let angular = beta_half_integers(s, t) * beta_half_integers(m, n) / (PI * PI);
    Ok(angular * libm::exp(ln_num - ln_den))
}

/// Rate engine contracted against full-distribution moments.
pub fn quadrature_engine(p: u32, derived: &DerivedParams, spec: &QuadratureSpec) -> Result<RateEngine> {
    if p > MAX_ORACLE_ORDER {
        return Err(Error::Resource { p, limit: MAX_ORACLE_ORDER });
    }
    let moments = FullDistributionMoments::new(derived, p, spec)?;
    RateEngine::from_moments(p, derived, &moments)
}

/// `⟨α3^p α3*^p⟩` under the full stationary density, `p ≤ 4`.
pub fn rate_quadrature(p: u32, derived: &DerivedParams, phi: f64) -> Result<f64> {
    Ok(quadrature_engine(p, derived, &QuadratureSpec::default())?.rate(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{coupled_moment, gaussian_even_moment, ln_normalization, ln_radial};
    use crate::special::rel_diff;

    #[test]
    fn integrates_polynomials_and_gaussians() {
        let spec = QuadratureSpec::default();
        assert!(rel_diff(integrate(|x| x * x, 0.0, 3.0, &spec).unwrap(), 9.0) < 1e-15);
        let g = integrate(|x| libm::exp(-x * x), 0.0, 12.0, &spec).unwrap();
        assert!(rel_diff(g, libm::sqrt(PI) / 2.0) < 1e-13);
    }

    #[test]
    fn convergence_failure_is_reported() {
        let spec = QuadratureSpec { max_panels: 4, ..QuadratureSpec::default() };
        let err = integrate(|x| 1.0 / libm::sqrt(x), 0.0, 1.0, &spec).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn radial_closed_forms() {
        let spec = QuadratureSpec::default();
        assert!(rel_diff(quad_radial(1, 0.0, &spec).unwrap(), libm::sqrt(PI / 8.0)) < 1e-12);
        assert!(rel_diff(quad_radial(3, 0.0, &spec).unwrap(), 0.5) < 1e-12);
        assert!(rel_diff(quad_radial(5, 42.0, &spec).unwrap(), libm::exp(ln_radial(5, 42.0).unwrap())) < 1e-8);
        assert!(quad_radial(2, 0.0, &spec).is_err());
    }

    #[test]
    fn deep_below_threshold_normalization() {
        let spec = QuadratureSpec::default();
        let ln_n = -libm::log(2.0 * PI) - quad_ln_radial(1, -100.0, &spec).unwrap();
        assert!((ln_n - ln_normalization(-100.0)).abs() < 1e-8);
    }

    #[test]
    fn truncation_doubling_is_harmless() {
        let spec = QuadratureSpec::default();
        for a1 in [-5.0, 0.0, 42.0] {
            let a = quad_ln_radial(9, a1, &spec).unwrap();
            let b = quad_ln_radial(9, a1, &spec.with_doubled_cut(a1)).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        let d = DerivedParams::from_scaled(1e6, 1.0).unwrap();
        let a = quad_moment_full(1, 1, 0, 0, &d, &spec).unwrap();
        let b = quad_moment_full(1, 1, 0, 0, &d, &spec.with_doubled_cut(d.a1())).unwrap();
        assert!(rel_diff(a, b) < 1e-10);
    }

    #[test]
    fn full_moments_against_approximations() {
        let spec = QuadratureSpec::default();
        let below = DerivedParams::from_scaled(1e6, 0.5).unwrap();
        assert_eq!(quad_moment_full(0, 0, 0, 0, &below, &spec).unwrap(), 1.0);
        let q = quad_moment_full(1, 0, 0, 0, &below, &spec).unwrap();
        assert!(rel_diff(q, gaussian_even_moment(1, below.a1()).unwrap()) < 1e-4);
        let at = DerivedParams::from_scaled(1e6, 1.0).unwrap();
        let q = quad_moment_full(1, 1, 0, 0, &at, &spec).unwrap();
        assert!(rel_diff(q, coupled_moment(1, 1, 0.0)) < 1e-3);
    }

    #[test]
    fn oracle_rate_matches_closed_form() {
        let d = DerivedParams::from_scaled(1e6, 0.5).unwrap();
        let q = rate_quadrature(2, &d, 0.0).unwrap();
        assert!(rel_diff(q, 2.0 / 3.0) < 1e-3);
        let e = quadrature_engine(1, &d, &QuadratureSpec::default()).unwrap();
        let c = e.cos_polynomial();
        assert!(c[1].abs() < 1e-6 * c[0].abs());
        assert!(rate_quadrature(5, &d, 0.0).is_err());
    }
}
