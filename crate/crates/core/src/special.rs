//! Special functions and exact combinatorics.
//!
//! Everything here is built on `libm` so that the crate stays `no_std`.

use core::f64::consts::PI;

pub const SQRT_PI: f64 = 1.772_453_850_905_516;
pub const LN_PI: f64 = 1.144_729_885_849_400_2;
pub const LN_2: f64 = core::f64::consts::LN_2;

/// Largest n with n! representable in `u128`.
pub const MAX_EXACT_FACTORIAL: u32 = 34;
/// Largest k with C(2k, k) representable in `u128`.
pub const MAX_EXACT_CENTRAL_BINOMIAL: u32 = 64;

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Finite and accurate for large positive `x`, where `erfc` alone underflows.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // Only reached for moderate |x|; 2·exp(x²) overflows past x ≈ -26.6.
        return 2.0 * libm::exp(x * x) - erfcx(-x);
    }
    if x < 3.0 {
        return libm::exp(x * x) * libm::erfc(x);
    }
    // Continued fraction erfcx(x) = (1/√π) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
    // evaluated with the modified Lentz method.
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * f64::from(k);
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if libm::fabs(delta - 1.0) < 1e-16 {
            break;
        }
    }
    1.0 / (SQRT_PI * f)
}

/// Natural log of `erfc(x)`, finite for arbitrarily large positive `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x > 1.0 {
        libm::log(erfcx(x)) - x * x
    } else {
        libm::log(libm::erfc(x))
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln B(a, b)`; symmetric in its arguments bit-for-bit.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    ln_gamma(lo) + ln_gamma(hi) - ln_gamma(lo + hi)
}

/// Euler Beta function. Direct gamma products for small arguments, log space
/// beyond.
pub fn beta(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo + hi <= 20.0 {
        libm::tgamma(lo) * libm::tgamma(hi) / libm::tgamma(lo + hi)
    } else {
        libm::exp(ln_beta(lo, hi))
    }
}

/// `B(s + 1/2, t + 1/2)` for non-negative integers, via
/// `π (2s)!(2t)! / (4^{s+t} s! t! (s+t)!)` while everything stays exact.
pub fn beta_half_integers(s: u32, t: u32) -> f64 {
    let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
    if lo + hi > 20 {
        return libm::exp(ln_beta(f64::from(lo) + 0.5, f64::from(hi) + 0.5));
    }
    // (2s)!/(s! 4^s) = C(2s,s) s!/4^s, so
    // B = π C(2s,s) C(2t,t) s! t! / (4^{s+t} (s+t)!) = π C(2s,s) C(2t,t) / (4^{s+t} C(s+t, s)).
    let num = central_binomial(lo) as f64 * central_binomial(hi) as f64;
    let den = binomial(lo + hi, lo) as f64 * libm::pow(4.0, f64::from(lo + hi));
    PI * num / den
}

/// n! exactly, for n ≤ 34.
pub fn factorial_exact(n: u32) -> Option<u128> {
    if n > MAX_EXACT_FACTORIAL {
        return None;
    }
    Some((1..=u128::from(n)).product())
}

pub fn ln_factorial(n: u32) -> f64 {
    match factorial_exact(n) {
        Some(v) if n <= 20 => libm::log(v as f64),
        _ => ln_gamma(f64::from(n) + 1.0),
    }
}

pub fn factorial(n: u32) -> f64 {
    match factorial_exact(n) {
        Some(v) => v as f64,
        None => libm::exp(ln_gamma(f64::from(n) + 1.0)),
    }
}

/// Binomial coefficient in exact integer arithmetic.
///
/// # Panics
/// If the result does not fit in `u128` (n well above 120).
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc
            .checked_mul(u128::from(n - i))
            .expect("binomial coefficient overflows u128")
            / u128::from(i + 1);
    }
    acc
}

/// C(2k, k).
pub fn central_binomial(k: u32) -> u128 {
    binomial(2 * k, k)
}

pub fn ln_central_binomial(k: u32) -> f64 {
    if k <= MAX_EXACT_CENTRAL_BINOMIAL {
        libm::log(central_binomial(k) as f64)
    } else {
        let k = f64::from(k);
        ln_gamma(2.0 * k + 1.0) - 2.0 * ln_gamma(k + 1.0)
    }
}

/// `(2k)! / k!`: exact product for k ≤ 20, log-gamma beyond.
pub fn ln_double_ratio(k: u32) -> f64 {
    if k <= 20 {
        let v: u128 = (u128::from(k) + 1..=2 * u128::from(k)).product();
        libm::log(v as f64)
    } else {
        let k = f64::from(k);
        ln_gamma(2.0 * k + 1.0) - ln_gamma(k + 1.0)
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl core::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Relative difference `|a - b| / max(|a|, |b|)`; zero when both are zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = libm::fmax(libm::fabs(a), libm::fabs(b));
    if scale == 0.0 {
        0.0
    } else {
        libm::fabs(a - b) / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_matches_direct_product_in_overlap() {
        for &x in &[0.0, 0.5, 1.0, 2.0, 2.9, 3.1, 4.0, 5.0, 8.0] {
            let direct = libm::exp(x * x) * libm::erfc(x);
            assert!(rel_diff(erfcx(x), direct) < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn erfcx_large_argument_asymptote() {
        // erfcx(x) ~ 1/(x√π) (1 - 1/(2x²) + 3/(4x⁴))
        let x = 1.0e3;
        let asym = (1.0 - 0.5 / (x * x) + 0.75 / (x * x * x * x)) / (x * SQRT_PI);
        assert!(rel_diff(erfcx(x), asym) < 1e-14);
    }

    #[test]
    fn erfcx_negative_argument() {
        let x = -1.5_f64;
        let direct = libm::exp(x * x) * libm::erfc(x);
        assert!(rel_diff(erfcx(x), direct) < 1e-14);
    }

    #[test]
    fn ln_erfc_deep_tail() {
        // erfc(70.71) ≈ 1e-2173; only the log survives.
        let v = ln_erfc(70.710_678_118_654_75);
        let expected = -5000.0 - libm::log(70.710_678_118_654_75 * SQRT_PI)
            + libm::log(1.0 - 1.0 / 10_000.0 + 3.0 / 1.0e8);
        assert!(rel_diff(v, expected) < 1e-12);
    }

    #[test]
    fn beta_half_integers_agree_with_gamma_form() {
        for s in 0..8 {
            for t in 0..8 {
                let a = beta_half_integers(s, t);
                let b = beta(f64::from(s) + 0.5, f64::from(t) + 0.5);
                assert!(rel_diff(a, b) < 1e-13, "s={s} t={t}");
                assert_eq!(a, beta_half_integers(t, s));
            }
        }
        assert!(rel_diff(beta_half_integers(0, 0), PI) < 1e-16);
        assert!(rel_diff(beta_half_integers(1, 0), PI / 2.0) < 1e-16);
        assert!(rel_diff(beta_half_integers(1, 1), PI / 8.0) < 1e-16);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(central_binomial(3), 20);
        assert_eq!(factorial_exact(20), Some(2_432_902_008_176_640_000));
        assert_eq!(factorial_exact(35), None);
        assert!(rel_diff(ln_double_ratio(3), libm::log(120.0)) < 1e-15);
        assert!(rel_diff(ln_double_ratio(25), libm::lgamma(51.0) - libm::lgamma(26.0)) < 1e-14);
        assert!(rel_diff(ln_central_binomial(70), libm::lgamma(141.0) - 2.0 * libm::lgamma(71.0)) < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
