//! Exact expansion of the absorber intensity `(α3 α3*)^p` in the
//! pseudo-quadratures.
//!
//! With `C = cos(φ/2)`, `S = sin(φ/2)`,
//!
//! ```text
//! α3 α3* = r√(2n0) · [C²(u1² − u2²) + S²(u3² − u4²) + 2i·CS(u2u3 − u1u4)],
//! ```
//!
//! so after removing `(r√(2n0))^p` every coefficient is a Gaussian integer
//! and the expansion is carried out exactly.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moments::MomentKey;
use crate::special::binomial;

/// Largest order the expansion accepts.
pub const MAX_ORDER: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GaussianInt {
    pub re: i128,
    pub im: i128,
}

impl GaussianInt {
    pub const fn new(re: i128, im: i128) -> Self {
        GaussianInt { re, im }
    }

    fn mul(self, other: Self) -> Self {
        GaussianInt::new(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )
    }

    fn add(self, other: Self) -> Self {
        GaussianInt::new(self.re + other.re, self.im + other.im)
    }

    fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }
}

/// `coef · u1^e1 u2^e2 u3^e3 u4^e4 · cos^a(φ/2) sin^b(φ/2)`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbsorberTerm {
    pub exponents: [u32; 4],
    pub cos_half_power: u32,
    pub sin_half_power: u32,
    pub coef: GaussianInt,
}

impl AbsorberTerm {
    /// Terms with an odd exponent average to zero under any distribution
    /// symmetric in each variable.
    pub fn vanishes_on_contraction(&self) -> bool {
        self.exponents.iter().any(|e| e % 2 == 1)
    }

    /// `MomentKey` of a surviving term.
    pub fn moment_key(&self) -> Option<MomentKey> {
        if self.vanishes_on_contraction() {
            return None;
        }
        let [e1, e2, e3, e4] = self.exponents;
        Some(MomentKey { s: e1 / 2, m: e2 / 2, t: e3 / 2, n: e4 / 2 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorberPolynomial {
    pub p: u32,
    pub terms: Vec<AbsorberTerm>,
}

type Monomial = ([u32; 4], u32, u32);

fn base_terms() -> [(Monomial, GaussianInt); 6] {
    [
        (([2, 0, 0, 0], 2, 0), GaussianInt::new(1, 0)),
        (([0, 2, 0, 0], 2, 0), GaussianInt::new(-1, 0)),
        (([0, 0, 2, 0], 0, 2), GaussianInt::new(1, 0)),
        (([0, 0, 0, 2], 0, 2), GaussianInt::new(-1, 0)),
        (([0, 1, 1, 0], 1, 1), GaussianInt::new(0, 2)),
        (([1, 0, 0, 1], 1, 1), GaussianInt::new(0, -2)),
    ]
}

/// Expands `[α3 α3* / (r√(2n0))]^p`. Every term is kept, including those
/// that vanish on contraction.
pub fn expand_absorber_power(p: u32) -> Result<AbsorberPolynomial> {
    if p == 0 {
        return Err(Error::domain("absorber order p must be at least 1"));
    }
    if p > MAX_ORDER {
        return Err(Error::Resource { p, limit: MAX_ORDER });
    }
    let base = base_terms();
    let mut acc: BTreeMap<Monomial, GaussianInt> = BTreeMap::new();
    acc.insert(([0; 4], 0, 0), GaussianInt::new(1, 0));
    for _ in 0..p {
        let mut next: BTreeMap<Monomial, GaussianInt> = BTreeMap::new();
        for (&(e, c, s), &coef) in &acc {
            for &((be, bc, bs), bcoef) in &base {
                let key = ([e[0] + be[0], e[1] + be[1], e[2] + be[2], e[3] + be[3]], c + bc, s + bs);
                let slot = next.entry(key).or_default();
                *slot = slot.add(coef.mul(bcoef));
            }
        }
        next.retain(|_, v| !v.is_zero());
        acc = next;
    }
    let terms = acc
        .into_iter()
        .map(|((exponents, cos_half_power, sin_half_power), coef)| AbsorberTerm {
            exponents,
            cos_half_power,
            sin_half_power,
            coef,
        })
        .collect();
    Ok(AbsorberPolynomial { p, terms })
}

impl AbsorberPolynomial {
    /// Numeric value at real `u` and phase `phi`, without the `(r√(2n0))^p`
    /// prefactor.
    pub fn evaluate(&self, u: [f64; 4], phi: f64) -> Complex64 {
        let (c, s) = (libm::cos(0.5 * phi), libm::sin(0.5 * phi));
        let mut re = crate::special::CompensatedSum::default();
        let mut im = crate::special::CompensatedSum::default();
        for term in &self.terms {
            let mut mono = powi(c, term.cos_half_power) * powi(s, term.sin_half_power);
            for (x, &e) in u.iter().zip(&term.exponents) {
                mono *= powi(*x, e);
            }
            re.add(term.coef.re as f64 * mono);
            im.add(term.coef.im as f64 * mono);
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn surviving_terms(&self) -> impl Iterator<Item = &AbsorberTerm> {
        self.terms.iter().filter(|t| !t.vanishes_on_contraction())
    }
}

/// Surviving moments of `(α3 α3*)^p` with their `φ` dependence rewritten
/// as integer polynomials in `cos φ`:
///
/// ```text
/// [α3 α3*]^p → (r√(2n0))^p · 2^{−p} · Σ_key ⟨key⟩ · Σ_j coefs[j] cos^j φ
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTable {
    pub p: u32,
    pub entries: Vec<(MomentKey, Vec<i128>)>,
}

pub fn contraction_table(poly: &AbsorberPolynomial) -> ContractionTable {
    let p = poly.p;
    let mut map: BTreeMap<MomentKey, Vec<i128>> = BTreeMap::new();
    for term in poly.surviving_terms() {
        let key = term.moment_key().expect("surviving term");
        assert_eq!(key.order(), p, "moment exponents must add up to the absorber order");
        assert_eq!(term.coef.im, 0, "surviving coefficients are real");
        let (a, b) = (term.cos_half_power, term.sin_half_power);
        assert!(a % 2 == 0 && b % 2 == 0 && a + b == 2 * p);
        // cos²(φ/2) = (1 + x)/2, sin²(φ/2) = (1 − x)/2 with x = cos φ.
        let cos_poly = mul_poly(&binomial_poly(a / 2, 1), &binomial_poly(b / 2, -1));
        let slot = map.entry(key).or_insert_with(|| vec![0; p as usize + 1]);
        for (j, c) in cos_poly.iter().enumerate() {
            slot[j] += term.coef.re * c;
        }
    }
    map.retain(|_, v| v.iter().any(|&c| c != 0));
    ContractionTable { p, entries: map.into_iter().collect() }
}

/// Coefficients of `(1 + sign·x)^k`.
fn binomial_poly(k: u32, sign: i128) -> Vec<i128> {
    (0..=k)
        .map(|j| {
            let c = binomial(k, j) as i128;
            if sign < 0 && j % 2 == 1 { -c } else { c }
        })
        .collect()
}

fn mul_poly(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn powi(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}
