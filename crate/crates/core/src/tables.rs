//! Explicit below-threshold rows for p = 1..6: absorption rates and fringe
//! visibilities, stored as integer coefficient data so they can be evaluated,
//! printed, and cross-checked against the general formula.

/// `coef · cos^{cos_power}(φ) · r^{r_power}`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateTerm {
    pub coef: u32,
    pub cos_power: u32,
    pub r_power: u32,
}

/// `scale · r^{r_power} / (1 − r²)^p · Σ bracket`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub p: u32,
    pub scale: u32,
    pub r_power: u32,
    pub bracket: &'static [RateTerm],
    pub formula: &'static str,
}

impl RateRow {
    pub fn evaluate(&self, r: f64, phi: f64) -> f64 {
        let c = libm::cos(phi);
        let bracket: f64 = self
            .bracket
            .iter()
            .map(|t| f64::from(t.coef) * powi(c, t.cos_power) * powi(r, t.r_power))
            .sum();
        let one_minus = (1.0 - r) * (1.0 + r);
        f64::from(self.scale) * powi(r, self.r_power) / powi(one_minus, self.p) * bracket
    }
}

/// `coef · r^{r_power}`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerTerm {
    pub coef: u32,
    pub r_power: u32,
}

/// `V(r) = 1 − numerator / Σ denominator`; `numerator = None` encodes the
/// flat p = 1 row, `V = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityRow {
    pub p: u32,
    pub numerator: Option<PowerTerm>,
    pub denominator: &'static [PowerTerm],
    pub formula: &'static str,
    /// `V(1⁻)` rounded to two decimals; `None` for p = 1.
    pub limit: Option<f64>,
}

impl VisibilityRow {
    pub fn evaluate(&self, r: f64) -> f64 {
        let Some(num) = self.numerator else {
            return 0.0;
        };
        let den: f64 = self
            .denominator
            .iter()
            .map(|t| f64::from(t.coef) * powi(r, t.r_power))
            .sum();
        1.0 - f64::from(num.coef) * powi(r, num.r_power) / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tables {
    pub rates: [RateRow; 6],
    pub visibilities: [VisibilityRow; 6],
}

impl Tables {
    pub fn rate_row(&self, p: u32) -> Option<&RateRow> {
        self.rates.iter().find(|row| row.p == p)
    }

    pub fn visibility_row(&self, p: u32) -> Option<&VisibilityRow> {
        self.visibilities.iter().find(|row| row.p == p)
    }
}

const fn rt(coef: u32, cos_power: u32, r_power: u32) -> RateTerm {
    RateTerm { coef, cos_power, r_power }
}

const fn pt(coef: u32, r_power: u32) -> PowerTerm {
    PowerTerm { coef, r_power }
}

pub const PUBLISHED: Tables = Tables {
    rates: [
        RateRow { p: 1, scale: 1, r_power: 2, bracket: &[rt(1, 0, 0)], formula: "r²/(1−r²)" },
        RateRow {
            p: 2,
            scale: 1,
            r_power: 2,
            bracket: &[rt(1, 2, 0), rt(2, 0, 2)],
            formula: "r²/(1−r²)² · [cos²(φ) + 2r²]",
        },
        RateRow {
            p: 3,
            scale: 3,
            r_power: 4,
            bracket: &[rt(3, 2, 0), rt(2, 0, 2)],
            formula: "3r⁴/(1−r²)³ · [3cos²(φ) + 2r²]",
        },
        RateRow {
            p: 4,
            scale: 3,
            r_power: 4,
            bracket: &[rt(3, 4, 0), rt(24, 2, 2), rt(8, 0, 4)],
            formula: "3r⁴/(1−r²)⁴ · [3cos⁴(φ) + 24r²cos²(φ) + 8r⁴]",
        },
        RateRow {
            p: 5,
            scale: 15,
            r_power: 6,
            bracket: &[rt(15, 4, 0), rt(40, 2, 2), rt(8, 0, 4)],
            formula: "15r⁶/(1−r²)⁵ · [15cos⁴(φ) + 40r²cos²(φ) + 8r⁴]",
        },
        RateRow {
            p: 6,
            scale: 45,
            r_power: 6,
            bracket: &[rt(5, 6, 0), rt(90, 4, 2), rt(120, 2, 4), rt(16, 0, 6)],
            formula: "45r⁶/(1−r²)⁶ · [5cos⁶(φ) + 90r²cos⁴(φ) + 120r⁴cos²(φ) + 16r⁶]",
        },
    ],
    visibilities: [
        VisibilityRow { p: 1, numerator: None, denominator: &[], formula: "0", limit: None },
        VisibilityRow {
            p: 2,
            numerator: Some(pt(4, 2)),
            denominator: &[pt(1, 0), pt(4, 2)],
            formula: "1 − 4r²/[1 + 4r²]",
            limit: Some(0.20),
        },
        VisibilityRow {
            p: 3,
            numerator: Some(pt(4, 2)),
            denominator: &[pt(3, 0), pt(4, 2)],
            formula: "1 − 4r²/[3 + 4r²]",
            limit: Some(0.43),
        },
        VisibilityRow {
            p: 4,
            numerator: Some(pt(16, 4)),
            denominator: &[pt(3, 0), pt(24, 2), pt(16, 4)],
            formula: "1 − 16r⁴/[3 + 24r² + 16r⁴]",
            limit: Some(0.63),
        },
        VisibilityRow {
            p: 5,
            numerator: Some(pt(16, 4)),
            denominator: &[pt(15, 0), pt(40, 2), pt(16, 4)],
            formula: "1 − 16r⁴/[15 + 40r² + 16r⁴]",
            limit: Some(0.77),
        },
        VisibilityRow {
            p: 6,
            numerator: Some(pt(32, 6)),
            denominator: &[pt(5, 0), pt(90, 2), pt(120, 4), pt(32, 6)],
            formula: "1 − 32r⁶/[5 + 90r² + 120r⁴ + 32r⁶]",
            limit: Some(0.87),
        },
    ],
};

fn powi(x: f64, n: u32) -> f64 {
    libm::pow(x, f64::from(n))
}
