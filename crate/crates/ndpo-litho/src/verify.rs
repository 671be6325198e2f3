//! Cross-checks between the computational paths, each reported with its
//! tolerance and the achieved discrepancy.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use ndpo_core::analytic::{
    fringe_below, log_rate_above_asymptotic, log_rate_below, rate_below, table1_rate_with, visibility_below_closed_form_with,
};
use ndpo_core::engine::{f_decomposition_rate, MomentModel, RateEngine};
use ndpo_core::fringe::{fwhm_about_zero, phase_grid, DEFAULT_PHASE_POINTS};
use ndpo_core::langevin::{estimate_rate, SimConfig};
use ndpo_core::moments::{coupled_normalization, ln_radial};
use ndpo_core::opa::{opa_visibility, r_from_gain};
use ndpo_core::oracle::{quad_ln_radial, rate_quadrature, QuadratureSpec};
use ndpo_core::tables::Tables;
use ndpo_core::DerivedParams;
use serde::Serialize;

use crate::commands::{linspace, run_ensemble};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub description: &'static str,
    pub tolerance: f64,
    pub achieved: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    /// Passes when `achieved ≤ tolerance`.
    fn at_most(name: &'static str, description: &'static str, tolerance: f64, achieved: f64) -> Self {
        Check { name, description, tolerance, achieved, passed: achieved <= tolerance, error: None }
    }

    fn errored(name: &'static str, description: &'static str, tolerance: f64, err: impl fmt::Display) -> Self {
        Check { name, description, tolerance, achieved: f64::NAN, passed: false, error: Some(err.to_string()) }
    }

    fn from_result(
        name: &'static str,
        description: &'static str,
        tolerance: f64,
        achieved: Result<f64, impl fmt::Display>,
    ) -> Self {
        match achieved {
            Ok(a) => Check::at_most(name, description, tolerance, a),
            Err(e) => Check::errored(name, description, tolerance, e),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {:<28} tol={:<9.2e} achieved={:.3e}", self.name, self.tolerance, self.achieved)?;
        if let Some(e) = &self.error {
            write!(f, "  error: {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.failed().next().is_none()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failed().count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b { 0.0 } else { ((a - b) / b).abs() }
}

fn max_of(values: impl IntoIterator<Item = Result<f64, ndpo_core::Error>>) -> Result<f64, ndpo_core::Error> {
    values.into_iter().try_fold(0.0f64, |m, v| v.map(|v| if v.is_nan() { f64::NAN } else { m.max(v) }))
}

pub const R_VALUES: [f64; 3] = [0.15, 0.5, 0.9];

/// 25 phases spread over [0, 2π), off the symmetry points.
pub fn check_phases() -> Vec<f64> {
    (0..25).map(|i| 0.05 + i as f64 * 2.0 * PI / 25.0).collect()
}

pub fn visibility_limits(tables: &Tables) -> Check {
    let achieved = max_of((2..=6).map(|p| {
        let v = visibility_below_closed_form_with(tables, p, 0.999)?.value;
        let limit = tables.visibility_row(p).and_then(|r| r.limit).unwrap_or(f64::NAN);
        let published = [0.20, 0.43, 0.63, 0.77, 0.87][p as usize - 2];
        Ok((v - limit).abs().max((v - published).abs()))
    }));
    Check::from_result("visibility_limits", "tabulated visibility at r = 0.999 vs its limit, p = 2..6", 0.01, achieved)
}

pub fn rate_rows_identity(tables: &Tables) -> Check {
    let phases = check_phases();
    let achieved = max_of((1..=6).flat_map(|p| {
        let phases = &phases;
        R_VALUES.iter().flat_map(move |&r| {
            phases.iter().map(move |&phi| Ok(rel(rate_below(p, r, phi)?, table1_rate_with(tables, p, r, phi)?)))
        })
    }));
    Check::from_result("rate_rows_identity", "general closed form vs tabulated rate rows (relative)", 1e-12, achieved)
}

pub fn visibility_rows_identity(tables: &Tables) -> Check {
    let achieved = max_of((1..=6).flat_map(|p| {
        R_VALUES.iter().map(move |&r| {
            let table = visibility_below_closed_form_with(tables, p, r)?.value;
            let general = fringe_below(p, r, phase_grid(DEFAULT_PHASE_POINTS))?.visibility()?;
            Ok((table - general).abs())
        })
    }));
    Check::from_result("visibility_rows_identity", "tabulated visibility rows vs general-formula fringe", 1e-9, achieved)
}

pub fn engine_vs_closed_form() -> Check {
    let phases = check_phases();
    let achieved = max_of(R_VALUES.iter().flat_map(|&r| {
        let phases = &phases;
        (1..=6).flat_map(move |p| {
            let engine = DerivedParams::from_scaled(1e6, r).and_then(|d| RateEngine::new(p, &d, MomentModel::Factorized));
            phases.iter().map(move |&phi| {
                let e = engine.as_ref().map_err(Clone::clone)?;
                Ok(rel(e.rate(phi), rate_below(p, r, phi)?))
            })
        })
    }));
    Check::from_result("engine_vs_closed_form", "moment contraction vs closed form below threshold (relative)", 1e-10, achieved)
}

pub fn decomposition_vs_closed_form() -> Check {
    let phases = check_phases();
    let achieved = max_of(R_VALUES.iter().flat_map(|&r| {
        let phases = &phases;
        (1..=6).flat_map(move |p| {
            phases.iter().map(move |&phi| Ok(rel(f_decomposition_rate(p, r, phi)?, rate_below(p, r, phi)?)))
        })
    }));
    Check::from_result("decomposition_vs_closed_form", "two-Gaussian decomposition vs closed form (relative)", 1e-10, achieved)
}

/// Normalized fringe deviations under φ → φ + π and φ → −φ.
pub fn fringe_symmetry() -> Check {
    let grid = phase_grid(DEFAULT_PHASE_POINTS);
    let achieved = max_of([0.15, 0.9].into_iter().flat_map(|r| {
        let grid = &grid;
        (2..=6).map(move |p| {
            let f = fringe_below(p, r, grid.clone())?;
            let shifted = fringe_below(p, r, grid.iter().map(|x| x + PI).collect())?;
            let mirrored = fringe_below(p, r, grid.iter().map(|x| -x).collect())?;
            let norm = |v: &[f64]| {
                let m = v.iter().copied().fold(f64::MIN, f64::max);
                v.iter().map(|x| x / m).collect::<Vec<_>>()
            };
            let (a, b, c) = (norm(&f.rates), norm(&shifted.rates), norm(&mirrored.rates));
            Ok(a.iter().zip(&b).zip(&c).map(|((a, b), c)| (a - b).abs().max((a - c).abs())).fold(0.0, f64::max))
        })
    }));
    Check::from_result("fringe_symmetry", "normalized fringes π-periodic and even, p = 2..6, r ∈ {0.15, 0.9}", 1e-12, achieved)
}

/// Achieved value is the largest FWHM(p+1) − FWHM(p); negative means
/// strictly decreasing.
pub fn fwhm_decreasing() -> Check {
    let mut worst = f64::NEG_INFINITY;
    for r in [0.15, 0.9] {
        let widths: Vec<f64> = (2..=6).map(|p| fwhm_about_zero(|phi| log_rate_below(p, r, phi).unwrap_or(f64::NAN))).collect();
        for w in widths.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    Check { passed: worst < 0.0, ..Check::at_most("fwhm_decreasing", "FWHM strictly decreasing in p at r ∈ {0.15, 0.9}", 0.0, worst) }
}

pub fn above_shape_invariance() -> Check {
    let pairs = [(1.5, 1e6), (3.0, 1e8)];
    let grid = phase_grid(DEFAULT_PHASE_POINTS);
    let achieved = max_of((2..=6).map(|p| {
        let shape = |(r, n0): (f64, f64)| -> Result<Vec<f64>, ndpo_core::Error> {
            let d = DerivedParams::from_scaled(n0, r)?;
            let logs = grid.iter().map(|&phi| log_rate_above_asymptotic(p, &d, phi)).collect::<Result<Vec<_>, _>>()?;
            let m = logs.iter().copied().fold(f64::MIN, f64::max);
            Ok(logs.iter().map(|l| (l - m).exp()).collect())
        };
        let (a, b) = (shape(pairs[0])?, shape(pairs[1])?);
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }));
    Check::from_result("above_shape_invariance", "normalized far-above fringes at two (r, n0) pairs", 1e-12, achieved)
}

pub fn threshold_visibilities() -> Result<Vec<(f64, f64)>, ndpo_core::Error> {
    linspace(0.97, 1.03, 61)
        .into_iter()
        .map(|r| {
            let d = DerivedParams::from_scaled(1e6, r)?;
            let v = RateEngine::new(2, &d, MomentModel::Coupled)?
                .fringe(d.classify(ndpo_core::params::DEFAULT_BAND).tag, phase_grid(DEFAULT_PHASE_POINTS))
                .visibility()?;
            Ok((r, v))
        })
        .collect()
}

/// Largest step-to-step increase of the p = 2 visibility across the
/// threshold, and the distance of the endpoint from 0.2.
pub fn threshold_transition() -> [Check; 2] {
    const MONO: (&str, &str) = ("threshold_monotone", "p = 2 moment-engine visibility non-increasing over r = 0.97..1.03, n0 = 1e6");
    const END: (&str, &str) = ("threshold_endpoint", "p = 2 moment-engine visibility at r = 1.03 vs 0.2");
    match threshold_visibilities() {
        Ok(v) => {
            let rise = v.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
            let end = (v.last().expect("non-empty").1 - 0.2).abs();
            [Check::at_most(MONO.0, MONO.1, 1e-12, rise), Check::at_most(END.0, END.1, 0.01, end)]
        }
        Err(e) => [Check::errored(MONO.0, MONO.1, 1e-12, &e), Check::errored(END.0, END.1, 0.01, e)],
    }
}

pub fn opa_correspondence() -> Check {
    let grid = phase_grid(DEFAULT_PHASE_POINTS);
    let achieved = max_of((2..=6).flat_map(|p| {
        let grid = &grid;
        [0.1, 1.0, 3.0].into_iter().map(move |g| {
            let opa = opa_visibility(p, g, grid.clone())?;
            let ndpo = fringe_below(p, r_from_gain(g)?, grid.clone())?.visibility()?;
            Ok((opa - ndpo).abs())
        })
    }));
    Check::from_result("opa_correspondence", "amplifier vs oscillator visibilities at r = tanh G", 1e-12, achieved)
}

pub fn opa_floor() -> Check {
    let achieved = opa_visibility(2, 6.0, phase_grid(DEFAULT_PHASE_POINTS)).map(|v| (v - 0.2).abs());
    Check::from_result("opa_floor", "p = 2 amplifier visibility at G = 6 vs the 0.2 floor", 0.01, achieved)
}

pub const ORACLE_A1: [f64; 7] = [-100.0, -5.0, -1.0, 0.0, 5.0, 42.0, 500.0];

pub fn radial_vs_quadrature() -> Check {
    let spec = QuadratureSpec::default();
    let achieved = max_of(ORACLE_A1.iter().flat_map(|&a1| {
        let spec = &spec;
        (1..=13).step_by(2).map(move |s| Ok((ln_radial(s, a1)? - quad_ln_radial(s, a1, spec)?).abs()))
    }));
    Check::from_result("radial_vs_quadrature", "radial recursion vs quadrature, odd S ≤ 13, 7 values of a1 (relative)", 1e-8, achieved)
}

pub fn coupled_normalization_check() -> Check {
    let achieved = ORACLE_A1.iter().map(|&a1| (coupled_normalization(a1) - 1.0).abs()).fold(0.0, f64::max);
    Check::at_most("coupled_normalization", "coupled radial-angular density integrates to 1", 1e-10, achieved)
}

pub fn quadrature_vs_closed_form() -> Check {
    let achieved = DerivedParams::from_scaled(1e6, 0.5).and_then(|d| {
        max_of([0.0, 0.4, FRAC_PI_2].into_iter().map(|phi| Ok(rel(rate_quadrature(2, &d, phi)?, rate_below(2, 0.5, phi)?))))
    });
    Check::from_result("quadrature_vs_closed_form", "full-distribution quadrature rate vs closed form, p = 2, r = 0.5", 1e-3, achieved)
}

/// Ensemble used by the Monte Carlo gate: r = 0.5, n0 = 1e6.
pub fn montecarlo_gate_config() -> SimConfig {
    SimConfig { n_trajectories: 10_000, seed: 20_241_018, ..SimConfig::default() }
}

/// `|mean − exact| / stderr` for I¹, I²(0), I²(π/2), plus the discard
/// fraction.
pub fn montecarlo_gate(config: &SimConfig) -> Vec<Check> {
    const NAMES: [(&str, &str, u32, f64, f64); 3] = [
        ("mc_rate_p1", "Monte Carlo ⟨α3α3*⟩ vs 1/3 (standard errors)", 1, 0.0, 1.0 / 3.0),
        ("mc_rate_p2_phi0", "Monte Carlo p = 2 rate at φ = 0 vs 2/3 (standard errors)", 2, 0.0, 2.0 / 3.0),
        ("mc_rate_p2_phi_half_pi", "Monte Carlo p = 2 rate at φ = π/2 vs 2/9 (standard errors)", 2, FRAC_PI_2, 2.0 / 9.0),
    ];
    const DISCARD: (&str, &str) = ("mc_discards", "fraction of diverged trajectories");
    let ensemble = DerivedParams::from_scaled(1e6, 0.5).map_err(Into::into).and_then(|d| run_ensemble(&d, config));
    let ensemble = match ensemble {
        Ok(e) => e,
        Err(e) => {
            let mut out: Vec<Check> = NAMES.iter().map(|n| Check::errored(n.0, n.1, 3.0, &e)).collect();
            out.push(Check::errored(DISCARD.0, DISCARD.1, 0.01, e));
            return out;
        }
    };
    let mut out: Vec<Check> = NAMES
        .iter()
        .map(|&(name, desc, p, phi, exact)| {
            Check::from_result(name, desc, 3.0, estimate_rate(p, phi, &ensemble).map(|e| (e.mean - exact).abs() / e.stderr))
        })
        .collect();
    let frac = ensemble.discard_fraction();
    out.push(Check { passed: frac < 0.01, ..Check::at_most(DISCARD.0, DISCARD.1, 0.01, frac) });
    out
}

pub fn run(level: Level, tables: &Tables) -> Report {
    let mut checks = vec![
        visibility_limits(tables),
        rate_rows_identity(tables),
        visibility_rows_identity(tables),
        engine_vs_closed_form(),
        decomposition_vs_closed_form(),
        fringe_symmetry(),
        fwhm_decreasing(),
        above_shape_invariance(),
    ];
    checks.extend(threshold_transition());
    checks.push(opa_correspondence());
    checks.push(opa_floor());
    if level == Level::Full {
        checks.push(radial_vs_quadrature());
        checks.push(coupled_normalization_check());
        checks.push(quadrature_vs_closed_form());
        checks.extend(montecarlo_gate(&montecarlo_gate_config()));
    }
    Report { level, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndpo_core::tables::{PowerTerm, PUBLISHED};

    #[test]
    fn fast_suite_passes() {
        let report = run(Level::Fast, &PUBLISHED);
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn tampered_visibility_row_is_caught() {
        let mut t = PUBLISHED;
        t.visibilities[1].numerator = Some(PowerTerm { coef: 3, r_power: 2 });
        let report = run(Level::Fast, &t);
        let failed: Vec<_> = report.failed().map(|c| c.name).collect();
        assert!(failed.contains(&"visibility_rows_identity"), "{report}");
        assert!(failed.contains(&"visibility_limits"), "{report}");
    }
}
