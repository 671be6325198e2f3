//! Sampled fringe patterns and their visibility.
//!
//! Rates are handled through their logarithm: above threshold they exceed
//! the double-precision range long before the shape becomes interesting, and
//! `V = tanh((ln I_max − ln I_min)/2)` needs nothing else.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

#[cfg(feature = "serde")]
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::RegimeTag;

/// 0.5° spacing over `[0, 2π)`.
pub const DEFAULT_PHASE_POINTS: usize = 720;

/// Relative tolerance of the golden-section refinement of the extrema.
pub const EXTREMUM_TOL: f64 = 1e-10;

/// `count` evenly spaced phases over `[0, 2π)`.
pub fn phase_grid(count: usize) -> Vec<f64> {
    phase_grid_range(count, 0.0, TAU)
}

/// `count` evenly spaced phases over the half-open range `[start, end)`.
pub fn phase_grid_range(count: usize, start: f64, end: f64) -> Vec<f64> {
    let step = (end - start) / count as f64;
    (0..count).map(|i| start + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct FringePattern {
    pub p: u32,
    pub phi_grid: Vec<f64>,
    /// Linear rates; may be `inf` where the log-rate exceeds the f64 range.
    pub rates: Vec<f64>,
    pub log_rates: Vec<f64>,
    /// Rates divided by the grid maximum.
    pub normalized: Vec<f64>,
    /// `None` for an all-zero pattern.
    pub visibility: Option<f64>,
    pub regime_used: RegimeTag,
}

impl FringePattern {
    /// Samples `log_rate` on the grid and locates the extrema by grid scan
    /// plus golden-section refinement.
    pub fn from_log_rate<F>(p: u32, regime: RegimeTag, phi_grid: Vec<f64>, log_rate: F) -> Self
    where
        F: Fn(f64) -> f64,
    {
        let log_rates: Vec<f64> = phi_grid.iter().map(|&phi| log_rate(phi)).collect();
        let visibility = refined_visibility(&phi_grid, &log_rates, &log_rate).ok();
        Self::assemble(p, regime, phi_grid, log_rates, visibility)
    }

    /// Pattern from precomputed linear rates (e.g. Monte Carlo estimates).
    /// Visibility comes from the grid values alone.
    pub fn from_rates(p: u32, regime: RegimeTag, phi_grid: Vec<f64>, rates: &[f64]) -> Self {
        let log_rates: Vec<f64> = rates.iter().map(|&x| ln_or_neg_inf(x)).collect();
        let visibility = grid_visibility(rates).ok();
        Self::assemble(p, regime, phi_grid, log_rates, visibility)
    }

    fn assemble(
        p: u32,
        regime: RegimeTag,
        phi_grid: Vec<f64>,
        log_rates: Vec<f64>,
        visibility: Option<f64>,
    ) -> Self {
        let lmax = log_rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rates = log_rates.iter().map(|&l| libm::exp(l)).collect();
        let normalized = log_rates
            .iter()
            .map(|&l| if lmax == f64::NEG_INFINITY { 0.0 } else { libm::exp(l - lmax) })
            .collect();
        FringePattern { p, phi_grid, rates, log_rates, normalized, visibility, regime_used: regime }
    }

    pub fn visibility(&self) -> Result<f64> {
        self.visibility.ok_or(Error::UndefinedVisibility)
    }

    pub fn len(&self) -> usize {
        self.phi_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi_grid.is_empty()
    }
}

/// `[I(φ_max) − I(φ_min)] / [I(φ_max) + I(φ_min)]` for the function whose
/// logarithm is `log_rate`, with extrema located on `phi_grid` and refined by
/// golden-section search.
pub fn visibility<F>(phi_grid: &[f64], log_rate: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let samples: Vec<f64> = phi_grid.iter().map(|&phi| log_rate(phi)).collect();
    refined_visibility(phi_grid, &samples, &log_rate)
}

fn refined_visibility<F>(phi_grid: &[f64], log_samples: &[f64], log_rate: &F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (imax, imin) = extreme_indices(log_samples).ok_or(Error::UndefinedVisibility)?;
    if log_samples[imax] == f64::NEG_INFINITY {
        return Err(Error::UndefinedVisibility);
    }
    let (lo, hi) = bracket(phi_grid, imax);
    let lmax = golden_section(lo, hi, |x| -log_rate(x), log_samples[imax], true);
    let (lo, hi) = bracket(phi_grid, imin);
    let lmin = golden_section(lo, hi, log_rate, log_samples[imin], false);
    Ok(visibility_from_logs(lmax, lmin))
}

/// Visibility from linear samples without refinement.
pub fn grid_visibility(rates: &[f64]) -> Result<f64> {
    let (imax, imin) = extreme_indices(rates).ok_or(Error::UndefinedVisibility)?;
    let (max, min) = (rates[imax], rates[imin]);
    if max + min <= 0.0 || !(max + min).is_finite() {
        return Err(Error::UndefinedVisibility);
    }
    Ok((max - min) / (max + min))
}

/// `tanh((ln I_max − ln I_min)/2)`, i.e. `(I_max − I_min)/(I_max + I_min)`.
pub fn visibility_from_logs(lmax: f64, lmin: f64) -> f64 {
    if lmin == f64::NEG_INFINITY {
        return 1.0;
    }
    libm::tanh(0.5 * (lmax - lmin)).clamp(0.0, 1.0)
}

/// Full width at half maximum of a π-periodic, even fringe peaked at φ = 0,
/// measured at half of the peak value (`I/I_max = 1/2`).
///
/// A fringe that never falls below half maximum has width equal to its
/// period, π.
pub fn fwhm_about_zero<F>(log_rate: F) -> f64
where
    F: Fn(f64) -> f64,
{
    const STEPS: usize = 4096;
    let peak = log_rate(0.0);
    let level = peak - core::f64::consts::LN_2;
    let h = FRAC_PI_2 / STEPS as f64;
    let mut prev = 0.0;
    for i in 1..=STEPS {
        let x = h * i as f64;
        if log_rate(x) < level {
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if log_rate(mid) < level {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 {
                    break;
                }
            }
            return lo + hi;
        }
        prev = x;
    }
    PI
}

fn extreme_indices(values: &[f64]) -> Option<(usize, usize)> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut imax = 0;
    let mut imin = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[imax] {
            imax = i;
        }
        if v < values[imin] {
            imin = i;
        }
    }
    Some((imax, imin))
}

/// Neighbouring grid points around `i`, using the local spacing at the ends.
fn bracket(grid: &[f64], i: usize) -> (f64, f64) {
    let n = grid.len();
    if n < 2 {
        return (grid[i], grid[i]);
    }
    let left = if i > 0 { grid[i] - grid[i - 1] } else { grid[1] - grid[0] };
    let right = if i + 1 < n { grid[i + 1] - grid[i] } else { grid[n - 1] - grid[n - 2] };
    (grid[i] - left, grid[i] + right)
}

/// Minimizes `f` on `[a, b]` and returns the best value found. When
/// `negated` is set, `f` is `-g` and the maximum of `g` is returned. The grid
/// value `seed` is kept if refinement cannot improve on it.
fn golden_section<F>(mut a: f64, mut b: f64, f: F, seed: f64, negated: bool) -> f64
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut best = if negated { -seed } else { seed };
    let scale = libm::fmax(libm::fabs(a) + libm::fabs(b), 1.0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a) <= EXTREMUM_TOL * scale {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for v in [fc, fd] {
        if v < best {
            best = v;
        }
    }
    if negated { -best } else { best }
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 { libm::log(x) } else { f64::NEG_INFINITY }
}
