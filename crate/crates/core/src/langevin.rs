//! Euler–Maruyama sampling of the reduced positive-P Langevin equations
//!
//! ```text
//! dα1  = [−α1  + k  α2*] dτ + √k  (dW1 + i dW2)/√2,    k  = r − 2 α1 α2 / n0
//! dα2  = [−α2  + k  α1*] dτ + √k  (dW1 − i dW2)/√2
//! dα1* = [−α1* + k* α2 ] dτ + √k* (dW3 − i dW4)/√2,    k* = r − 2 α1* α2* / n0
//! dα2* = [−α2* + k* α1 ] dτ + √k* (dW3 + i dW4)/√2
//! ```
//!
//! with time in cavity lifetimes and principal-branch square roots. The
//! starred amplitudes are independent variables, not complex conjugates.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fringe::FringePattern;
use crate::params::{DerivedParams, RegimeTag};

/// Percentage of restarted trajectories above which an ensemble is rejected.
pub const MAX_DISCARD_PERCENT: u32 = 10;

/// Restarts allowed for a single trajectory before the run is abandoned.
pub const MAX_RESTARTS: u32 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryState {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub alpha1_star: Complex64,
    pub alpha2_star: Complex64,
    pub tau: f64,
}

impl TrajectoryState {
    pub fn vacuum() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        TrajectoryState { alpha1: zero, alpha2: zero, alpha1_star: zero, alpha2_star: zero, tau: 0.0 }
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.alpha1, self.alpha2, self.alpha1_star, self.alpha2_star]
    }

    fn escaped(&self, cap: f64) -> bool {
        self.amplitudes().iter().any(|a| !(a.norm() <= cap))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields, default))]
pub struct SimConfig {
    /// Time step in cavity lifetimes.
    pub dt: f64,
    /// Discarded relaxation time before the first sample.
    pub burn_in: f64,
    /// Time between retained samples.
    pub sample_interval: f64,
    pub samples_per_trajectory: usize,
    pub n_trajectories: usize,
    pub seed: u64,
    /// Amplitude bound that triggers a restart; `None` uses
    /// `10³·√(n0·max(r−1, 1))`.
    pub divergence_cap: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            burn_in: 10.0,
            sample_interval: 1.0,
            samples_per_trajectory: 20,
            n_trajectories: 1000,
            seed: 0,
            divergence_cap: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::ParameterDomain { name, value, reason });
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return bad("dt", self.dt, "time step must lie in (0, 0.01] lifetimes");
        }
        if !(self.burn_in >= 10.0) {
            return bad("burn_in", self.burn_in, "burn-in must be at least 10 lifetimes");
        }
        if !(self.sample_interval >= 1.0) {
            return bad("sample_interval", self.sample_interval, "samples must be at least 1 lifetime apart");
        }
        if self.samples_per_trajectory == 0 || self.n_trajectories == 0 {
            return Err(Error::domain("need at least one trajectory and one sample per trajectory"));
        }
        if let Some(cap) = self.divergence_cap {
            if !(cap > 0.0) {
                return bad("divergence_cap", cap, "must be positive");
            }
        }
        Ok(())
    }

    pub fn cap(&self, derived: &DerivedParams) -> f64 {
        self.divergence_cap
            .unwrap_or_else(|| 1e3 * libm::sqrt(derived.n0() * libm::fmax(derived.r() - 1.0, 1.0)))
    }

    fn steps(&self, span: f64) -> usize {
        libm::round(span / self.dt) as usize
    }
}

/// Deterministic part of the equations, in the order
/// `(α1, α2, α1*, α2*)`.
pub fn drift(state: &TrajectoryState, derived: &DerivedParams) -> [Complex64; 4] {
    let (k, ks) = gains(state, derived);
    [
        -state.alpha1 + k * state.alpha2_star,
        -state.alpha2 + k * state.alpha1_star,
        -state.alpha1_star + ks * state.alpha2,
        -state.alpha2_star + ks * state.alpha1,
    ]
}

fn gains(state: &TrajectoryState, derived: &DerivedParams) -> (Complex64, Complex64) {
    let inv = 2.0 / derived.n0();
    let r = derived.r();
    (
        r - state.alpha1 * state.alpha2 * inv,
        r - state.alpha1_star * state.alpha2_star * inv,
    )
}

/// One Euler–Maruyama step. `dw` holds the four Wiener increments, i.e.
/// independent standard normals already multiplied by `√dt`.
pub fn step(state: &TrajectoryState, derived: &DerivedParams, dt: f64, dw: [f64; 4]) -> TrajectoryState {
    let (k, ks) = gains(state, derived);
    let d = drift(state, derived);
    let amp = k.sqrt() * FRAC_1_SQRT_2;
    let amp_s = ks.sqrt() * FRAC_1_SQRT_2;
    let plus = Complex64::new(dw[0], dw[1]);
    let plus_s = Complex64::new(dw[2], dw[3]);
    TrajectoryState {
        alpha1: state.alpha1 + d[0] * dt + amp * plus,
        alpha2: state.alpha2 + d[1] * dt + amp * plus.conj(),
        alpha1_star: state.alpha1_star + d[2] * dt + amp_s * plus_s.conj(),
        alpha2_star: state.alpha2_star + d[3] * dt + amp_s * plus_s,
        tau: state.tau + dt,
    }
}

/// Fields `(α3, α3*)` at the absorber for interferometer phase `phi`:
/// `β1 = (−α1 + iα2)/√2`, `β2 = (−α2 + iα1)/√2`, `α3 = β1 e^{iφ} + β2`, and
/// the starred counterparts with `−i` and `e^{−iφ}`.
pub fn propagate_to_absorber(state: &TrajectoryState, phi: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let b1 = (-state.alpha1 + i * state.alpha2) * FRAC_1_SQRT_2;
    let b2 = (-state.alpha2 + i * state.alpha1) * FRAC_1_SQRT_2;
    let b1s = (-state.alpha1_star - i * state.alpha2_star) * FRAC_1_SQRT_2;
    let b2s = (-state.alpha2_star - i * state.alpha1_star) * FRAC_1_SQRT_2;
    let e = Complex64::from_polar(1.0, phi);
    (b1 * e + b2, b1s * e.conj() + b2s)
}

/// Samples of one trajectory and the number of times it had to be restarted.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub index: usize,
    pub samples: Vec<TrajectoryState>,
    pub restarts: u32,
}

fn rng_for(seed: u64, index: usize, attempt: u32) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 16) | u64::from(attempt));
    rng
}

/// Runs trajectory `index` from the vacuum. A trajectory that escapes the
/// divergence cap is restarted on a fresh random stream.
pub fn run_trajectory(derived: &DerivedParams, config: &SimConfig, index: usize) -> Result<TrajectoryOutcome> {
    config.validate()?;
    let cap = config.cap(derived);
    let sqrt_dt = libm::sqrt(config.dt);
    let burn = config.steps(config.burn_in);
    let gap = config.steps(config.sample_interval);
    'attempt: for attempt in 0..MAX_RESTARTS {
        let mut rng = rng_for(config.seed, index, attempt);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut state = TrajectoryState::vacuum();
        let mut samples = Vec::with_capacity(config.samples_per_trajectory);
        for n in 0..burn + gap * config.samples_per_trajectory {
            let dw = [normal() * sqrt_dt, normal() * sqrt_dt, normal() * sqrt_dt, normal() * sqrt_dt];
            state = step(&state, derived, config.dt, dw);
            if state.escaped(cap) {
                log::debug!("trajectory {index} escaped at τ = {:.3}; restarting", state.tau);
                continue 'attempt;
            }
            let done = n + 1;
            if done > burn && (done - burn) % gap == 0 {
                samples.push(state);
            }
        }
        return Ok(TrajectoryOutcome { index, samples, restarts: attempt });
    }
    Err(Error::StatisticsQuality {
        discarded: MAX_RESTARTS as usize,
        attempted: MAX_RESTARTS as usize,
        limit_percent: MAX_DISCARD_PERCENT,
    })
}

/// Retained samples, grouped by trajectory in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trajectories: Vec<Vec<TrajectoryState>>,
    /// Trajectories abandoned after escaping the divergence cap.
    pub discarded: usize,
    pub attempted: usize,
}

impl Ensemble {
    /// Assembles outcomes (in any order) and enforces the discard limit.
    pub fn from_outcomes(mut outcomes: Vec<TrajectoryOutcome>) -> Result<Self> {
        outcomes.sort_by_key(|o| o.index);
        let discarded: usize = outcomes.iter().map(|o| o.restarts as usize).sum();
        let attempted = outcomes.len() + discarded;
        if discarded * 100 > attempted * MAX_DISCARD_PERCENT as usize {
            return Err(Error::StatisticsQuality { discarded, attempted, limit_percent: MAX_DISCARD_PERCENT });
        }
        if discarded > 0 {
            log::warn!("{discarded} of {attempted} trajectories diverged and were restarted");
        }
        Ok(Ensemble { trajectories: outcomes.into_iter().map(|o| o.samples).collect(), discarded, attempted })
    }

    pub fn n_samples(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }

    pub fn discard_fraction(&self) -> f64 {
        if self.attempted == 0 { 0.0 } else { self.discarded as f64 / self.attempted as f64 }
    }

    /// Mean of `f` with its standard error from the spread of per-trajectory
    /// means (samples within a trajectory are correlated).
    pub fn estimate<F>(&self, f: F) -> Result<EnsembleEstimate>
    where
        F: Fn(&TrajectoryState) -> Complex64,
    {
        let per_traj: Vec<Complex64> = self
            .trajectories
            .iter()
            .filter(|t| !t.is_empty())
            .map(|t| t.iter().map(&f).sum::<Complex64>() / t.len() as f64)
            .collect();
        let n = per_traj.len();
        if n == 0 {
            return Err(Error::domain("cannot estimate from an empty sample set"));
        }
        let mean = per_traj.iter().sum::<Complex64>() / n as f64;
        let (stderr, stderr_imag) = if n > 1 {
            let (vr, vi) = per_traj.iter().fold((0.0, 0.0), |(vr, vi), z| {
                let d = z - mean;
                (vr + d.re * d.re, vi + d.im * d.im)
            });
            let denom = (n * (n - 1)) as f64;
            (libm::sqrt(vr / denom), libm::sqrt(vi / denom))
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Ok(EnsembleEstimate {
            mean: mean.re,
            stderr,
            mean_imag: mean.im,
            stderr_imag,
            n_samples: self.n_samples(),
            n_trajectories: n,
            discarded: self.discarded,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnsembleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub mean_imag: f64,
    pub stderr_imag: f64,
    pub n_samples: usize,
    pub n_trajectories: usize,
    pub discarded: usize,
}

impl EnsembleEstimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        libm::fabs(self.mean - value) <= k * self.stderr
    }

    /// The imaginary part of a physical intensity must vanish within noise.
    pub fn imaginary_part_consistent(&self) -> bool {
        libm::fabs(self.mean_imag) <= 3.0 * self.stderr_imag
    }
}

/// Sequential ensemble run; trajectories are independent and reproducible
/// individually, so parallel drivers can call [`run_trajectory`] directly
/// and hand the outcomes to [`Ensemble::from_outcomes`].
pub fn simulate_steady_state(derived: &DerivedParams, config: &SimConfig) -> Result<Ensemble> {
    config.validate()?;
    let outcomes = (0..config.n_trajectories)
        .map(|i| run_trajectory(derived, config, i))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::from_outcomes(outcomes)
}

/// `⟨α3^p α3*^p⟩` at phase `phi`.
pub fn estimate_rate(p: u32, phi: f64, ensemble: &Ensemble) -> Result<EnsembleEstimate> {
    crate::analytic::check_order(p)?;
    let est = ensemble.estimate(|s| {
        let (f, fs) = propagate_to_absorber(s, phi);
        (f * fs).powu(p)
    })?;
    if !est.imaginary_part_consistent() {
        log::warn!(
            "imaginary part of the p = {p} rate at φ = {phi} is {:.3e} ± {:.3e}",
            est.mean_imag,
            est.stderr_imag
        );
    }
    Ok(est)
}

/// Monte Carlo fringe on `phi_grid`, with the per-phase estimates.
pub fn fringe_montecarlo(
    p: u32,
    regime: RegimeTag,
    ensemble: &Ensemble,
    phi_grid: Vec<f64>,
) -> Result<(FringePattern, Vec<EnsembleEstimate>)> {
    let estimates = phi_grid
        .iter()
        .map(|&phi| estimate_rate(p, phi, ensemble))
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    Ok((FringePattern::from_rates(p, regime, phi_grid, &rates), estimates))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn below() -> DerivedParams {
        DerivedParams::from_scaled(1e6, 0.5).unwrap()
    }

    #[test]
    fn vacuum_is_a_fixed_point_without_noise() {
        let d = below();
        let mut s = TrajectoryState::vacuum();
        for _ in 0..1000 {
            s = step(&s, &d, 1e-3, [0.0; 4]);
        }
        assert!(s.amplitudes().iter().all(|a| a.norm() == 0.0));
        assert!((s.tau - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_limit_above_threshold() {
        let r = 1.5;
        let d = DerivedParams::from_scaled(1e6, r).unwrap();
        let a = Complex64::new(3.0, 1.5);
        let b = Complex64::new(-0.5, 2.0);
        let mut s = TrajectoryState { alpha1: a, alpha2: b, alpha1_star: a.conj(), alpha2_star: b.conj(), tau: 0.0 };
        let dt = 1e-3;
        for _ in 0..100_000 {
            s = step(&s, &d, dt, [0.0; 4]);
        }
        let target = d.n0() * (r - 1.0) / 2.0;
        let intensity = (s.alpha1_star * s.alpha1).re;
        assert!(((intensity - target) / target).abs() < 1e-8, "{intensity}");
        assert!((((s.alpha1 * s.alpha2).re - target) / target).abs() < 1e-8);
    }

    #[test]
    fn single_step_noise_statistics() {
        let d = below();
        let dt: f64 = 1e-3;
        let mut rng = rng_for(7, 0, 0);
        let n = 20_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let dw: [f64; 4] = core::array::from_fn(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * dt.sqrt()
            });
            let s = step(&TrajectoryState::vacuum(), &d, dt, dw);
            sum += s.alpha1.re;
            sq += s.alpha1.norm_sqr();
        }
        // |α1|² after one step has mean (σ/n0)·dt = r·dt.
        let mean_sq = sq / n as f64;
        assert!((mean_sq - d.r() * dt).abs() < 0.05 * d.r() * dt);
        assert!((sum / n as f64).abs() < 4.0 * (d.r() * dt / 2.0 / n as f64).sqrt());
    }

    #[test]
    fn absorber_map() {
        let mut s = TrajectoryState::vacuum();
        s.alpha1 = Complex64::new(1.0, 0.0);
        let i = Complex64::i();
        let (f, _) = propagate_to_absorber(&s, 0.0);
        // β1 = −1/√2, β2 = i/√2
        assert!((f - (-1.0 + i) * FRAC_1_SQRT_2).norm() < 1e-15);
        // matches the combined form α3 = [α1(−e^{iφ} + i) + α2(ie^{iφ} − 1)]/√2
        let (a1, a2) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.4));
        let (a1s, a2s) = (Complex64::new(-0.7, 0.1), Complex64::new(0.5, 0.9));
        let s = TrajectoryState { alpha1: a1, alpha2: a2, alpha1_star: a1s, alpha2_star: a2s, tau: 0.0 };
        for phi in [0.0, 0.7, 2.5] {
            let e = Complex64::from_polar(1.0, phi);
            let want = (a1 * (-e + i) + a2 * (i * e - 1.0)) * FRAC_1_SQRT_2;
            let want_s = (a1s * (-e.conj() - i) + a2s * (-i * e.conj() - 1.0)) * FRAC_1_SQRT_2;
            let (f, fs) = propagate_to_absorber(&s, phi);
            assert!((f - want).norm() < 1e-14 && (fs - want_s).norm() < 1e-14);
        }
    }

    #[test]
    fn config_validation() {
        let ok = SimConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SimConfig { dt: 0.02, ..ok }.validate().is_err());
        assert!(SimConfig { burn_in: 5.0, ..ok }.validate().is_err());
        assert!(SimConfig { sample_interval: 0.5, ..ok }.validate().is_err());
        assert!(SimConfig { n_trajectories: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn discard_limit() {
        let mk = |i, restarts| TrajectoryOutcome { index: i, samples: Vec::new(), restarts };
        assert!(Ensemble::from_outcomes((0..10).map(|i| mk(i, u32::from(i == 0))).collect()).is_ok());
        let err = Ensemble::from_outcomes((0..10).map(|i| mk(i, 2)).collect()).unwrap_err();
        assert!(matches!(err, Error::StatisticsQuality { discarded: 20, attempted: 30, .. }));
    }

    #[test]
    fn small_cap_forces_restarts_and_is_reported() {
        let d = below();
        let cfg = SimConfig { n_trajectories: 4, samples_per_trajectory: 2, divergence_cap: Some(0.3), ..Default::default() };
        assert!(matches!(simulate_steady_state(&d, &cfg), Err(Error::StatisticsQuality { .. })));
    }

    #[test]
    fn reproducible_and_zero_pump() {
        let d = below();
        let cfg = SimConfig { n_trajectories: 3, samples_per_trajectory: 3, seed: 11, ..Default::default() };
        let a = simulate_steady_state(&d, &cfg).unwrap();
        let b = simulate_steady_state(&d, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_steady_state(&d, &SimConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, c);
        let zero = DerivedParams::from_scaled(1e6, 0.0).unwrap();
        let z = simulate_steady_state(&zero, &cfg).unwrap();
        assert!(z.trajectories.iter().flatten().all(|s| s.amplitudes().iter().all(|a| a.norm() == 0.0)));
        assert!(estimate_rate(1, 0.0, &Ensemble { trajectories: Vec::new(), discarded: 0, attempted: 0 }).is_err());
    }
}
