use std::fmt::Write as _;

use ndpo_core::analytic::{fringe_above_asymptotic, fringe_below, visibility_below_closed_form, R_MAX_BELOW};
use ndpo_core::engine::{MomentModel, RateEngine};
use ndpo_core::fringe::{phase_grid, DEFAULT_PHASE_POINTS};
use ndpo_core::langevin::{fringe_montecarlo, run_trajectory, Ensemble, EnsembleEstimate, SimConfig};
use ndpo_core::opa::{opa_visibility, r_from_gain};
use ndpo_core::oracle::{quadrature_engine, QuadratureSpec};
use ndpo_core::tables::{Tables, PUBLISHED};
use ndpo_core::{DerivedParams, FringePattern, Regime, RegimeTag};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Method, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{num, quote, Artifacts, VERSION};

/// Parallel ensemble; trajectories are collected in index order so the
/// result does not depend on scheduling.
pub fn run_ensemble(derived: &DerivedParams, sim: &SimConfig) -> Result<Ensemble> {
    sim.validate()?;
    let outcomes = (0..sim.n_trajectories)
        .into_par_iter()
        .map(|i| run_trajectory(derived, sim, i))
        .collect::<ndpo_core::Result<Vec<_>>>()?;
    Ok(Ensemble::from_outcomes(outcomes)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub seed: u64,
    pub n_trajectories: usize,
    pub attempted: usize,
    pub discarded: usize,
    pub n_samples: usize,
    pub config: SimConfig,
}

impl EnsembleSummary {
    fn new(ensemble: &Ensemble, config: &SimConfig) -> Self {
        EnsembleSummary {
            seed: config.seed,
            n_trajectories: ensemble.trajectories.len(),
            attempted: ensemble.attempted,
            discarded: ensemble.discarded,
            n_samples: ensemble.n_samples(),
            config: *config,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FringeRun {
    pub pattern: FringePattern,
    pub derived: DerivedParams,
    pub regime: Regime,
    pub method: Method,
    pub estimates: Option<(EnsembleSummary, Vec<EnsembleEstimate>)>,
}

/// Fringe for the configured source, order and method.
pub fn compute_fringe(cfg: &RunConfig) -> Result<FringeRun> {
    cfg.validate()?;
    let derived = cfg.params.derive()?;
    let regime = derived.classify(cfg.band);
    let method = cfg.method.resolve(regime.tag);
    let grid = cfg.phi.points()?;
    let p = cfg.p;
    let mut estimates = None;
    let pattern = match method {
        Method::Analytic => analytic_fringe(p, &derived, regime, grid)?,
        Method::Moments => {
            RateEngine::new(p, &derived, MomentModel::for_regime(regime.tag))?.fringe(regime.tag, grid)
        }
        Method::Quadrature => {
            warn_if_far(method, regime);
            quadrature_engine(p, &derived, &QuadratureSpec::default())?.fringe(regime.tag, grid)
        }
        Method::Montecarlo => {
            let sim = cfg.sim_config();
            let ensemble = run_ensemble(&derived, &sim)?;
            let (pattern, est) = fringe_montecarlo(p, regime.tag, &ensemble, grid)?;
            estimates = Some((EnsembleSummary::new(&ensemble, &sim), est));
            pattern
        }
        Method::Auto => unreachable!("resolved above"),
    };
    Ok(FringeRun { pattern, derived, regime, method, estimates })
}

fn warn_if_far(method: Method, regime: Regime) {
    if regime.tag != RegimeTag::NearThreshold {
        log::warn!("{} requested in the {} regime; the analytic path is exact there", method.name(), regime.tag);
    }
}

fn analytic_fringe(p: u32, derived: &DerivedParams, regime: Regime, grid: Vec<f64>) -> Result<FringePattern> {
    let r = derived.r();
    if r <= R_MAX_BELOW {
        if regime.tag != RegimeTag::Below {
            log::warn!(
                "analytic below-threshold rates used at a1 = {:.3} inside the threshold band; \
                 finite-n0 corrections are ignored",
                derived.a1()
            );
        }
        return Ok(fringe_below(p, r, grid)?);
    }
    if regime.tag != RegimeTag::Above {
        return Err(ndpo_core::Error::RegimeMismatch(format!(
            "no analytic form at r = {r}, a1 = {:.3} ({}); use --method moments",
            derived.a1(),
            regime.tag
        ))
        .into());
    }
    Ok(fringe_above_asymptotic(p, derived, grid)?)
}

fn visibility_json(v: Option<f64>) -> serde_json::Value {
    v.map_or(serde_json::Value::Null, |x| json!(x))
}

pub fn fringe_artifacts(cfg: &RunConfig, run: &FringeRun) -> Artifacts {
    let mut sidecar = json!({
        "command": "fringe",
        "version": VERSION,
        "params": cfg.params,
        "derived": run.derived,
        "regime": run.regime,
        "p": cfg.p,
        "phi": cfg.phi,
        "method": run.method.name(),
        "requested_method": cfg.method.name(),
        "visibility": visibility_json(run.pattern.visibility),
        "visibility_defined": run.pattern.visibility.is_some(),
    });
    if let Some((summary, est)) = &run.estimates {
        sidecar["montecarlo"] = json!({
            "ensemble": summary,
            "stderr": est.iter().map(|e| e.stderr).collect::<Vec<_>>(),
        });
    }
    Artifacts { csv: crate::output::fringe_csv(&run.pattern), sidecar }
}

pub fn fringe_rows(pattern: &FringePattern) -> serde_json::Value {
    json!({
        "phi": pattern.phi_grid,
        "rate": pattern.rates,
        "log_rate": pattern.log_rates,
        "normalized": pattern.normalized,
    })
}

pub fn cmd_fringe(cfg: &RunConfig) -> Result<Artifacts> {
    let run = compute_fringe(cfg)?;
    if run.pattern.visibility.is_none() {
        log::warn!("all-zero fringe: visibility undefined");
    }
    Ok(fringe_artifacts(cfg, &run))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub p_list: Vec<u32>,
    pub r_grid: Vec<f64>,
    pub n0: f64,
    pub method: Method,
    pub band: f64,
}

/// `count` values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (count - 1) as f64;
            (0..count).map(|i| if i == count - 1 { end } else { start + step * i as f64 }).collect()
        }
    }
}

/// Visibility at one `(p, r)`; `None` when the pattern is identically zero.
pub fn sweep_point(p: u32, r: f64, n0: f64, method: Method, band: f64) -> Result<Option<f64>> {
    let derived = DerivedParams::from_scaled(n0, r)?;
    let regime = derived.classify(band);
    let grid = || phase_grid(DEFAULT_PHASE_POINTS);
    let v = match method.resolve(regime.tag) {
        Method::Analytic if r <= R_MAX_BELOW => Some(visibility_below_closed_form(p, r)?.value),
        Method::Analytic => analytic_fringe(p, &derived, regime, grid())?.visibility,
        // One model across the whole sweep keeps the curve continuous where
        // the regime label changes.
        Method::Moments => RateEngine::new(p, &derived, MomentModel::Coupled)?.fringe(regime.tag, grid()).visibility,
        Method::Quadrature => {
            quadrature_engine(p, &derived, &QuadratureSpec::default())?.fringe(regime.tag, grid()).visibility
        }
        Method::Montecarlo => return Err(CliError::usage("sweep: method montecarlo is not supported; use simulate")),
        Method::Auto => unreachable!("resolved above"),
    };
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: u32,
    pub r: f64,
    pub visibility: Option<f64>,
}

pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.p_list.is_empty() || spec.r_grid.is_empty() {
        return Err(CliError::usage("sweep: need at least one p and one r"));
    }
    let items: Vec<(u32, f64)> =
        spec.p_list.iter().flat_map(|&p| spec.r_grid.iter().map(move |&r| (p, r))).collect();
    items
        .into_par_iter()
        .map(|(p, r)| Ok(SweepRow { p, r, visibility: sweep_point(p, r, spec.n0, spec.method, spec.band)? }))
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("p,r,visibility\n");
    for row in rows {
        let _ = writeln!(out, "{},{},{}", row.p, num(row.r), num(row.visibility.unwrap_or(f64::NAN)));
    }
    out
}

pub fn cmd_sweep(spec: &SweepSpec) -> Result<(Artifacts, Vec<SweepRow>)> {
    let rows = sweep(spec)?;
    let sidecar = json!({
        "command": "sweep",
        "version": VERSION,
        "n0": spec.n0,
        "p": spec.p_list,
        "r": spec.r_grid,
        "method": spec.method.name(),
        "band": spec.band,
        "phi_points": DEFAULT_PHASE_POINTS,
    });
    Ok((Artifacts { csv: sweep_csv(&rows), sidecar }, rows))
}

/// Monte Carlo estimates with their statistical errors:
/// `phi,mean,stderr,mean_imag,stderr_imag`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(Artifacts, FringeRun)> {
    let cfg = RunConfig { method: Method::Montecarlo, ..cfg.clone() };
    let run = compute_fringe(&cfg)?;
    let (summary, est) = run.estimates.as_ref().expect("montecarlo run");
    let mut csv = String::from("phi,mean,stderr,mean_imag,stderr_imag\n");
    for (phi, e) in run.pattern.phi_grid.iter().zip(est) {
        let _ = writeln!(csv, "{},{},{},{},{}", num(*phi), num(e.mean), num(e.stderr), num(e.mean_imag), num(e.stderr_imag));
    }
    let mut sidecar = fringe_artifacts(&cfg, &run).sidecar;
    sidecar["command"] = json!("simulate");
    sidecar["montecarlo"] = json!({ "ensemble": summary });
    Ok((Artifacts { csv, sidecar }, run))
}

/// Per-trajectory, per-sample scaled amplitudes of the ensemble
/// (`α1, α2, α1*, α2*` as real/imaginary pairs).
pub fn ensemble_dump_csv(ensemble: &Ensemble) -> String {
    let mut out = String::from("trajectory,sample,re_a1,im_a1,re_a2,im_a2,re_a1s,im_a1s,re_a2s,im_a2s\n");
    for (i, traj) in ensemble.trajectories.iter().enumerate() {
        for (k, s) in traj.iter().enumerate() {
            let _ = write!(out, "{i},{k}");
            for a in s.amplitudes() {
                let _ = write!(out, ",{},{}", num(a.re), num(a.im));
            }
            out.push('\n');
        }
    }
    out
}

pub fn tables_json(tables: &Tables, r_values: &[f64], phi_values: &[f64]) -> Result<serde_json::Value> {
    let rates = tables
        .rates
        .iter()
        .map(|row| {
            let values: Vec<_> = r_values
                .iter()
                .flat_map(|&r| phi_values.iter().map(move |&phi| (r, phi)))
                .map(|(r, phi)| {
                    Ok(json!({ "r": r, "phi": phi, "value": ndpo_core::analytic::table1_rate_with(tables, row.p, r, phi)? }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(json!({ "p": row.p, "formula": row.formula, "values": values }))
        })
        .collect::<Result<Vec<_>>>()?;
    let visibilities = tables
        .visibilities
        .iter()
        .map(|row| {
            let values: Vec<_> = r_values.iter().map(|&r| json!({ "r": r, "value": row.evaluate(r) })).collect();
            json!({ "p": row.p, "formula": row.formula, "limit": row.limit, "values": values })
        })
        .collect::<Vec<_>>();
    Ok(json!({ "version": VERSION, "rates": rates, "visibilities": visibilities }))
}

/// `table,p,formula,r,phi,value`; `phi` is empty for visibility rows.
pub fn tables_csv(tables: &Tables, r_values: &[f64], phi_values: &[f64]) -> Result<String> {
    let mut out = String::from("table,p,formula,r,phi,value\n");
    for row in &tables.rates {
        for &r in r_values {
            for &phi in phi_values {
                let v = ndpo_core::analytic::table1_rate_with(tables, row.p, r, phi)?;
                let _ = writeln!(out, "rate,{},{},{},{},{}", row.p, quote(row.formula), num(r), num(phi), num(v));
            }
        }
    }
    for row in &tables.visibilities {
        for &r in r_values {
            let _ = writeln!(out, "visibility,{},{},{},,{}", row.p, quote(row.formula), num(r), num(row.evaluate(r)));
        }
        if let Some(limit) = row.limit {
            let _ = writeln!(out, "visibility_limit,{},{},1,,{}", row.p, quote(row.formula), num(limit));
        }
    }
    Ok(out)
}

pub fn published_tables() -> &'static Tables {
    &PUBLISHED
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpaRow {
    pub p: u32,
    pub gain: f64,
    pub r: f64,
    pub opa_visibility: f64,
    pub ndpo_visibility: f64,
}

pub fn compare_opa(p_list: &[u32], gains: &[f64]) -> Result<Vec<OpaRow>> {
    let grid = phase_grid(DEFAULT_PHASE_POINTS);
    let mut rows = Vec::new();
    for &p in p_list {
        for &gain in gains {
            let r = r_from_gain(gain)?;
            let opa = opa_visibility(p, gain, grid.clone())?;
            let ndpo = fringe_below(p, r, grid.clone())?.visibility()?;
            rows.push(OpaRow { p, gain, r, opa_visibility: opa, ndpo_visibility: ndpo });
        }
    }
    Ok(rows)
}

pub fn opa_csv(rows: &[OpaRow]) -> String {
    let mut out = String::from("p,gain,r,opa_visibility,ndpo_visibility,abs_diff\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.p,
            num(row.gain),
            num(row.r),
            num(row.opa_visibility),
            num(row.ndpo_visibility),
            num((row.opa_visibility - row.ndpo_visibility).abs())
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SourceParams;

    #[test]
    fn linspace_hits_both_ends() {
        let v = linspace(0.97, 1.03, 61);
        assert_eq!(v.len(), 61);
        assert_eq!(v[0], 0.97);
        assert_eq!(v[60], 1.03);
    }

    #[test]
    fn p1_fringe_is_flat() {
        let cfg = RunConfig::new(SourceParams::scaled(1e6, 0.5), 1);
        let run = compute_fringe(&cfg).unwrap();
        assert!(run.pattern.normalized.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_pump_gives_undefined_visibility() {
        let cfg = RunConfig::new(SourceParams::scaled(1e6, 0.0), 2);
        let art = cmd_fringe(&cfg).unwrap();
        assert_eq!(art.sidecar["visibility_defined"], json!(false));
        assert!(art.sidecar["visibility"].is_null());
    }

    #[test]
    fn analytic_refuses_near_threshold_above_one() {
        let mut cfg = RunConfig::new(SourceParams::scaled(1e6, 1.001), 2);
        cfg.method = Method::Analytic;
        let err = compute_fringe(&cfg).unwrap_err();
        assert!(matches!(err, CliError::Core(ndpo_core::Error::RegimeMismatch(_))), "{err}");
        cfg.method = Method::Auto;
        assert_eq!(compute_fringe(&cfg).unwrap().method, Method::Moments);
    }

    #[test]
    fn sweep_p2_below() {
        let spec = SweepSpec { p_list: vec![1, 2], r_grid: vec![0.0, 0.5], n0: 1e6, method: Method::Analytic, band: 6.0 };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows[0].visibility, Some(0.0));
        assert_eq!(rows[2].visibility, Some(1.0));
        assert!((rows[3].visibility.unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn opa_matches() {
        for row in compare_opa(&[2, 3], &[0.1, 1.0]).unwrap() {
            assert!((row.opa_visibility - row.ndpo_visibility).abs() < 1e-12);
        }
    }
}
