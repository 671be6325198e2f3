use std::path::{Path, PathBuf};

use ndpo_core::fringe::{phase_grid_range, DEFAULT_PHASE_POINTS};
use ndpo_core::langevin::SimConfig;
use ndpo_core::params::DEFAULT_BAND;
use ndpo_core::{DerivedParams, NdpoParams, RegimeTag};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Source parameters: either the scaled pair `{n0, r}` or the physical rates
/// `{gamma, gamma3, kappa, epsilon}`. Mixing the two is rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl SourceParams {
    pub fn scaled(n0: f64, r: f64) -> Self {
        SourceParams { n0: Some(n0), r: Some(r), ..Default::default() }
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        let physical = [self.gamma, self.gamma3, self.kappa, self.epsilon];
        let any_physical = physical.iter().any(Option::is_some);
        match (self.n0, self.r, any_physical) {
            (_, Some(r), false) => Ok(DerivedParams::from_scaled(self.n0.unwrap_or(ndpo_core::params::DEFAULT_N0), r)?),
            (None, None, true) => {
                let [Some(gamma), Some(gamma3), Some(kappa), Some(epsilon)] = physical else {
                    return Err(CliError::usage("params: physical form needs all of gamma, gamma3, kappa, epsilon"));
                };
                Ok(NdpoParams { gamma, gamma3, kappa, epsilon }.derive()?)
            }
            (_, _, true) => Err(CliError::usage("params: give either {n0, r} or {gamma, gamma3, kappa, epsilon}, not both")),
            (_, None, false) => Err(CliError::usage("params: missing key `r`")),
        }
    }
}

/// `count` phases over the half-open range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiGrid {
    pub count: usize,
    pub start: f64,
    pub end: f64,
}

impl Default for PhiGrid {
    fn default() -> Self {
        PhiGrid { count: DEFAULT_PHASE_POINTS, start: 0.0, end: std::f64::consts::TAU }
    }
}

impl PhiGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(CliError::usage("phi.count: must be at least 1"));
        }
        if !(self.start.is_finite() && self.end.is_finite() && self.end > self.start) {
            return Err(CliError::usage("phi: need finite start < end"));
        }
        Ok(phase_grid_range(self.count, self.start, self.end))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Moments,
    Quadrature,
    Montecarlo,
    #[default]
    Auto,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Moments => "moments",
            Method::Quadrature => "quadrature",
            Method::Montecarlo => "montecarlo",
            Method::Auto => "auto",
        }
    }

    /// `auto` → analytic below/above the band, moments near threshold.
    pub fn resolve(self, regime: RegimeTag) -> Method {
        match (self, regime) {
            (Method::Auto, RegimeTag::NearThreshold) => Method::Moments,
            (Method::Auto, _) => Method::Analytic,
            (m, _) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub format: Format,
    /// `None` writes to stdout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_band() -> f64 {
    DEFAULT_BAND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: SourceParams,
    pub p: u32,
    #[serde(default)]
    pub phi: PhiGrid,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    /// Overrides `sim.seed` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default = "default_band")]
    pub band: f64,
}

impl RunConfig {
    pub fn new(params: SourceParams, p: u32) -> Self {
        RunConfig {
            params,
            p,
            phi: PhiGrid::default(),
            method: Method::Auto,
            sim: None,
            seed: None,
            output: OutputSpec::default(),
            band: DEFAULT_BAND,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::usage(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Usage(msg) => CliError::usage(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=ndpo_core::absorber::MAX_ORDER).contains(&self.p) {
            return Err(CliError::usage(format!(
                "p: {} outside 1..={}",
                self.p,
                ndpo_core::absorber::MAX_ORDER
            )));
        }
        if !(self.band > 0.0 && self.band.is_finite()) {
            return Err(CliError::usage("band: must be finite and positive"));
        }
        self.phi.points()?;
        self.params.derive()?;
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        Ok(())
    }

    /// Simulation settings with the top-level seed applied.
    pub fn sim_config(&self) -> SimConfig {
        let mut sim = self.sim.unwrap_or_default();
        if let Some(seed) = self.seed {
            sim.seed = seed;
        }
        sim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::from_json(r#"{"params": {"r": 0.5}, "p": 2}"#).unwrap();
        assert_eq!(cfg.method, Method::Auto);
        assert_eq!(cfg.phi.count, 720);
        let d = cfg.params.derive().unwrap();
        assert_eq!(d.n0(), 1e6);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_json(r#"{"params": {"r": 0.5}, "p": 2, "phii": {}}"#).unwrap_err();
        assert!(err.to_string().contains("phii"), "{err}");
        let err = RunConfig::from_json(r#"{"params": {"r": 0.5, "nO": 3}, "p": 2}"#).unwrap_err();
        assert!(err.to_string().contains("nO"), "{err}");
        let err = RunConfig::from_json(r#"{"params": {"r": 0.5}, "p": 2, "sim": {"dtt": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("dtt"), "{err}");
    }

    #[test]
    fn physical_params() {
        let cfg = RunConfig::from_json(
            r#"{"params": {"gamma": 1, "gamma3": 100, "kappa": 0.014142135623730951, "epsilon": 35.35533905932738}, "p": 2}"#,
        )
        .unwrap();
        let d = cfg.params.derive().unwrap();
        assert!((d.n0() - 1e6).abs() < 1e-3);
        assert!((d.r() - 0.5).abs() < 1e-12);
        let mixed = r#"{"params": {"r": 0.5, "kappa": 1}, "p": 2}"#;
        assert_eq!(RunConfig::from_json(mixed).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn auto_routing() {
        assert_eq!(Method::Auto.resolve(RegimeTag::Below), Method::Analytic);
        assert_eq!(Method::Auto.resolve(RegimeTag::Above), Method::Analytic);
        assert_eq!(Method::Auto.resolve(RegimeTag::NearThreshold), Method::Moments);
        assert_eq!(Method::Quadrature.resolve(RegimeTag::Below), Method::Quadrature);
    }
}
