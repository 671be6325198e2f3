use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ndpo_core::params::{DEFAULT_BAND, DEFAULT_N0};

use crate::commands::{self, linspace, SweepSpec};
use crate::config::{Format, Method, OutputSpec, RunConfig, SourceParams};
use crate::error::{CliError, Result};
use crate::output::{emit, to_json, write_file, write_stdout};
use crate::verify::{self, Level};

#[derive(Debug, Parser)]
#[command(name = "ndpo-litho", version, about = "Multi-photon absorption fringes of a non-degenerate parametric oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate and normalized fringe over a phase grid.
    Fringe(RunArgs),
    /// Visibility over a grid of orders and pump rates.
    Sweep(SweepArgs),
    /// Monte Carlo rates with standard errors.
    Simulate(SimulateArgs),
    /// Cross-check the computational paths.
    Verify(VerifyArgs),
    /// Tabulated rate and visibility rows, evaluated.
    Tables(TablesArgs),
    /// Amplifier vs oscillator visibilities at r = tanh G.
    CompareOpa(OpaArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON run configuration; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n0: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub phi_points: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; the JSON sidecar goes to `<out>.json`. Stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let r = self.r.ok_or_else(|| CliError::usage("missing --r (or --config)"))?;
                let p = self.p.ok_or_else(|| CliError::usage("missing --p (or --config)"))?;
                RunConfig::new(SourceParams::scaled(self.n0.unwrap_or(DEFAULT_N0), r), p)
            }
        };
        if self.config.is_some() && (self.n0.is_some() || self.r.is_some()) {
            if cfg.params.r.is_none() {
                return Err(CliError::usage("--n0/--r cannot override physical parameters from the config"));
            }
            cfg.params.n0 = self.n0.or(cfg.params.n0);
            cfg.params.r = self.r.or(cfg.params.r);
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(k) = self.phi_points {
            cfg.phi.count = k;
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(o) = &self.out {
            cfg.output.path = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Absorber orders, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    pub p_list: Vec<u32>,
    /// Explicit pump rates, comma separated; replaces the linear grid.
    #[arg(long, value_delimiter = ',')]
    pub r_values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    pub r_start: f64,
    #[arg(long, default_value_t = 0.95)]
    pub r_end: f64,
    /// Points of the inclusive linear grid.
    #[arg(long, default_value_t = 20)]
    pub r_count: usize,
    #[arg(long, default_value_t = DEFAULT_N0)]
    pub n0: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
    #[arg(long, default_value_t = DEFAULT_BAND)]
    pub band: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

impl SweepArgs {
    pub fn to_spec(&self) -> SweepSpec {
        SweepSpec {
            p_list: self.p_list.clone(),
            r_grid: self.r_values.clone().unwrap_or_else(|| linspace(self.r_start, self.r_end, self.r_count)),
            n0: self.n0,
            method: self.method,
            band: self.band,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Overrides `sim.n_trajectories`.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Also write every retained sample of every trajectory to this CSV.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    pub level: Level,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TablesArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.15,0.5,0.9")]
    pub r: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1.5707963267948966")]
    pub phi: Vec<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OpaArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    pub p_list: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,3")]
    pub gain: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_to(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, content),
        None => write_stdout(content),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fringe(args) => {
            let cfg = args.to_config()?;
            let run = commands::compute_fringe(&cfg)?;
            let artifacts = commands::fringe_artifacts(&cfg, &run);
            emit(&artifacts, || commands::fringe_rows(&run.pattern), &cfg.output)
        }
        Command::Sweep(args) => {
            let spec = args.to_spec();
            let (artifacts, rows) = commands::cmd_sweep(&spec)?;
            emit(&artifacts, || serde_json::json!(rows), &OutputSpec { format: args.format, path: args.out })
        }
        Command::Simulate(args) => {
            let mut cfg = args.run.to_config()?;
            if let Some(n) = args.trajectories {
                let mut sim = cfg.sim_config();
                sim.n_trajectories = n;
                cfg.sim = Some(sim);
            }
            if let Some(dump) = &args.dump {
                let derived = cfg.params.derive()?;
                let ensemble = commands::run_ensemble(&derived, &cfg.sim_config())?;
                write_file(dump, &commands::ensemble_dump_csv(&ensemble))?;
            }
            let (artifacts, run) = commands::cmd_simulate(&cfg)?;
            let est = run.estimates.as_ref().map(|e| e.1.clone()).unwrap_or_default();
            emit(&artifacts, || serde_json::json!(est), &cfg.output)
        }
        Command::Verify(args) => {
            let report = verify::run(args.level, commands::published_tables());
            print!("{report}");
            if let Some(path) = &args.out {
                write_file(path, &to_json(&report))?;
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::Verification { failed: report.failed().count(), total: report.checks.len() })
            }
        }
        Command::Tables(args) => {
            let tables = commands::published_tables();
            let text = match args.format {
                Format::Json => to_json(&commands::tables_json(tables, &args.r, &args.phi)?),
                Format::Csv => commands::tables_csv(tables, &args.r, &args.phi)?,
            };
            write_to(&args.out, &text)
        }
        Command::CompareOpa(args) => {
            let rows = commands::compare_opa(&args.p_list, &args.gain)?;
            write_to(&args.out, &commands::opa_csv(&rows))
        }
    }
}
