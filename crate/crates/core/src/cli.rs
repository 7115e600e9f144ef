//! Command-line front end: `simulate`, `fit`, `scenario` and `summarize`.
//!
//! Settings come from an optional TOML file (`--config`), then from flags,
//! which win. Relative paths in a config file resolve against the file's
//! directory. The seed falls back to `SNM_SEED` and then to 1.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::engine::{fit, FitConfig, HyperParams};
use crate::error::{Result, SnmError};
use crate::experiments::{time_grid, Scenario, TimeGrid};
use crate::io;
use crate::sampling::RngStream;
use crate::summary::{summarize_all, ParamSummary};
use crate::systems::{self, inject_noise, simulate, NoiseMode, NoiseSpec, OdeModelSpec};

pub const SEED_ENV: &str = "SNM_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "snm", version, about = "Bayesian smoothing-and-matching for ODE parameters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a noisy dataset; writes data.csv, truth.csv and noise.csv.
    Simulate(RunArgs),
    /// Fit a dataset; writes chains.csv, summary.csv and curves.csv.
    Fit(RunArgs),
    /// Replicated simulate-and-fit study; writes scenario_summary.csv and replicates.csv.
    Scenario(RunArgs),
    /// Summarize a chains.csv file into summary.csv.
    Summarize(SummarizeArgs),
}

/// Either a single value or a list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Every setting of a run. All keys are optional; unknown keys are errors.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<String>,
    /// One-based index of the inferred equation.
    pub target: Option<usize>,
    pub params: Option<BTreeMap<String, f64>>,
    /// `unit`, `lv25`, `lv100`, `lv500` or `uniform`.
    pub grid: Option<String>,
    pub n: Option<usize>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub noise_mode: Option<String>,
    pub noise_level: Option<OneOrMany<f64>>,
    pub replicates: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub knots: Option<OneOrMany<usize>>,
    pub refine: Option<usize>,
    pub alpha_theta: Option<OneOrMany<f64>>,
    pub gamma_theta: Option<OneOrMany<f64>>,
    pub alpha_beta: Option<f64>,
    pub gamma_beta: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SnmError::Config(e.to_string()))
    }

    /// Reads a config file and anchors its relative paths at the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SnmError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| SnmError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.out, &mut cfg.data, &mut cfg.truth].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// `top` wins wherever it is set; `params` maps are merged.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        let params = match (self.params.take(), top.params.clone()) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (a, b) => b.or(a),
        };
        overlay_fields!(self, top; system, target, grid, n, t_start, t_end, noise_mode, noise_level,
            replicates, iterations, burn_in, thin, knots, refine, alpha_theta, gamma_theta,
            alpha_beta, gamma_beta, seed, threads, out, data, truth);
        self.params = params;
        self
    }

    /// Flag, then file, then `SNM_SEED`, then the default.
    pub fn resolve_seed(&self, env: Option<&str>) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match env {
            Some(raw) => raw
                .trim()
                .parse()
                .map_err(|_| SnmError::Config(format!("{SEED_ENV}=`{raw}` is not an unsigned integer"))),
            None => Ok(DEFAULT_SEED),
        }
    }

    pub fn system_name(&self) -> &str {
        self.system.as_deref().unwrap_or("logistic")
    }

    /// Built-in system with parameter overrides and target applied.
    pub fn spec(&self) -> Result<OdeModelSpec> {
        let mut spec = systems::by_name(self.system_name())?;
        if let Some(t) = self.target {
            if t == 0 {
                return Err(SnmError::Config("target is one-based".into()));
            }
            spec = spec.with_target(t - 1)?;
        }
        for (name, value) in self.params.iter().flatten() {
            spec.set_param(name, *value)?;
        }
        Ok(spec)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let fhn = matches!(self.system_name(), "fitzhugh_nagumo" | "fhn");
        let default_kind = if fhn { "uniform" } else { "unit" };
        let kind = self.grid.as_deref().unwrap_or(default_kind);
        let n = self.n;
        let need_n = |default: usize| n.unwrap_or(default);
        let grid = match kind {
            "unit" => TimeGrid::UnitInterval { n: need_n(100) },
            "lv25" => TimeGrid::Lv25,
            "lv100" => TimeGrid::Lv100,
            "lv500" => TimeGrid::Lv500 { n: need_n(500) },
            "uniform" => TimeGrid::Uniform {
                start: self.t_start.unwrap_or(0.0),
                end: self.t_end.unwrap_or(if fhn { 20.0 } else { 1.0 }),
                n: need_n(if fhn { 41 } else { 100 }),
            },
            other => {
                return Err(SnmError::Config(format!(
                    "unknown grid `{other}` (expected unit, lv25, lv100, lv500, uniform)"
                )))
            }
        };
        if let Some(n) = n {
            if grid.n() != n {
                return Err(SnmError::Config(format!("grid `{kind}` has {} points, but n = {n}", grid.n())));
            }
        }
        Ok(grid)
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        let fhn = matches!(self.system_name(), "fitzhugh_nagumo" | "fhn");
        let mode: NoiseMode = match &self.noise_mode {
            Some(m) => m.parse()?,
            None if fhn => NoiseMode::Sd,
            None => NoiseMode::Snr,
        };
        let levels = match &self.noise_level {
            Some(l) => l.to_vec(),
            None if mode == NoiseMode::Sd => vec![0.5],
            None if mode == NoiseMode::Snr => vec![13.0],
            None => return Err(SnmError::Config("noise_level is required for prop_of_mean noise".into())),
        };
        Ok(NoiseSpec::new(mode, levels))
    }

    pub fn fit_config(&self, seed: u64) -> FitConfig {
        let d = FitConfig::default();
        let h = HyperParams::default();
        FitConfig {
            iterations: self.iterations.unwrap_or(d.iterations),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            thin: self.thin.unwrap_or(d.thin),
            knots: self.knots.as_ref().map_or(d.knots, OneOrMany::to_vec),
            hyper: HyperParams {
                alpha_theta: self.alpha_theta.as_ref().map_or(h.alpha_theta, OneOrMany::to_vec),
                gamma_theta: self.gamma_theta.as_ref().map_or(h.gamma_theta, OneOrMany::to_vec),
                alpha_beta: self.alpha_beta.unwrap_or(h.alpha_beta),
                gamma_beta: self.gamma_beta.unwrap_or(h.gamma_beta),
            },
            refine: self.refine.unwrap_or(d.refine),
            seed,
            record_curves: d.record_curves,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

/// Flags shared by `simulate`, `fit` and `scenario`; each overrides the
/// config key of the same name.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// logistic, lotka_volterra, hiv or fitzhugh_nagumo.
    #[arg(long)]
    pub system: Option<String>,
    /// One-based index of the inferred equation.
    #[arg(long)]
    pub target: Option<usize>,
    /// Simulation parameter or initial condition, e.g. `beta3=0.05` or `xi2=1`.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// snr, prop_of_mean or sd.
    #[arg(long)]
    pub noise_mode: Option<String>,
    /// One level, or one per component separated by commas.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub noise_level: Vec<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// One count, or one per component separated by commas.
    #[arg(long, value_delimiter = ',')]
    pub knots: Vec<usize>,
    #[arg(long)]
    pub refine: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_theta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub gamma_theta: Vec<f64>,
    #[arg(long)]
    pub alpha_beta: Option<f64>,
    #[arg(long)]
    pub gamma_beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for `scenario` (default: all logical processors).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset to fit.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Noise-free trajectory for the `truth` column of curves.csv.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

fn many<T: Clone>(v: &[T]) -> Option<OneOrMany<T>> {
    match v.len() {
        0 => None,
        1 => Some(OneOrMany::One(v[0].clone())),
        _ => Some(OneOrMany::Many(v.to_vec())),
    }
}

impl RunArgs {
    pub fn as_config(&self) -> RunConfig {
        RunConfig {
            system: self.system.clone(),
            target: self.target,
            params: (!self.params.is_empty()).then(|| self.params.iter().cloned().collect()),
            grid: self.grid.clone(),
            n: self.n,
            t_start: self.t_start,
            t_end: self.t_end,
            noise_mode: self.noise_mode.clone(),
            noise_level: many(&self.noise_level),
            replicates: self.replicates,
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            knots: many(&self.knots),
            refine: self.refine,
            alpha_theta: many(&self.alpha_theta),
            gamma_theta: many(&self.gamma_theta),
            alpha_beta: self.alpha_beta,
            gamma_beta: self.gamma_beta,
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            data: self.data.clone(),
            truth: self.truth.clone(),
        }
    }

    /// File settings overlaid with flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self.as_config()))
    }
}

#[derive(Args, Debug)]
pub struct SummarizeArgs {
    /// Long-format chain file.
    #[arg(long)]
    pub chains: PathBuf,
    /// Draws at iterations below this are discarded.
    #[arg(long, default_value_t = FitConfig::default().burn_in)]
    pub burn_in: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out)?;
    Ok(out)
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn print_summary(summary: &[ParamSummary]) {
    println!("{:<16} {:>12} {:>12} {:>12} {:>12}", "param", "mean", "sd", "q025", "q975");
    for s in summary {
        println!(
            "{:<16} {:>12.5} {:>12.5} {:>12.5} {:>12.5}",
            s.name, s.mean, s.sd, s.q025, s.q975
        );
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.resolve_seed(env_seed().as_deref())?;
    let spec = cfg.spec()?;
    let times = time_grid(cfg.time_grid()?)?;
    let noise = cfg.noise()?;
    let truth = simulate(&spec, &times)?;
    let data = inject_noise(&truth, &times, &noise, &mut RngStream::new(seed))?;
    let out = prepare_out(cfg)?;
    io::write_dataset(&out.join("data.csv"), &data, false)?;
    io::write_trajectory(&out.join("truth.csv"), &times, &truth)?;
    io::write_noise(&out.join("noise.csv"), &noise, data.noise_sd.as_deref().unwrap_or_default())?;
    println!("{}: {} points, seed {seed}, written to {}", spec.name, times.len(), out.display());
    Ok(())
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.resolve_seed(env_seed().as_deref())?;
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| SnmError::Config("fit needs a dataset (--data or `data` key)".into()))?;
    let mut data = io::read_dataset(path)?;
    if let Some(tp) = &cfg.truth {
        let truth = io::read_dataset(tp)?;
        if truth.times != data.times {
            return Err(SnmError::invalid(format!(
                "{} and {} have different time grids",
                tp.display(),
                path.display()
            )));
        }
        data = data.with_truth(truth.y)?;
    }
    let spec = cfg.spec()?;
    if data.p() != spec.dim {
        return Err(SnmError::invalid(format!(
            "{} has {} components but {} needs {}",
            path.display(),
            data.p(),
            spec.name,
            spec.dim
        )));
    }
    let config = FitConfig {
        record_curves: false,
        ..cfg.fit_config(seed)
    };
    let result = fit(&spec, &data, config)?;
    let out = prepare_out(cfg)?;
    io::write_chains(&out.join("chains.csv"), &result.chains)?;
    io::write_summary(&out.join("summary.csv"), &result.summary)?;
    let t = spec.target;
    let truth_col: Option<Vec<f64>> = data.truth.as_ref().map(|x| x.column(t).iter().copied().collect());
    let smoothed: Vec<f64> = result.curves.smoothed.column(t).iter().copied().collect();
    io::write_curves(
        &out.join("curves.csv"),
        &data.times,
        truth_col.as_deref(),
        &smoothed,
        result.curves.reconstructed.as_slice(),
    )?;
    print_summary(&result.summary);
    Ok(())
}

pub fn cmd_scenario(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.resolve_seed(env_seed().as_deref())?;
    let spec = cfg.spec()?;
    let target = spec.target;
    let scenario = Scenario {
        spec,
        grid: cfg.time_grid()?,
        noise: cfg.noise()?,
        replicates: cfg.replicates.unwrap_or(20),
        fit: cfg.fit_config(seed),
        seed,
        threads: cfg.threads,
    };
    let (summary, results) = scenario.run_detailed()?;
    let out = prepare_out(cfg)?;
    io::write_scenario_summary(&out.join("scenario_summary.csv"), &summary, target)?;
    io::write_replicates(&out.join("replicates.csv"), &results)?;
    println!("{:<16} {:>10} {:>12} {:>12}", "param", "truth", "avg mean", "mse");
    for p in &summary.params {
        let truth = p.truth.map_or(String::new(), |v| format!("{v:.4}"));
        let mse = p.mse.map_or(String::new(), |v| format!("{v:.4e}"));
        println!("{:<16} {truth:>10} {:>12.5} {mse:>12}", p.name, p.avg_mean);
    }
    println!("mse_x{} {:.4e}  mse_g{} {:.4e}", target + 1, summary.avg_mse_x, target + 1, summary.avg_mse_g);
    println!("{} replicates used, {} failed", summary.replicates_used, summary.failures.len());
    Ok(())
}

pub fn cmd_summarize(args: &SummarizeArgs) -> Result<()> {
    let traces = io::read_chains(&args.chains)?;
    let summary = summarize_all(&traces, args.burn_in)?;
    std::fs::create_dir_all(&args.out)?;
    io::write_summary(&args.out.join("summary.csv"), &summary)?;
    print_summary(&summary);
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&a.resolve()?),
        Command::Fit(a) => cmd_fit(&a.resolve()?),
        Command::Scenario(a) => cmd_scenario(&a.resolve()?),
        Command::Summarize(a) => cmd_summarize(a),
    }
}

/// Exit status for an error: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &SnmError) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_config_parses_and_rejects_unknown_keys() {
        let cfg = RunConfig::from_toml(
            "system = \"lotka_volterra\"\nnoise_level = [13, 6.5]\nknots = 5\nparams = { beta3 = 0.1, xi2 = 1.0 }\n",
        )
        .unwrap();
        assert_eq!(cfg.system.as_deref(), Some("lotka_volterra"));
        assert_eq!(cfg.noise_level, Some(OneOrMany::Many(vec![13.0, 6.5])));
        assert_eq!(cfg.knots, Some(OneOrMany::One(5)));
        assert_eq!(cfg.params.unwrap()["xi2"], 1.0);
        let err = RunConfig::from_toml("sytem = \"logistic\"").unwrap_err();
        assert!(err.to_string().contains("sytem"), "{err}");
    }

    #[test]
    fn flags_override_file_and_params_merge() {
        let file = RunConfig::from_toml("iterations = 50\nburn_in = 10\nparams = { beta1 = 1.0, beta2 = 2.0 }").unwrap();
        let flags = RunArgs {
            iterations: Some(80),
            params: vec![("beta2".into(), 3.0)],
            ..RunArgs::default()
        };
        let cfg = file.overlay(flags.as_config());
        assert_eq!(cfg.iterations, Some(80));
        assert_eq!(cfg.burn_in, Some(10));
        let p = cfg.params.unwrap();
        assert_eq!((p["beta1"], p["beta2"]), (1.0, 3.0));
    }

    #[test]
    fn seed_precedence() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.resolve_seed(None).unwrap(), DEFAULT_SEED);
        assert_eq!(cfg.resolve_seed(Some("42")).unwrap(), 42);
        assert!(cfg.resolve_seed(Some("x")).is_err());
        cfg.seed = Some(7);
        assert_eq!(cfg.resolve_seed(Some("42")).unwrap(), 7);
    }

    #[test]
    fn grid_and_n_must_agree() {
        let cfg = RunConfig { grid: Some("lv25".into()), n: Some(30), ..RunConfig::default() };
        assert!(cfg.time_grid().is_err());
        let cfg = RunConfig { grid: Some("lv500".into()), n: Some(496), ..RunConfig::default() };
        assert_eq!(cfg.time_grid().unwrap(), TimeGrid::Lv500 { n: 496 });
        let cfg = RunConfig { system: Some("fitzhugh_nagumo".into()), ..RunConfig::default() };
        assert_eq!(cfg.time_grid().unwrap(), TimeGrid::Uniform { start: 0.0, end: 20.0, n: 41 });
        assert_eq!(cfg.noise().unwrap(), NoiseSpec::new(NoiseMode::Sd, vec![0.5]));
    }

    #[test]
    fn param_flag_syntax() {
        assert_eq!(parse_param("beta3 = 0.5").unwrap(), ("beta3".into(), 0.5));
        assert!(parse_param("beta3").is_err());
        assert!(parse_param("beta3=x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&SnmError::Numerical("x".into())), 3);
        assert_eq!(exit_code(&SnmError::Config("x".into())), 2);
        assert_eq!(run(["snm", "fit", "--nonsense"]), 2);
    }
}
