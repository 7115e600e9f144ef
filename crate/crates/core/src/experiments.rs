//! Monte Carlo replicate runner: simulate, perturb, fit and aggregate.

use rayon::prelude::*;

use crate::engine::{fit_with_rng, FitConfig};
use crate::error::{Result, SnmError};
use crate::sampling::RngStream;
use crate::summary::ParamSummary;
use crate::systems::{inject_noise, simulate, NoiseSpec, OdeModelSpec};

/// Observation grids used by the built-in experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeGrid {
    /// `n` evenly spaced points on `[0, 1]`.
    UnitInterval { n: usize },
    /// `0, 1, …, 24`.
    Lv25,
    /// `0, 1, …, 99`.
    Lv100,
    /// `n` evenly spaced points on `[0, 99]`.
    Lv500 { n: usize },
    /// `n` evenly spaced points on `[start, end]`.
    Uniform { start: f64, end: f64, n: usize },
}

impl TimeGrid {
    pub fn n(&self) -> usize {
        match *self {
            TimeGrid::UnitInterval { n } | TimeGrid::Lv500 { n } | TimeGrid::Uniform { n, .. } => n,
            TimeGrid::Lv25 => 25,
            TimeGrid::Lv100 => 100,
        }
    }
}

fn linspace(start: f64, end: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(end > start) {
        return Err(SnmError::invalid(format!(
            "grid needs n >= 2 and end > start, got n = {n} on [{start}, {end}]"
        )));
    }
    let step = (end - start) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
    v[n - 1] = end;
    Ok(v)
}

pub fn time_grid(kind: TimeGrid) -> Result<Vec<f64>> {
    match kind {
        TimeGrid::UnitInterval { n } => linspace(0.0, 1.0, n),
        TimeGrid::Lv25 => Ok((0..25).map(f64::from).collect()),
        TimeGrid::Lv100 => Ok((0..100).map(f64::from).collect()),
        TimeGrid::Lv500 { n } => linspace(0.0, 99.0, n),
        TimeGrid::Uniform { start, end, n } => linspace(start, end, n),
    }
}

/// Mean squared pointwise difference.
pub fn curve_mse(curve: &[f64], truth: &[f64]) -> Result<f64> {
    if curve.len() != truth.len() || curve.is_empty() {
        return Err(SnmError::invalid(format!(
            "curve has {} points, truth has {}",
            curve.len(),
            truth.len()
        )));
    }
    Ok(curve
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / curve.len() as f64)
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: OdeModelSpec,
    pub grid: TimeGrid,
    pub noise: NoiseSpec,
    pub replicates: usize,
    pub fit: FitConfig,
    pub seed: u64,
    /// Worker threads; `None` uses every logical processor.
    pub threads: Option<usize>,
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub index: usize,
    pub summary: Vec<ParamSummary>,
    /// Smoothed target curve against the noise-free truth.
    pub mse_x: f64,
    /// Reconstructed ODE solution against the noise-free truth.
    pub mse_g: f64,
}

impl ReplicateResult {
    pub fn mean_of(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.name == name).map(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamAggregate {
    pub name: String,
    pub truth: Option<f64>,
    /// Average of the per-replicate posterior means.
    pub avg_mean: f64,
    /// Mean over replicates of `(posterior mean − truth)²`.
    pub mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub params: Vec<ParamAggregate>,
    pub avg_mse_x: f64,
    pub avg_mse_g: f64,
    pub replicates_used: usize,
    /// Index and message of every replicate that failed and was excluded.
    pub failures: Vec<(usize, String)>,
}

impl ScenarioSummary {
    pub fn param(&self, name: &str) -> Option<&ParamAggregate> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Noise-free trajectory and grid shared by every replicate.
#[derive(Debug, Clone)]
pub struct ScenarioTruth {
    pub times: Vec<f64>,
    pub trajectory: nalgebra::DMatrix<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(SnmError::Config("replicates must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(SnmError::Config("threads must be at least 1".into()));
        }
        self.fit.validate(self.spec.dim)
    }

    pub fn truth(&self) -> Result<ScenarioTruth> {
        let times = time_grid(self.grid)?;
        let trajectory = simulate(&self.spec, &times)?;
        Ok(ScenarioTruth { times, trajectory })
    }

    /// Runs replicate `r` with stream `seed ⊕ splitmix64(r)`.
    pub fn run_replicate(&self, truth: &ScenarioTruth, r: usize) -> Result<ReplicateResult> {
        let mut rng = RngStream::for_replicate(self.seed, r as u64);
        let data = inject_noise(&truth.trajectory, &truth.times, &self.noise, &mut rng)?;
        let mut cfg = self.fit.clone();
        cfg.record_curves = false;
        let fit = fit_with_rng(&self.spec, &data, cfg, &mut rng)?;
        let target = self.spec.target;
        let true_curve: Vec<f64> = truth.trajectory.column(target).iter().copied().collect();
        let smoothed: Vec<f64> = fit.curves.smoothed.column(target).iter().copied().collect();
        Ok(ReplicateResult {
            index: r,
            summary: fit.summary,
            mse_x: curve_mse(&smoothed, &true_curve)?,
            mse_g: curve_mse(fit.curves.reconstructed.as_slice(), &true_curve)?,
        })
    }

    /// Runs the given replicate indices in parallel; results keep input order.
    pub fn run_replicates(
        &self,
        truth: &ScenarioTruth,
        indices: &[usize],
    ) -> Result<Vec<(usize, Result<ReplicateResult>)>> {
        let work = || {
            indices
                .par_iter()
                .map(|&r| (r, self.run_replicate(truth, r)))
                .collect::<Vec<_>>()
        };
        match self.threads {
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| SnmError::Config(format!("thread pool: {e}")))?;
                Ok(pool.install(work))
            }
            None => Ok(work()),
        }
    }

    /// Aggregates successful replicates into table form.
    pub fn aggregate(&self, results: &[ReplicateResult], failures: Vec<(usize, String)>) -> Result<ScenarioSummary> {
        if results.is_empty() {
            return Err(SnmError::Numerical(format!(
                "all {} replicates failed; first error: {}",
                failures.len(),
                failures.first().map_or("none", |f| f.1.as_str())
            )));
        }
        let m = results.len() as f64;
        let mut truths: Vec<(String, Option<f64>)> = vec![(self.spec.xi_name(), Some(self.spec.true_xi()?))];
        let beta = self.spec.true_beta()?;
        truths.extend(self.spec.beta_names().into_iter().zip(beta.into_iter().map(Some)));
        truths.push((self.spec.sigma2_target_name(), None));

        let params = truths
            .into_iter()
            .map(|(name, truth)| {
                let means = results
                    .iter()
                    .map(|r| {
                        r.mean_of(&name)
                            .ok_or_else(|| SnmError::Numerical(format!("replicate {} lacks {name}", r.index)))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let avg_mean = means.iter().sum::<f64>() / m;
                let mse = truth.map(|t| means.iter().map(|v| (v - t) * (v - t)).sum::<f64>() / m);
                Ok(ParamAggregate {
                    name,
                    truth,
                    avg_mean,
                    mse,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioSummary {
            params,
            avg_mse_x: results.iter().map(|r| r.mse_x).sum::<f64>() / m,
            avg_mse_g: results.iter().map(|r| r.mse_g).sum::<f64>() / m,
            replicates_used: results.len(),
            failures,
        })
    }

    /// Full scenario with per-replicate results. Failed replicates are
    /// logged, excluded from the averages and counted.
    pub fn run_detailed(&self) -> Result<(ScenarioSummary, Vec<ReplicateResult>)> {
        self.validate()?;
        let truth = self.truth()?;
        let indices: Vec<usize> = (0..self.replicates).collect();
        let mut ok = Vec::new();
        let mut failures = Vec::new();
        for (r, res) in self.run_replicates(&truth, &indices)? {
            match res {
                Ok(v) => ok.push(v),
                Err(e) => {
                    log::warn!("replicate {r} failed: {e}");
                    failures.push((r, e.to_string()));
                }
            }
        }
        let summary = self.aggregate(&ok, failures)?;
        Ok((summary, ok))
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioSummary> {
    scenario.run_detailed().map(|(s, _)| s)
}
