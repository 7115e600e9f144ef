//! ODE systems whose target equation is linear in its parameters, plus
//! trajectory simulation and noise injection.
//!
//! A system is described by an [`OdeModelSpec`]: the full right-hand side
//! used for simulation, and the regressor functions `h_j` such that the
//! target equation reads `x'_target = Σ_j β_j h_j(x)`. Component indices are
//! zero-based in the API and one-based in parameter names (`xi1`, `sigma2_1`).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Result, SnmError};
use crate::sampling::{uniform_draw, RngStream};
use crate::spline::check_increasing;

type StateFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type RhsFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
type BetaMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Default RK4 sub-steps per observation interval.
pub const DEFAULT_SUBSTEPS: usize = 20;

/// A known function `h_j` of the state vector.
#[derive(Clone)]
pub struct Regressor {
    pub label: String,
    f: StateFn,
}

impl Regressor {
    pub fn new(label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Regressor {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, state: &[f64]) -> f64 {
        (self.f)(state)
    }
}

impl fmt::Debug for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Regressor({})", self.label)
    }
}

#[derive(Clone)]
pub struct OdeModelSpec {
    pub name: String,
    /// Number of components `p`.
    pub dim: usize,
    /// Component whose equation is inferred (zero-based).
    pub target: usize,
    pub regressors: Vec<Regressor>,
    /// Names of the full simulation parameter vector.
    pub param_names: Vec<String>,
    /// Simulation parameter values; `None` when the user must supply them.
    pub params: Vec<Option<f64>>,
    /// Initial conditions; `None` when the user must supply them.
    pub x0: Vec<Option<f64>>,
    /// Knots per component used when the caller does not choose.
    pub default_knots: usize,
    rhs: RhsFn,
    beta_map: BetaMap,
}

impl fmt::Debug for OdeModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeModelSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("target", &self.target)
            .field("regressors", &self.regressors)
            .field("param_names", &self.param_names)
            .field("params", &self.params)
            .field("x0", &self.x0)
            .finish()
    }
}

impl OdeModelSpec {
    /// Assembles a custom system.
    ///
    /// `rhs(state, params, out)` writes the full derivative; `beta_map`
    /// maps the simulation parameters to the coefficients of the target
    /// equation in the order of `regressors`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        target: usize,
        regressors: Vec<Regressor>,
        param_names: Vec<String>,
        rhs: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        beta_map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(SnmError::invalid("system dimension must be at least 1"));
        }
        if target >= dim {
            return Err(SnmError::invalid(format!(
                "target component {} out of range for a {dim}-component system",
                target + 1
            )));
        }
        if regressors.is_empty() {
            return Err(SnmError::invalid("at least one regressor is required"));
        }
        let np = param_names.len();
        Ok(OdeModelSpec {
            name: name.into(),
            dim,
            target,
            regressors,
            param_names,
            params: vec![None; np],
            x0: vec![None; dim],
            default_knots: 10,
            rhs: Arc::new(rhs),
            beta_map: Arc::new(beta_map),
        })
    }

    /// Number of target-equation parameters `b`.
    pub fn b(&self) -> usize {
        self.regressors.len()
    }

    /// Chain/summary names of the target coefficients: `beta1`, `beta2`, …
    pub fn beta_names(&self) -> Vec<String> {
        (1..=self.b()).map(|j| format!("beta{j}")).collect()
    }

    /// Name of the inferred initial condition, e.g. `xi1`.
    pub fn xi_name(&self) -> String {
        format!("xi{}", self.target + 1)
    }

    /// Name of the shared nuisance variance, e.g. `sigma2_1`.
    pub fn sigma2_target_name(&self) -> String {
        format!("sigma2_{}", self.target + 1)
    }

    /// Sets a simulation parameter or an initial condition (`xi1`, `xi2`, …).
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(SnmError::invalid(format!("parameter {name} must be finite")));
        }
        if let Some(i) = self.param_names.iter().position(|p| p == name) {
            self.params[i] = Some(value);
            return Ok(());
        }
        if let Some(k) = name
            .strip_prefix("xi")
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|k| (1..=self.dim).contains(k))
        {
            self.x0[k - 1] = Some(value);
            return Ok(());
        }
        Err(SnmError::Config(format!(
            "system {} has no parameter `{name}` (known: {}, xi1..xi{})",
            self.name,
            self.param_names.join(", "),
            self.dim
        )))
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Result<Self> {
        self.set_param(name, value)?;
        Ok(self)
    }

    pub fn with_target(mut self, target: usize) -> Result<Self> {
        if target >= self.dim {
            return Err(SnmError::invalid(format!(
                "target component {} out of range for {}",
                target + 1,
                self.name
            )));
        }
        self.target = target;
        Ok(self)
    }

    /// Full simulation parameter vector; errors on the first unset entry.
    pub fn simulation_params(&self) -> Result<Vec<f64>> {
        self.params
            .iter()
            .zip(&self.param_names)
            .map(|(v, n)| v.ok_or_else(|| SnmError::MissingParameter(n.clone())))
            .collect()
    }

    pub fn initial_state(&self) -> Result<Vec<f64>> {
        self.x0
            .iter()
            .enumerate()
            .map(|(k, v)| v.ok_or_else(|| SnmError::MissingParameter(format!("xi{}", k + 1))))
            .collect()
    }

    /// True target coefficients implied by the simulation parameters.
    pub fn true_beta(&self) -> Result<Vec<f64>> {
        Ok((self.beta_map)(&self.simulation_params()?))
    }

    pub fn true_xi(&self) -> Result<f64> {
        self.x0[self.target].ok_or_else(|| SnmError::MissingParameter(self.xi_name()))
    }

    /// Writes `g(state; params)` into `out`.
    pub fn rhs(&self, state: &[f64], params: &[f64], out: &mut [f64]) {
        (self.rhs)(state, params, out)
    }

    pub fn beta_from_params(&self, params: &[f64]) -> Vec<f64> {
        (self.beta_map)(params)
    }

    /// Largest `|g_target(x) − Σ β_j h_j(x)|` over random states and
    /// parameter vectors.
    pub fn linearity_defect(&self, trials: usize, rng: &mut RngStream) -> f64 {
        let mut worst: f64 = 0.0;
        let mut out = vec![0.0; self.dim];
        for _ in 0..trials {
            let state: Vec<f64> = (0..self.dim).map(|_| uniform_draw(-3.0, 3.0, rng)).collect();
            let params: Vec<f64> = (0..self.param_names.len())
                .map(|_| {
                    let mag = uniform_draw(0.1, 2.0, rng);
                    if uniform_draw(0.0, 1.0, rng) < 0.5 {
                        -mag
                    } else {
                        mag
                    }
                })
                .collect();
            self.rhs(&state, &params, &mut out);
            let beta = self.beta_from_params(&params);
            let lin: f64 = beta
                .iter()
                .zip(&self.regressors)
                .map(|(b, h)| b * h.eval(&state))
                .sum();
            worst = worst.max((out[self.target] - lin).abs());
        }
        worst
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Logistic growth `x' = β₁ x + β₂ x²` with `β₁ = 2.5`, `β₂ = −0.125`, `ξ₁ = 0.1`.
pub fn logistic() -> OdeModelSpec {
    let mut spec = OdeModelSpec::new(
        "logistic",
        1,
        0,
        vec![
            Regressor::new("x1", |x| x[0]),
            Regressor::new("x1^2", |x| x[0] * x[0]),
        ],
        names(&["beta1", "beta2"]),
        |x, p, out| out[0] = p[0] * x[0] + p[1] * x[0] * x[0],
        |p| vec![p[0], p[1]],
    )
    .expect("logistic spec is valid");
    spec.params = vec![Some(2.5), Some(-0.125)];
    spec.x0 = vec![Some(0.1)];
    spec.default_knots = 2;
    spec
}

/// Lotka-Volterra; the first equation `x₁' = β₁ x₁ + β₂ x₁ x₂` is inferred.
///
/// Defaults `β₁ = 0.1`, `β₂ = −0.2`, `ξ₁ = 2`; `β₃`, `β₄` and `ξ₂` have no
/// default and must be set before simulating.
pub fn lotka_volterra() -> OdeModelSpec {
    let mut spec = OdeModelSpec::new(
        "lotka_volterra",
        2,
        0,
        vec![
            Regressor::new("x1", |x| x[0]),
            Regressor::new("x1*x2", |x| x[0] * x[1]),
        ],
        names(&["beta1", "beta2", "beta3", "beta4"]),
        |x, p, out| {
            out[0] = p[0] * x[0] + p[1] * x[0] * x[1];
            out[1] = p[2] * x[1] + p[3] * x[0] * x[1];
        },
        |p| vec![p[0], p[1]],
    )
    .expect("lotka-volterra spec is valid");
    spec.params = vec![Some(0.1), Some(-0.2), None, None];
    spec.x0 = vec![Some(2.0), None];
    spec.default_knots = 5;
    spec
}

/// HIV viral fitness model; the first equation
/// `x₁' = β₁ + β₂ x₁ + β₃ x₁ x₃` is inferred.
///
/// Defaults `β₁ = 20`, `β₂ = −0.108`, `β₃ = −0.00095`, `ξ₁ = 60`; `β₄`, `β₅`,
/// `ξ₂`, `ξ₃` must be set before simulating.
pub fn hiv() -> OdeModelSpec {
    let mut spec = OdeModelSpec::new(
        "hiv",
        3,
        0,
        vec![
            Regressor::new("1", |_| 1.0),
            Regressor::new("x1", |x| x[0]),
            Regressor::new("x1*x3", |x| x[0] * x[2]),
        ],
        names(&["beta1", "beta2", "beta3", "beta4", "beta5"]),
        |x, p, out| {
            out[0] = p[0] + p[1] * x[0] + p[2] * x[0] * x[2];
            out[1] = p[2] * x[0] * x[2] - 0.5 * x[1];
            out[2] = 0.5 * p[3] * x[1] + p[4] * x[2];
        },
        |p| vec![p[0], p[1], p[2]],
    )
    .expect("hiv spec is valid");
    spec.params = vec![Some(20.0), Some(-0.108), Some(-0.095e-2), None, None];
    spec.x0 = vec![Some(60.0), None, None];
    spec.default_knots = 20;
    spec
}

/// FitzHugh-Nagumo with simulation parameters `(a, b, c)`; the second
/// equation is inferred in its linear form
/// `x₂' = β₁ x₁ + β₂ + β₃ x₂` with `β₁ = −1/c`, `β₂ = a/c`, `β₃ = −b/c`.
pub fn fitzhugh_nagumo() -> OdeModelSpec {
    let mut spec = OdeModelSpec::new(
        "fitzhugh_nagumo",
        2,
        1,
        vec![
            Regressor::new("x1", |x| x[0]),
            Regressor::new("1", |_| 1.0),
            Regressor::new("x2", |x| x[1]),
        ],
        names(&["a", "b", "c"]),
        |x, p, out| {
            let (a, b, c) = (p[0], p[1], p[2]);
            out[0] = c * (x[0] - x[0].powi(3) / 3.0 + x[1]);
            out[1] = -(x[0] - a + b * x[1]) / c;
        },
        |p| vec![-1.0 / p[2], p[0] / p[2], -p[1] / p[2]],
    )
    .expect("fitzhugh-nagumo spec is valid");
    spec.params = vec![Some(0.2), Some(0.2), Some(3.0)];
    spec.x0 = vec![Some(0.5), Some(0.5)];
    spec.default_knots = 10;
    spec
}

/// Built-in system by name.
pub fn by_name(name: &str) -> Result<OdeModelSpec> {
    match name {
        "logistic" => Ok(logistic()),
        "lotka_volterra" | "lv" => Ok(lotka_volterra()),
        "hiv" => Ok(hiv()),
        "fitzhugh_nagumo" | "fhn" => Ok(fitzhugh_nagumo()),
        other => Err(SnmError::Config(format!(
            "unknown system `{other}` (expected logistic, lotka_volterra, hiv, fitzhugh_nagumo)"
        ))),
    }
}

/// Observation times, noisy observations and, for simulated data, the
/// noise-free trajectory and the noise levels used.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub times: Vec<f64>,
    /// `n × p` observations.
    pub y: DMatrix<f64>,
    pub truth: Option<DMatrix<f64>>,
    pub noise_sd: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(times: Vec<f64>, y: DMatrix<f64>) -> Result<Self> {
        if times.len() < 3 {
            return Err(SnmError::invalid(format!(
                "a dataset needs at least 3 time points, got {}",
                times.len()
            )));
        }
        check_increasing(&times)?;
        if y.nrows() != times.len() {
            return Err(SnmError::invalid(format!(
                "{} observation rows for {} time points",
                y.nrows(),
                times.len()
            )));
        }
        if y.ncols() == 0 {
            return Err(SnmError::invalid("a dataset needs at least one component"));
        }
        if let Some((i, _)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SnmError::invalid(format!(
                "observation at row {}, component {} is missing or non-finite",
                i % y.nrows() + 1,
                i / y.nrows() + 1
            )));
        }
        Ok(Dataset {
            times,
            y,
            truth: None,
            noise_sd: None,
        })
    }

    pub fn with_truth(mut self, truth: DMatrix<f64>) -> Result<Self> {
        if truth.shape() != self.y.shape() {
            return Err(SnmError::invalid(format!(
                "truth shape {:?} differs from observation shape {:?}",
                truth.shape(),
                self.y.shape()
            )));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn p(&self) -> usize {
        self.y.ncols()
    }
}

/// Classical RK4 with `substeps` equal steps per observation interval.
/// Returns the `n × p` trajectory at `times`; row 0 is `x0` exactly.
pub fn rk4_integrate<F>(f: F, x0: &[f64], times: &[f64], substeps: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    if substeps == 0 {
        return Err(SnmError::invalid("RK4 needs at least one sub-step per interval"));
    }
    if times.is_empty() {
        return Err(SnmError::invalid("no output times"));
    }
    check_increasing(times)?;
    let p = x0.len();
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SnmError::Divergence { time: times[0] });
    }
    let mut out = DMatrix::zeros(times.len(), p);
    out.row_mut(0).iter_mut().zip(x0).for_each(|(o, v)| *o = *v);

    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; p], vec![0.0; p], vec![0.0; p], vec![0.0; p]);
    let mut tmp = vec![0.0; p];
    for i in 1..times.len() {
        let h = (times[i] - times[i - 1]) / substeps as f64;
        for s in 0..substeps {
            f(&x, &mut k1);
            for d in 0..p {
                tmp[d] = x[d] + 0.5 * h * k1[d];
            }
            f(&tmp, &mut k2);
            for d in 0..p {
                tmp[d] = x[d] + 0.5 * h * k2[d];
            }
            f(&tmp, &mut k3);
            for d in 0..p {
                tmp[d] = x[d] + h * k3[d];
            }
            f(&tmp, &mut k4);
            for d in 0..p {
                x[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(SnmError::Divergence {
                    time: times[i - 1] + h * (s + 1) as f64,
                });
            }
        }
        out.row_mut(i).iter_mut().zip(&x).for_each(|(o, v)| *o = *v);
    }
    Ok(out)
}

/// Noise-free trajectory of `spec` from `x0` using its simulation parameters.
pub fn rk4_solve(spec: &OdeModelSpec, x0: &[f64], times: &[f64]) -> Result<DMatrix<f64>> {
    rk4_solve_with(spec, x0, times, DEFAULT_SUBSTEPS)
}

pub fn rk4_solve_with(
    spec: &OdeModelSpec,
    x0: &[f64],
    times: &[f64],
    substeps: usize,
) -> Result<DMatrix<f64>> {
    if x0.len() != spec.dim {
        return Err(SnmError::invalid(format!(
            "initial state has {} entries for a {}-component system",
            x0.len(),
            spec.dim
        )));
    }
    let params = spec.simulation_params()?;
    rk4_integrate(|x, out| spec.rhs(x, &params, out), x0, times, substeps)
}

/// Trajectory from the spec's own initial conditions and parameters.
pub fn simulate(spec: &OdeModelSpec, times: &[f64]) -> Result<DMatrix<f64>> {
    spec.simulation_params()?;
    let x0 = spec.initial_state()?;
    rk4_solve(spec, &x0, times)
}

/// `n × b` matrix with entry `(i, j) = h_j(row i)`.
pub fn eval_regressors(spec: &OdeModelSpec, components: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if components.ncols() != spec.dim {
        return Err(SnmError::invalid(format!(
            "component matrix has {} columns, {} has {} components",
            components.ncols(),
            spec.name,
            spec.dim
        )));
    }
    let n = components.nrows();
    let mut out = DMatrix::zeros(n, spec.b());
    let mut row = vec![0.0; spec.dim];
    for i in 0..n {
        for k in 0..spec.dim {
            row[k] = components[(i, k)];
        }
        for (j, h) in spec.regressors.iter().enumerate() {
            let v = h.eval(&row);
            if !v.is_finite() {
                return Err(SnmError::NonFiniteRegressor { j: j + 1, i: i + 1 });
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// How the per-component noise standard deviation is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// `sd = sd(signal) / level`.
    Snr,
    /// `sd = level · mean(|signal|)`.
    PropOfMean,
    /// `sd = level`.
    Sd,
}

impl NoiseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseMode::Snr => "snr",
            NoiseMode::PropOfMean => "prop_of_mean",
            NoiseMode::Sd => "sd",
        }
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = SnmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(NoiseMode::Snr),
            "prop_of_mean" => Ok(NoiseMode::PropOfMean),
            "sd" => Ok(NoiseMode::Sd),
            other => Err(SnmError::Config(format!(
                "unknown noise mode `{other}` (expected snr, prop_of_mean, sd)"
            ))),
        }
    }
}

/// Noise mode plus one level per component (a single level is broadcast).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub levels: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(mode: NoiseMode, levels: Vec<f64>) -> Self {
        NoiseSpec { mode, levels }
    }

    pub fn snr(level: f64) -> Self {
        Self::new(NoiseMode::Snr, vec![level])
    }

    pub fn level_for(&self, k: usize) -> Result<f64> {
        let lvl = match self.levels.len() {
            0 => return Err(SnmError::invalid("no noise level given")),
            1 => self.levels[0],
            _ => *self.levels.get(k).ok_or_else(|| {
                SnmError::invalid(format!("no noise level for component {}", k + 1))
            })?,
        };
        if !(lvl > 0.0) || lvl.is_nan() {
            return Err(SnmError::invalid(format!("noise level must be positive, got {lvl}")));
        }
        Ok(lvl)
    }

    /// Noise standard deviation for each column of `truth`.
    pub fn noise_sds(&self, truth: &DMatrix<f64>) -> Result<Vec<f64>> {
        if self.levels.len() > 1 && self.levels.len() != truth.ncols() {
            return Err(SnmError::invalid(format!(
                "{} noise levels for {} components",
                self.levels.len(),
                truth.ncols()
            )));
        }
        (0..truth.ncols())
            .map(|k| {
                let level = self.level_for(k)?;
                let col = truth.column(k);
                let n = col.len() as f64;
                match self.mode {
                    NoiseMode::Snr => {
                        let mean = col.sum() / n;
                        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                            / (n - 1.0))
                            .sqrt();
                        if !(sd > 0.0) {
                            return Err(SnmError::invalid(format!(
                                "component {} is constant; SNR noise is undefined",
                                k + 1
                            )));
                        }
                        Ok(sd / level)
                    }
                    NoiseMode::PropOfMean => Ok(level * col.iter().map(|v| v.abs()).sum::<f64>() / n),
                    NoiseMode::Sd => Ok(level),
                }
            })
            .collect()
    }
}

/// Adds i.i.d. Gaussian noise to each component of a noise-free trajectory.
pub fn inject_noise(
    truth: &DMatrix<f64>,
    times: &[f64],
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<Dataset> {
    if truth.iter().any(|v| !v.is_finite()) {
        return Err(SnmError::invalid("trajectory contains non-finite values"));
    }
    let sds = noise.noise_sds(truth)?;
    let mut y = truth.clone();
    // column-major: component by component
    for k in 0..y.ncols() {
        for i in 0..y.nrows() {
            y[(i, k)] += sds[k] * rng.standard_normal();
        }
    }
    let mut ds = Dataset::new(times.to_vec(), y)?.with_truth(truth.clone())?;
    ds.noise_sd = Some(sds);
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn logistic_exact(t: f64) -> f64 {
        let (a, k, x0) = (2.5, 20.0, 0.1);
        k * x0 * (a * t).exp() / (k + x0 * ((a * t).exp() - 1.0))
    }

    fn unit_grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    fn rk4_logistic_error(substeps: usize) -> f64 {
        let spec = logistic();
        let t = unit_grid(11);
        let traj = rk4_solve_with(&spec, &[0.1], &t, substeps).unwrap();
        t.iter()
            .enumerate()
            .map(|(i, ti)| (traj[(i, 0)] - logistic_exact(*ti)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rk4_matches_logistic_closed_form() {
        // 10 intervals of 0.1, 20 sub-steps: h = 0.005
        assert!(rk4_logistic_error(20) < 1e-6);
        let ratio = rk4_logistic_error(10) / rk4_logistic_error(20);
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk4_first_row_is_initial_state() {
        let spec = fitzhugh_nagumo();
        let t: Vec<f64> = (0..41).map(|i| i as f64 * 0.5).collect();
        let traj = rk4_solve(&spec, &[0.5, 0.5], &t).unwrap();
        assert_eq!(traj[(0, 0)], 0.5);
        assert_eq!(traj[(0, 1)], 0.5);
    }

    #[test]
    fn lotka_volterra_origin_is_fixed() {
        let spec = lotka_volterra()
            .with_param("beta3", -0.3)
            .unwrap()
            .with_param("beta4", 0.05)
            .unwrap();
        let t: Vec<f64> = (0..25).map(f64::from).collect();
        let traj = rk4_solve(&spec, &[0.0, 0.0], &t).unwrap();
        assert!(traj.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rk4_reports_divergence_time() {
        // x' = x² from x0 = 1 blows up at t = 1
        let t = vec![0.0, 0.5, 2.0];
        let err = rk4_integrate(|x, o| o[0] = x[0] * x[0], &[1.0], &t, 1000).unwrap_err();
        match err {
            SnmError::Divergence { time } => assert!(time > 0.9 && time <= 2.0, "time {time}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_parameters_refuse_simulation() {
        let t = vec![0.0, 1.0, 2.0];
        match simulate(&lotka_volterra(), &t).unwrap_err() {
            SnmError::MissingParameter(p) => assert_eq!(p, "beta3"),
            e => panic!("unexpected {e}"),
        }
        let hiv = hiv()
            .with_param("beta4", 1.0)
            .unwrap()
            .with_param("beta5", -0.2)
            .unwrap();
        match simulate(&hiv, &t).unwrap_err() {
            SnmError::MissingParameter(p) => assert_eq!(p, "xi2"),
            e => panic!("unexpected {e}"),
        }
        assert!(lotka_volterra().set_param("gamma", 1.0).is_err());
    }

    #[test]
    fn regressor_examples() {
        let row = |v: &[f64]| DMatrix::from_row_slice(1, v.len(), v);
        let h = eval_regressors(&logistic(), &row(&[2.0])).unwrap();
        assert_eq!(h.as_slice(), &[2.0, 4.0]);
        let h = eval_regressors(&lotka_volterra(), &row(&[2.0, 3.0])).unwrap();
        assert_eq!(h.as_slice(), &[2.0, 6.0]);
        let h = eval_regressors(&hiv(), &row(&[60.0, 5.0, 2.0])).unwrap();
        assert_eq!(h.as_slice(), &[1.0, 60.0, 120.0]);
        assert!(eval_regressors(&hiv(), &row(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn non_finite_regressor_is_located() {
        let spec = OdeModelSpec::new(
            "recip",
            1,
            0,
            vec![Regressor::new("1/x", |x| 1.0 / x[0])],
            vec!["beta1".into()],
            |x, p, o| o[0] = p[0] / x[0],
            |p| vec![p[0]],
        )
        .unwrap();
        let comps = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 2.0]);
        match eval_regressors(&spec, &comps).unwrap_err() {
            SnmError::NonFiniteRegressor { j, i } => assert_eq!((j, i), (1, 2)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn builtin_systems_are_linear_in_target_parameters() {
        let mut rng = RngStream::new(11);
        for spec in [logistic(), lotka_volterra(), hiv(), fitzhugh_nagumo()] {
            let d = spec.linearity_defect(100, &mut rng);
            assert!(d < 1e-12, "{}: {d}", spec.name);
        }
    }

    #[test]
    fn fitzhugh_nagumo_targets() {
        let beta = fitzhugh_nagumo().true_beta().unwrap();
        assert_abs_diff_eq!(beta[0], -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta[1], 0.2 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta[2], -0.2 / 3.0, epsilon = 1e-15);
        assert_eq!(fitzhugh_nagumo().true_xi().unwrap(), 0.5);
    }

    #[test]
    fn snr_noise_levels() {
        let t = unit_grid(5);
        // column with sample sd 4: values symmetric around 0
        let col = [-4.0, -4.0, 0.0, 4.0, 4.0];
        let mean: f64 = col.iter().sum::<f64>() / 5.0;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        let scaled: Vec<f64> = col.iter().map(|v| v * 4.0 / sd).collect();
        let truth = DMatrix::from_column_slice(5, 1, &scaled);
        let mut rng = RngStream::new(3);
        let ds = inject_noise(&truth, &t, &NoiseSpec::snr(2.0), &mut rng).unwrap();
        assert_abs_diff_eq!(ds.noise_sd.unwrap()[0], 2.0, epsilon = 1e-12);

        let ds = inject_noise(&truth, &t, &NoiseSpec::snr(1e12), &mut rng).unwrap();
        for (a, b) in ds.y.iter().zip(truth.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn constant_signal_rejects_snr_noise() {
        let truth = DMatrix::from_element(4, 1, 3.0);
        let mut rng = RngStream::new(1);
        assert!(inject_noise(&truth, &unit_grid(4), &NoiseSpec::snr(5.0), &mut rng).is_err());
        let prop = NoiseSpec::new(NoiseMode::PropOfMean, vec![0.1]);
        let ds = inject_noise(&truth, &unit_grid(4), &prop, &mut rng).unwrap();
        assert_abs_diff_eq!(ds.noise_sd.unwrap()[0], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn empirical_noise_sd_matches_record() {
        let n = 10_000;
        let t = unit_grid(n);
        let truth = DMatrix::from_fn(n, 2, |i, k| (t[i] * 6.0).sin() * (k as f64 + 1.0));
        let mut rng = RngStream::new(99);
        let ds = inject_noise(&truth, &t, &NoiseSpec::snr(3.0), &mut rng).unwrap();
        let sds = ds.noise_sd.clone().unwrap();
        for k in 0..2 {
            let resid: Vec<f64> = (0..n).map(|i| ds.y[(i, k)] - truth[(i, k)]).collect();
            let m = resid.iter().sum::<f64>() / n as f64;
            let sd = (resid.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            assert!((sd / sds[k] - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn noise_is_seed_reproducible() {
        let t = unit_grid(50);
        let truth = DMatrix::from_fn(50, 1, |i, _| t[i] * t[i]);
        let a = inject_noise(&truth, &t, &NoiseSpec::snr(5.0), &mut RngStream::new(5)).unwrap();
        let b = inject_noise(&truth, &t, &NoiseSpec::snr(5.0), &mut RngStream::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dataset_validation() {
        let y = DMatrix::zeros(3, 1);
        assert!(Dataset::new(vec![0.0, 1.0, 1.0], y.clone()).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], DMatrix::zeros(2, 1)).is_err());
        let mut bad = y.clone();
        bad[(1, 0)] = f64::NAN;
        assert!(Dataset::new(vec![0.0, 1.0, 2.0], bad).is_err());
        assert!(Dataset::new(vec![0.0, 1.0, 2.0], y).is_ok());
    }
}
