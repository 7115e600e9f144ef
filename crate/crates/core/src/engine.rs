//! Gibbs sampler for Bayesian smooth-and-match.
//!
//! Each iteration runs two blocks:
//!
//! 1. **smooth**: for every component `k` (ascending), draw the spline
//!    coefficients `θ_k` from their penalized-regression conditional (the
//!    ODE-solution likelihood term is left out), then the smoothing penalty
//!    `λ_θk`, then the noise variance `σ²_k` for non-target components;
//! 2. **match**: rebuild the integrated design `H` from the current smoothed
//!    curves and draw, in order, the target coefficients `β` (Bayesian ridge
//!    regression of `y_target − ξ` on `H`), the initial condition `ξ`, the
//!    ridge penalty `λ_β` and the shared variance `σ²_target`, which pools the
//!    matching residuals with the smoothing residuals of the target component.
//!
//! All full conditionals are conjugate:
//!
//! ```text
//! θ_k      ~ N(P⁻¹ℓ, P⁻¹),  P = λ_θk S_k + ΨₖᵀΨₖ/σ²_k,  ℓ = Ψₖᵀy_k/σ²_k
//! λ_θk     ~ Gamma((q_k+2)/2 + α_θk, θₖᵀS_kθ_k/2 + γ_θk)
//! σ²_k     ~ InvGamma(n/2, ‖y_k − Ψ_kθ_k‖²/2)                (k ≠ target)
//! β        ~ N(P⁻¹ℓ, P⁻¹),  P = λ_β I + HᵀH/σ²_t,  ℓ = Hᵀ(y_t − ξ1)/σ²_t
//! ξ        ~ N(y_{1,t} − H_1β, σ²_t)
//! λ_β      ~ Gamma(b/2 + α_β, βᵀβ/2 + γ_β)
//! σ²_t     ~ InvGamma(n, ‖y_t − ξ1 − Hβ‖²/2 + ‖y_t − Ψ_tθ_t‖²/2)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SnmError};
use crate::quadrature::{build_design, DesignMatrix};
use crate::sampling::{gamma_draw, inv_gamma_draw, mvn_precision_draw, normal_draw, RngStream};
use crate::spline::SplineWorkspace;
use crate::summary::{posterior_summary, ParamSummary, Trace};
use crate::systems::{Dataset, OdeModelSpec};

/// Lower bound applied to λ draws.
pub const LAMBDA_FLOOR: f64 = 1e-12;
/// Lower bound applied to inverse-gamma rates.
pub const RATE_FLOOR: f64 = 1e-12;
// Initial smoothing parameters are searched on a log grid of this many
// steps, relative to tr(ΨᵀΨ)/tr(S).
const GCV_STEPS: usize = 60;
const GCV_LOG_MIN: f64 = -8.0;
const GCV_LOG_MAX: f64 = 4.0;

/// Lower bound on the initial noise variances.
pub const SIGMA2_INIT_FLOOR: f64 = 1e-8;

/// Gamma prior shape/rate pairs for the penalties.
///
/// `alpha_theta` and `gamma_theta` hold one value per component, or a single
/// value shared by all components.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub alpha_theta: Vec<f64>,
    pub gamma_theta: Vec<f64>,
    pub alpha_beta: f64,
    pub gamma_beta: f64,
}

impl Default for HyperParams {
    /// Prior mean 1, prior variance 100 for every penalty.
    fn default() -> Self {
        HyperParams {
            alpha_theta: vec![0.01],
            gamma_theta: vec![0.01],
            alpha_beta: 0.01,
            gamma_beta: 0.01,
        }
    }
}

impl HyperParams {
    fn pick(v: &[f64], k: usize, what: &str) -> Result<f64> {
        let x = match v.len() {
            1 => v[0],
            _ => *v
                .get(k)
                .ok_or_else(|| SnmError::Config(format!("no {what} for component {}", k + 1)))?,
        };
        Ok(x)
    }

    pub fn theta_prior(&self, k: usize) -> Result<(f64, f64)> {
        Ok((
            Self::pick(&self.alpha_theta, k, "alpha_theta")?,
            Self::pick(&self.gamma_theta, k, "gamma_theta")?,
        ))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        for v in [&self.alpha_theta, &self.gamma_theta] {
            if v.is_empty() || (v.len() != 1 && v.len() != p) {
                return Err(SnmError::Config(format!(
                    "penalty hyperparameters need 1 or {p} values, got {}",
                    v.len()
                )));
            }
        }
        let all = self
            .alpha_theta
            .iter()
            .chain(&self.gamma_theta)
            .chain([&self.alpha_beta, &self.gamma_beta]);
        for &x in all {
            if !(x > 0.0 && x.is_finite()) {
                return Err(SnmError::Config(format!(
                    "hyperparameters must be positive, got {x}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Knots per component; empty uses the system default, one value is shared.
    pub knots: Vec<usize>,
    pub hyper: HyperParams,
    /// Quadrature refinement factor for `H`.
    pub refine: usize,
    pub seed: u64,
    /// Keep per-iteration smoothed and reconstructed curves.
    pub record_curves: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iterations: 10_000,
            burn_in: 5_000,
            thin: 1,
            knots: Vec::new(),
            hyper: HyperParams::default(),
            refine: 1,
            seed: 1,
            record_curves: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(SnmError::Config("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(SnmError::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(SnmError::Config("thin must be at least 1".into()));
        }
        if self.refine == 0 {
            return Err(SnmError::Config("refine must be at least 1".into()));
        }
        if self.knots.len() > 1 && self.knots.len() != p {
            return Err(SnmError::Config(format!(
                "{} knot counts for {p} components",
                self.knots.len()
            )));
        }
        self.hyper.validate(p)
    }

    pub fn knots_for(&self, k: usize, spec: &OdeModelSpec) -> usize {
        match self.knots.len() {
            0 => spec.default_knots,
            1 => self.knots[0],
            _ => self.knots[k],
        }
    }
}

/// Every sampled quantity at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Vec<DVector<f64>>,
    pub lambda_theta: Vec<f64>,
    /// `sigma2[target]` is the shared nuisance variance.
    pub sigma2: Vec<f64>,
    pub beta: DVector<f64>,
    pub lambda_beta: f64,
    pub xi: f64,
}

/// Recorded (thinned) states and, optionally, the curves they imply.
#[derive(Debug, Clone)]
pub struct Chains {
    /// Zero-based iteration index of each recorded state.
    pub iterations: Vec<usize>,
    pub states: Vec<ChainState>,
    /// `n × p` smoothed components `Ψ_kθ_k` per recorded state.
    pub smoothed: Vec<DMatrix<f64>>,
    /// Reconstructed target solution `ξ + Hβ` per recorded state.
    pub reconstructed: Vec<DVector<f64>>,
    pub target: usize,
    pub beta_names: Vec<String>,
}

impl Chains {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Scalar traces in reporting order: `xi`, `beta*`, shared variance,
    /// `lambda_beta`, remaining `sigma2_*`, `lambda_theta_*`.
    pub fn traces(&self) -> Vec<Trace> {
        let p = self.states.first().map_or(0, |s| s.sigma2.len());
        let t = self.target;
        let mut out = Vec::new();
        let mut push = |name: String, f: &dyn Fn(&ChainState) -> f64| {
            out.push(Trace {
                name,
                iterations: self.iterations.clone(),
                values: self.states.iter().map(f).collect(),
            });
        };
        push(format!("xi{}", t + 1), &|s| s.xi);
        for (j, name) in self.beta_names.iter().enumerate() {
            push(name.clone(), &move |s| s.beta[j]);
        }
        push(format!("sigma2_{}", t + 1), &move |s| s.sigma2[t]);
        push("lambda_beta".into(), &|s| s.lambda_beta);
        for k in (0..p).filter(|&k| k != t) {
            push(format!("sigma2_{}", k + 1), &move |s| s.sigma2[k]);
        }
        for k in 0..p {
            push(format!("lambda_theta_{}", k + 1), &move |s| s.lambda_theta[k]);
        }
        out
    }

    /// Mean of `θ_k` over recorded iterations `>= burn_in`.
    pub fn posterior_mean_theta(&self, burn_in: usize) -> Result<Vec<DVector<f64>>> {
        let kept: Vec<&ChainState> = self
            .iterations
            .iter()
            .zip(&self.states)
            .filter(|(it, _)| **it >= burn_in)
            .map(|(_, s)| s)
            .collect();
        if kept.is_empty() {
            return Err(SnmError::invalid(format!("no draws after burn-in {burn_in}")));
        }
        let m = kept.len() as f64;
        let mut mean: Vec<DVector<f64>> = kept[0].theta.iter().map(|t| DVector::zeros(t.len())).collect();
        for s in &kept {
            for (acc, th) in mean.iter_mut().zip(&s.theta) {
                *acc += th;
            }
        }
        for v in &mut mean {
            *v /= m;
        }
        Ok(mean)
    }

    pub fn summary(&self, burn_in: usize) -> Result<Vec<ParamSummary>> {
        posterior_summary(self, burn_in)
    }
}

/// Gaussian full conditional in precision form.
#[derive(Debug, Clone)]
pub struct GaussianConditional {
    pub precision: DMatrix<f64>,
    pub linear: DVector<f64>,
}

/// Shape/rate of a gamma or inverse-gamma full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeRate {
    pub shape: f64,
    pub rate: f64,
}

/// Sampler bound to one dataset and system.
pub struct SmoothMatch<'a> {
    spec: &'a OdeModelSpec,
    data: &'a Dataset,
    config: FitConfig,
    workspaces: Vec<SplineWorkspace>,
    gram: Vec<DMatrix<f64>>,
    cross: Vec<DVector<f64>>,
    columns: Vec<DVector<f64>>,
}

impl<'a> SmoothMatch<'a> {
    pub fn new(spec: &'a OdeModelSpec, data: &'a Dataset, config: FitConfig) -> Result<Self> {
        if data.p() != spec.dim {
            return Err(SnmError::invalid(format!(
                "dataset has {} components, {} has {}",
                data.p(),
                spec.name,
                spec.dim
            )));
        }
        config.validate(spec.dim)?;
        let workspaces = (0..spec.dim)
            .map(|k| SplineWorkspace::new(&data.times, config.knots_for(k, spec)))
            .collect::<Result<Vec<_>>>()?;
        Self::with_workspaces(spec, data, config, workspaces)
    }

    /// Uses caller-built spline workspaces (custom knots).
    pub fn with_workspaces(
        spec: &'a OdeModelSpec,
        data: &'a Dataset,
        config: FitConfig,
        workspaces: Vec<SplineWorkspace>,
    ) -> Result<Self> {
        if workspaces.len() != spec.dim || workspaces.iter().any(|w| w.basis.nrows() != data.n()) {
            return Err(SnmError::invalid("one workspace per component, built on the dataset times"));
        }
        config.validate(spec.dim)?;
        let columns: Vec<DVector<f64>> = (0..spec.dim).map(|k| data.y.column(k).into_owned()).collect();
        let gram = workspaces.iter().map(|w| w.basis.tr_mul(&w.basis)).collect();
        let cross = workspaces
            .iter()
            .zip(&columns)
            .map(|(w, y)| w.basis.tr_mul(y))
            .collect();
        Ok(SmoothMatch {
            spec,
            data,
            config,
            workspaces,
            gram,
            cross,
            columns,
        })
    }

    pub fn workspaces(&self) -> &[SplineWorkspace] {
        &self.workspaces
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    fn target(&self) -> usize {
        self.spec.target
    }

    /// Penalized least squares start with unit penalties and zero `β`.
    /// Starting point: for each component the penalized least-squares fit
    /// whose smoothing parameter minimizes GCV over a log grid, with `σ²_k`
    /// its residual variance and `λ_θk = λ / σ²_k`. `β = 0`, `λ_β = 1`, and
    /// `ξ` is the first target observation.
    pub fn init_state(&self) -> Result<ChainState> {
        let mut theta = Vec::with_capacity(self.spec.dim);
        let mut sigma2 = Vec::with_capacity(self.spec.dim);
        let mut lambda_theta = Vec::with_capacity(self.spec.dim);
        for k in 0..self.spec.dim {
            let (th, s2, lam) = self.gcv_fit(k)?;
            theta.push(th);
            sigma2.push(s2);
            lambda_theta.push(lam);
        }
        Ok(ChainState {
            theta,
            lambda_theta,
            sigma2,
            beta: DVector::zeros(self.spec.b()),
            lambda_beta: 1.0,
            xi: self.data.y[(0, self.target())],
        })
    }

    fn gcv_fit(&self, k: usize) -> Result<(DVector<f64>, f64, f64)> {
        let n = self.data.n() as f64;
        let gram = &self.gram[k];
        let penalty = &self.workspaces[k].penalty;
        let scale = gram.trace() / penalty.trace().max(f64::MIN_POSITIVE);
        let mut best: Option<(f64, DVector<f64>, f64, f64)> = None;
        for step in 0..=GCV_STEPS {
            let lam = scale * 10f64.powf(GCV_LOG_MIN + (GCV_LOG_MAX - GCV_LOG_MIN) * step as f64 / GCV_STEPS as f64);
            let a = gram + penalty * lam;
            let Some(chol) = a.cholesky() else { continue };
            let th = chol.solve(&self.cross[k]);
            let edf = chol.solve(gram).trace();
            let rss = (&self.columns[k] - self.workspaces[k].curve(&th)).norm_squared();
            let denom = (n - edf).max(1e-8);
            let score = n * rss / (denom * denom);
            if best.as_ref().is_none_or(|b| score < b.0) {
                best = Some((score, th, rss, lam));
            }
        }
        let (_, th, rss, lam) = best.ok_or_else(|| {
            SnmError::Numerical(format!("initial penalized fit for component {} is singular", k + 1))
        })?;
        let s2 = (rss / n).max(SIGMA2_INIT_FLOOR);
        Ok((th, s2, (lam / s2).max(LAMBDA_FLOOR)))
    }

    pub fn theta_conditional(&self, k: usize, state: &ChainState) -> GaussianConditional {
        let s2 = state.sigma2[k];
        let precision = &self.workspaces[k].penalty * state.lambda_theta[k] + &self.gram[k] / s2;
        let linear = &self.cross[k] / s2;
        GaussianConditional { precision, linear }
    }

    pub fn sample_theta(&self, k: usize, state: &ChainState, rng: &mut RngStream) -> Result<DVector<f64>> {
        let c = self.theta_conditional(k, state);
        mvn_precision_draw(&c.precision, &c.linear, rng)
    }

    pub fn lambda_theta_conditional(&self, k: usize, state: &ChainState) -> Result<ShapeRate> {
        let (alpha, gamma) = self.config.hyper.theta_prior(k)?;
        let d = self.workspaces[k].dim() as f64;
        let rough = self.workspaces[k].roughness(&state.theta[k]).max(0.0);
        Ok(ShapeRate {
            shape: d / 2.0 + alpha,
            rate: rough / 2.0 + gamma,
        })
    }

    pub fn sample_lambda_theta(&self, k: usize, state: &ChainState, rng: &mut RngStream) -> Result<f64> {
        let c = self.lambda_theta_conditional(k, state)?;
        Ok(gamma_draw(c.shape, c.rate, rng)?.max(LAMBDA_FLOOR))
    }

    pub fn sigma2_conditional(&self, k: usize, state: &ChainState) -> Result<ShapeRate> {
        if k == self.target() {
            return Err(SnmError::invalid(
                "the target variance is drawn in the match step",
            ));
        }
        let resid = &self.columns[k] - self.workspaces[k].curve(&state.theta[k]);
        Ok(ShapeRate {
            shape: self.data.n() as f64 / 2.0,
            rate: floor_rate(resid.norm_squared() / 2.0, k),
        })
    }

    pub fn sample_sigma2(&self, k: usize, state: &ChainState, rng: &mut RngStream) -> Result<f64> {
        let c = self.sigma2_conditional(k, state)?;
        inv_gamma_draw(c.shape, c.rate, rng)
    }

    /// θ_k, λ_θk and (off target) σ²_k for one component.
    pub fn smooth_component(&self, k: usize, state: &mut ChainState, rng: &mut RngStream) -> Result<()> {
        state.theta[k] = self.sample_theta(k, state, rng)?;
        state.lambda_theta[k] = self.sample_lambda_theta(k, state, rng)?;
        if k != self.target() {
            state.sigma2[k] = self.sample_sigma2(k, state, rng)?;
        }
        Ok(())
    }

    pub fn smooth_step(&self, state: &mut ChainState, rng: &mut RngStream) -> Result<()> {
        for k in 0..self.spec.dim {
            self.smooth_component(k, state, rng)?;
        }
        Ok(())
    }

    /// `n × p` matrix of smoothed components.
    pub fn components(&self, theta: &[DVector<f64>]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.data.n(), self.spec.dim);
        for (k, th) in theta.iter().enumerate() {
            m.column_mut(k).copy_from(&self.workspaces[k].curve(th));
        }
        m
    }

    /// Design `H` integrated from the smoothed components in `state`.
    pub fn design(&self, state: &ChainState) -> Result<DesignMatrix> {
        self.design_from_theta(&state.theta)
    }

    pub fn design_from_theta(&self, theta: &[DVector<f64>]) -> Result<DesignMatrix> {
        build_design(
            &self.components(theta),
            &self.data.times,
            self.spec,
            self.config.refine,
        )
    }

    fn shifted_target(&self, xi: f64) -> DVector<f64> {
        self.columns[self.target()].add_scalar(-xi)
    }

    pub fn beta_conditional(&self, state: &ChainState, design: &DesignMatrix) -> GaussianConditional {
        let s2 = state.sigma2[self.target()];
        let h = &design.h;
        let mut precision = h.tr_mul(h) / s2;
        for j in 0..precision.nrows() {
            precision[(j, j)] += state.lambda_beta;
        }
        let linear = h.tr_mul(&self.shifted_target(state.xi)) / s2;
        GaussianConditional { precision, linear }
    }

    pub fn sample_beta(&self, state: &ChainState, design: &DesignMatrix, rng: &mut RngStream) -> Result<DVector<f64>> {
        let c = self.beta_conditional(state, design);
        mvn_precision_draw(&c.precision, &c.linear, rng)
    }

    /// Mean and variance of the `ξ` conditional: `y_{1,t} − H_1β` and `σ²_t`.
    pub fn xi_conditional(&self, state: &ChainState, design: &DesignMatrix) -> (f64, f64) {
        let t = self.target();
        let h1b = design.h.row(0).transpose().dot(&state.beta);
        (self.data.y[(0, t)] - h1b, state.sigma2[t])
    }

    pub fn sample_xi(&self, state: &ChainState, design: &DesignMatrix, rng: &mut RngStream) -> Result<f64> {
        let (m, v) = self.xi_conditional(state, design);
        normal_draw(m, v, rng)
    }

    pub fn lambda_beta_conditional(&self, state: &ChainState) -> ShapeRate {
        ShapeRate {
            shape: state.beta.len() as f64 / 2.0 + self.config.hyper.alpha_beta,
            rate: state.beta.norm_squared() / 2.0 + self.config.hyper.gamma_beta,
        }
    }

    pub fn sample_lambda_beta(&self, state: &ChainState, rng: &mut RngStream) -> Result<f64> {
        let c = self.lambda_beta_conditional(state);
        Ok(gamma_draw(c.shape, c.rate, rng)?.max(LAMBDA_FLOOR))
    }

    pub fn sigma2_target_conditional(&self, state: &ChainState, design: &DesignMatrix) -> ShapeRate {
        let t = self.target();
        let matched = self.shifted_target(state.xi) - &design.h * &state.beta;
        let smoothed = &self.columns[t] - self.workspaces[t].curve(&state.theta[t]);
        ShapeRate {
            shape: self.data.n() as f64,
            rate: floor_rate(matched.norm_squared() / 2.0 + smoothed.norm_squared() / 2.0, t),
        }
    }

    pub fn sample_sigma2_target(&self, state: &ChainState, design: &DesignMatrix, rng: &mut RngStream) -> Result<f64> {
        let c = self.sigma2_target_conditional(state, design);
        inv_gamma_draw(c.shape, c.rate, rng)
    }

    /// Rebuilds `H`, then draws `β`, `ξ`, `λ_β`, `σ²_t`. Returns the design used.
    pub fn match_step(&self, state: &mut ChainState, rng: &mut RngStream) -> Result<DesignMatrix> {
        let design = self.design(state)?;
        state.beta = self.sample_beta(state, &design, rng)?;
        state.xi = self.sample_xi(state, &design, rng)?;
        state.lambda_beta = self.sample_lambda_beta(state, rng)?;
        state.sigma2[self.target()] = self.sample_sigma2_target(state, &design, rng)?;
        Ok(design)
    }

    pub fn run(&self, rng: &mut RngStream) -> Result<Chains> {
        let mut state = self.init_state()?;
        let cap = self.config.iterations / self.config.thin;
        let mut chains = Chains {
            iterations: Vec::with_capacity(cap),
            states: Vec::with_capacity(cap),
            smoothed: Vec::new(),
            reconstructed: Vec::new(),
            target: self.target(),
            beta_names: self.spec.beta_names(),
        };
        for it in 0..self.config.iterations {
            let design = self
                .smooth_step(&mut state, rng)
                .and_then(|_| self.match_step(&mut state, rng))
                .map_err(|e| SnmError::Chain {
                    iteration: it,
                    source: Box::new(e),
                })?;
            if (it + 1) % self.config.thin != 0 {
                continue;
            }
            if self.config.record_curves {
                chains.smoothed.push(self.components(&state.theta));
                chains
                    .reconstructed
                    .push((&design.h * &state.beta).add_scalar(state.xi));
            }
            chains.iterations.push(it);
            chains.states.push(state.clone());
        }
        Ok(chains)
    }
}

fn floor_rate(rate: f64, k: usize) -> f64 {
    if rate < RATE_FLOOR {
        log::warn!(
            "component {}: residual sum of squares {rate:e} floored at {RATE_FLOOR:e}",
            k + 1
        );
        RATE_FLOOR
    } else {
        rate
    }
}

/// Curves implied by posterior-mean parameters.
#[derive(Debug, Clone)]
pub struct FittedCurves {
    /// `n × p` smoothed components from the posterior-mean `θ`.
    pub smoothed: DMatrix<f64>,
    /// `ξ̄ + H(θ̄) β̄` for the target component.
    pub reconstructed: DVector<f64>,
}

/// Result of a complete fit.
#[derive(Debug, Clone)]
pub struct Fit {
    pub chains: Chains,
    pub summary: Vec<ParamSummary>,
    pub curves: FittedCurves,
    pub burn_in: usize,
}

impl Fit {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.summary.iter().find(|s| s.name == name)
    }
}

/// Runs a chain with the stream seeded from `config.seed` and summarizes it.
pub fn fit(spec: &OdeModelSpec, data: &Dataset, config: FitConfig) -> Result<Fit> {
    let mut rng = RngStream::new(config.seed);
    fit_with_rng(spec, data, config, &mut rng)
}

pub fn fit_with_rng(spec: &OdeModelSpec, data: &Dataset, config: FitConfig, rng: &mut RngStream) -> Result<Fit> {
    let burn_in = config.burn_in;
    let engine = SmoothMatch::new(spec, data, config)?;
    let chains = engine.run(rng)?;
    let summary = chains.summary(burn_in)?;
    let theta = chains.posterior_mean_theta(burn_in)?;
    let design = engine.design_from_theta(&theta)?;
    let mean_of = |name: &str| {
        summary
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.mean)
            .ok_or_else(|| SnmError::Numerical(format!("missing summary for {name}")))
    };
    let beta = DVector::from_iterator(
        spec.b(),
        spec.beta_names().iter().map(|n| mean_of(n)).collect::<Result<Vec<_>>>()?,
    );
    let xi = mean_of(&spec.xi_name())?;
    let curves = FittedCurves {
        smoothed: engine.components(&theta),
        reconstructed: (&design.h * &beta).add_scalar(xi),
    };
    Ok(Fit {
        chains,
        summary,
        curves,
        burn_in,
    })
}
