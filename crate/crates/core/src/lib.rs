//! Bayesian smooth-and-match inference for ODE models that are linear in
//! their parameters.
//!
//! Noisy observations of every component are smoothed with penalized cubic
//! regression splines; the smoothed curves are pushed through the known
//! regressor functions, integrated with the trapezoid rule, and the target
//! equation's coefficients are recovered by Bayesian ridge regression. All
//! blocks are updated with conjugate Gibbs draws.
//!
//! ```no_run
//! use snm::{engine::{fit, FitConfig}, sampling::RngStream, systems};
//!
//! let spec = systems::logistic();
//! let times: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
//! let truth = systems::simulate(&spec, &times)?;
//! let data = systems::inject_noise(&truth, &times, &systems::NoiseSpec::snr(13.0), &mut RngStream::new(7))?;
//! let result = fit(&spec, &data, FitConfig::default())?;
//! println!("beta1 = {}", result.param("beta1").unwrap().mean);
//! # Ok::<(), snm::SnmError>(())
//! ```

// `!(x > 0.0)` style checks are used deliberately so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod io;
pub mod quadrature;
pub mod sampling;
pub mod spline;
pub mod summary;
pub mod systems;

pub use engine::{fit, ChainState, Chains, Fit, FitConfig, HyperParams, SmoothMatch};
pub use error::{Result, SnmError};
pub use sampling::RngStream;
pub use systems::{Dataset, NoiseMode, NoiseSpec, OdeModelSpec};
