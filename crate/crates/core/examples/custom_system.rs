//! Defining a new system: damped linear oscillator `x1' = x2`,
//! `x2' = -k x1 - c x2`, inferring the second equation.
//!
//! `cargo run --release --example custom_system`

use snm::experiments::{time_grid, TimeGrid};
use snm::systems::{simulate, inject_noise, NoiseSpec, Regressor};
use snm::{fit, FitConfig, OdeModelSpec, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = OdeModelSpec::new(
        "oscillator",
        2,
        1,
        vec![Regressor::new("x1", |x| x[0]), Regressor::new("x2", |x| x[1])],
        vec!["k".into(), "c".into()],
        |x, p, out| {
            out[0] = x[1];
            out[1] = -p[0] * x[0] - p[1] * x[1];
        },
        |p| vec![-p[0], -p[1]],
    )?;
    spec = spec.with_param("k", 2.0)?.with_param("c", 0.3)?;
    spec = spec.with_param("xi1", 1.0)?.with_param("xi2", 0.0)?;
    spec.default_knots = 12;

    let mut rng = RngStream::new(8);
    println!("linearity defect: {:.1e}", spec.linearity_defect(100, &mut rng));

    let times = time_grid(TimeGrid::Uniform { start: 0.0, end: 15.0, n: 120 })?;
    let data = inject_noise(&simulate(&spec, &times)?, &times, &NoiseSpec::snr(20.0), &mut rng)?;
    let result = fit(&spec, &data, FitConfig { refine: 4, ..FitConfig::default() })?;
    for (name, truth) in spec.beta_names().iter().zip(spec.true_beta()?) {
        let s = result.param(name).ok_or("missing row")?;
        println!("{name}: truth {truth:>6.3}  mean {:>7.4}  95% [{:.3}, {:.3}]", s.mean, s.q025, s.q975);
    }
    Ok(())
}
