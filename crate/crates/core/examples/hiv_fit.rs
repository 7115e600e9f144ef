//! Single fit of the first equation of the three-component HIV system,
//! with the unspecified parameters and initial conditions supplied.
//!
//! `cargo run --release --example hiv_fit`

use snm::experiments::{time_grid, TimeGrid};
use snm::systems::{self, NoiseSpec};
use snm::{fit, FitConfig, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = systems::hiv()
        .with_param("beta4", 100.0)?
        .with_param("beta5", -3.0)?
        .with_param("xi2", 15.0)?
        .with_param("xi3", 500.0)?;
    let times = time_grid(TimeGrid::Uniform { start: 0.0, end: 20.0, n: 100 })?;
    let truth = systems::simulate(&spec, &times)?;
    let data = systems::inject_noise(&truth, &times, &NoiseSpec::snr(13.0), &mut RngStream::new(5))?;

    let result = fit(&spec, &data, FitConfig { seed: 5, ..FitConfig::default() })?;
    let beta = spec.true_beta()?;
    println!("{:<8} {:>12} {:>12} {:>12}", "param", "truth", "mean", "sd");
    let s = result.param("xi1").ok_or("no xi1")?;
    println!("{:<8} {:>12.4} {:>12.4} {:>12.4}", "xi1", spec.true_xi()?, s.mean, s.sd);
    for (name, b) in spec.beta_names().iter().zip(beta) {
        let s = result.param(name).ok_or("missing summary row")?;
        println!("{name:<8} {b:>12.3e} {:>12.3e} {:>12.3e}", s.mean, s.sd);
    }
    Ok(())
}
