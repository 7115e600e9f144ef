//! Driving the sampler one block at a time instead of calling `fit`:
//! inspect the full conditionals of the first iterations of a chain.
//!
//! `cargo run --example gibbs_by_hand`

use snm::experiments::{time_grid, TimeGrid};
use snm::sampling::precision_mean;
use snm::systems::{self, NoiseSpec};
use snm::{FitConfig, RngStream, SmoothMatch};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = systems::logistic();
    let times = time_grid(TimeGrid::UnitInterval { n: 50 })?;
    let mut rng = RngStream::new(3);
    let data = systems::inject_noise(&systems::simulate(&spec, &times)?, &times, &NoiseSpec::snr(13.0), &mut rng)?;

    let engine = SmoothMatch::new(&spec, &data, FitConfig::default())?;
    let mut state = engine.init_state()?;
    println!("start: sigma2 {:.3e}, lambda_theta {:.3e}", state.sigma2[0], state.lambda_theta[0]);
    for it in 0..5 {
        engine.smooth_step(&mut state, &mut rng)?;
        let design = engine.design(&state)?;
        let cond = engine.beta_conditional(&state, &design);
        let mean = precision_mean(&cond.precision, &cond.linear)?;
        let (xi_mean, xi_var) = engine.xi_conditional(&state, &design);
        println!(
            "iter {it}: E[beta | rest] = ({:.3}, {:.3}), xi ~ N({xi_mean:.4}, {xi_var:.2e})",
            mean[0], mean[1]
        );
        engine.match_step(&mut state, &mut rng)?;
    }
    println!("beta after 5 sweeps: {:.3?}", state.beta.as_slice());
    Ok(())
}
