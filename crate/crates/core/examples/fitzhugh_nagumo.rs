//! Second-equation inference on simulated FitzHugh-Nagumo data
//! (41 points on [0, 20], noise variance 0.25 on both components).
//!
//! Run with `cargo run --release --example fitzhugh_nagumo -- [seed]`.

use std::time::Instant;

use snm::experiments::{time_grid, TimeGrid};
use snm::systems::{self, NoiseMode, NoiseSpec};
use snm::{fit, FitConfig, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let spec = systems::fitzhugh_nagumo();
    let times = time_grid(TimeGrid::Uniform { start: 0.0, end: 20.0, n: 41 })?;
    let truth = systems::simulate(&spec, &times)?;
    let noise = NoiseSpec::new(NoiseMode::Sd, vec![0.5]);
    let data = systems::inject_noise(&truth, &times, &noise, &mut RngStream::new(seed))?;

    let started = Instant::now();
    let result = fit(&spec, &data, FitConfig { seed, ..FitConfig::default() })?;
    let elapsed = started.elapsed();

    let targets = [("xi2", 0.5), ("beta1", -1.0 / 3.0), ("beta2", 0.2 / 3.0), ("beta3", -0.2 / 3.0)];
    println!("{:<10} {:>9} {:>9} {:>9}", "param", "truth", "mean", "sd");
    for (name, t) in targets {
        let s = result.param(name).expect("summary row");
        println!("{name:<10} {t:>9.3} {:>9.3} {:>9.3}", s.mean, s.sd);
    }
    let s2 = result.param("sigma2_2").expect("summary row");
    println!("{:<10} {:>9} {:>9.3} {:>9.3}", "sigma2_2", "", s2.mean, s2.sd);
    println!("10000 iterations in {:.2?}", elapsed);
    Ok(())
}
