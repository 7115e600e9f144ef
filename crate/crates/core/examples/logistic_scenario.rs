//! Monte Carlo study of the logistic growth equation: 100 points on
//! [0, 1], SNR 13, averaged over replicates.
//!
//! `cargo run --release --example logistic_scenario -- [replicates] [n] [snr] [seed]`

use std::time::Instant;

use snm::experiments::{Scenario, TimeGrid};
use snm::systems::{self, NoiseSpec};
use snm::FitConfig;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario {
        spec: systems::logistic(),
        grid: TimeGrid::UnitInterval { n: arg(2, 100) },
        noise: NoiseSpec::snr(arg(3, 13.0)),
        replicates: arg(1, 20),
        fit: FitConfig::default(),
        seed: arg(4, 1),
        threads: None,
    };
    let started = Instant::now();
    let (summary, _) = scenario.run_detailed()?;
    println!("{:<10} {:>9} {:>10} {:>10}", "param", "truth", "avg mean", "mse");
    for p in &summary.params {
        let truth = p.truth.map_or(String::new(), |t| format!("{t:.3}"));
        let mse = p.mse.map_or(String::new(), |m| format!("{m:.2e}"));
        println!("{:<10} {truth:>9} {:>10.4} {mse:>10}", p.name, p.avg_mean);
    }
    println!("MSE_x {:.3e}  MSE_g {:.3e}", summary.avg_mse_x, summary.avg_mse_g);
    println!(
        "{} replicates used, {} failed, {:.1?}",
        summary.replicates_used,
        summary.failures.len(),
        started.elapsed()
    );
    Ok(())
}
