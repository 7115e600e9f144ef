//! Replicated study on the Lotka-Volterra system. The second equation's
//! parameters are not built in and are supplied here.
//!
//! `cargo run --release --example lotka_volterra_scenario -- [replicates] [snr]`

use snm::experiments::{Scenario, TimeGrid};
use snm::systems::{self, NoiseSpec};
use snm::FitConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let replicates: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let snr: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(13.0);

    let spec = systems::lotka_volterra()
        .with_param("beta3", -0.3)?
        .with_param("beta4", 0.1)?
        .with_param("xi2", 1.0)?;
    let scenario = Scenario {
        spec,
        grid: TimeGrid::Lv100,
        noise: NoiseSpec::snr(snr),
        replicates,
        fit: FitConfig::default(),
        seed: 17,
        threads: None,
    };
    let summary = snm::experiments::run_scenario(&scenario)?;
    for p in &summary.params {
        match (p.truth, p.mse) {
            (Some(t), Some(m)) => println!("{:<10} truth {t:>8.3}  avg {:>8.4}  mse {m:.3e}", p.name, p.avg_mean),
            _ => println!("{:<10} {:>20}  avg {:>8.4}", p.name, "", p.avg_mean),
        }
    }
    println!(
        "MSE_x1 {:.4}  MSE_g1 {:.4}  ({} used, {} failed)",
        summary.avg_mse_x,
        summary.avg_mse_g,
        summary.replicates_used,
        summary.failures.len()
    );
    Ok(())
}
