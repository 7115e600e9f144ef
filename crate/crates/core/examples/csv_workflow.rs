//! File-based workflow with the `io` helpers: simulate to CSV, read the
//! data back, fit, and write the chain, summary and curve files.
//!
//! `cargo run --release --example csv_workflow -- [output dir]`

use std::path::PathBuf;

use snm::experiments::{time_grid, TimeGrid};
use snm::io;
use snm::systems::{self, NoiseSpec};
use snm::{fit, FitConfig, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("snm-csv"));
    std::fs::create_dir_all(&out)?;

    let spec = systems::logistic();
    let times = time_grid(TimeGrid::UnitInterval { n: 25 })?;
    let truth = systems::simulate(&spec, &times)?;
    let noise = NoiseSpec::snr(13.0);
    let sim = systems::inject_noise(&truth, &times, &noise, &mut RngStream::new(7))?;
    io::write_dataset(&out.join("data.csv"), &sim, false)?;
    io::write_trajectory(&out.join("truth.csv"), &times, &truth)?;
    io::write_noise(&out.join("noise.csv"), &noise, sim.noise_sd.as_deref().unwrap_or_default())?;

    let data = io::load_simulation(&out)?;
    assert_eq!(data, sim);
    let result = fit(&spec, &data, FitConfig { seed: 7, ..FitConfig::default() })?;
    io::write_chains(&out.join("chains.csv"), &result.chains)?;
    io::write_summary(&out.join("summary.csv"), &result.summary)?;
    let x: Vec<f64> = truth.column(0).iter().copied().collect();
    let smoothed: Vec<f64> = result.curves.smoothed.column(0).iter().copied().collect();
    io::write_curves(&out.join("curves.csv"), &times, Some(&x), &smoothed, result.curves.reconstructed.as_slice())?;

    print!("{}", std::fs::read_to_string(out.join("summary.csv"))?);
    println!("files in {}", out.display());
    Ok(())
}
