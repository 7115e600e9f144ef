//! Penalized cubic regression spline smoothing on its own: build the basis
//! and penalty for a noisy sine, then compare fits across smoothing levels.
//!
//! `cargo run --example spline_smoothing`

use nalgebra::DVector;
use snm::spline::SplineWorkspace;
use snm::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 80;
    let times: Vec<f64> = (0..n).map(|i| 10.0 * i as f64 / (n - 1) as f64).collect();
    let truth: Vec<f64> = times.iter().map(|t| t.sin() + 0.1 * t).collect();
    let mut rng = RngStream::new(11);
    let y = DVector::from_iterator(n, truth.iter().map(|v| v + 0.2 * rng.standard_normal()));

    let ws = SplineWorkspace::new(&times, 12)?;
    println!("basis {}x{}, knots {:?}", ws.basis.nrows(), ws.basis.ncols(), ws.knots.as_slice());

    let gram = ws.basis.transpose() * &ws.basis;
    let cross = ws.basis.transpose() * &y;
    println!("{:>10} {:>12} {:>12} {:>12}", "lambda", "rss/n", "mse truth", "roughness");
    for lambda in [1e-9, 1e-7, 1e-5, 1e-3, 1e-1, 1e1] {
        let theta = (&gram + &ws.penalty * lambda)
            .cholesky()
            .ok_or("penalized system is singular")?
            .solve(&cross);
        let fit = ws.curve(&theta);
        let rss = (&y - &fit).norm_squared() / n as f64;
        let mse = fit.iter().zip(&truth).map(|(f, t)| (f - t).powi(2)).sum::<f64>() / n as f64;
        println!("{lambda:>10.0e} {rss:>12.5} {mse:>12.5} {:>12.3e}", ws.roughness(&theta));
    }
    Ok(())
}
