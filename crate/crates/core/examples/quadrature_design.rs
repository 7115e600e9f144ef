//! Trapezoid quadrature and the integrated design matrix `H` built from
//! regressor functions of the state.
//!
//! `cargo run --example quadrature_design`

use nalgebra::DMatrix;
use snm::quadrature::{build_design, cumtrapz};
use snm::systems::{self, simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [11, 21, 41, 81] {
        let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let sq: Vec<f64> = t.iter().map(|v| v * v).collect();
        let err = (cumtrapz(&sq, &t)?[n - 1] - 1.0 / 3.0).abs();
        println!("n = {n:>3}: error of integral of t^2 over [0,1] = {err:.3e}");
    }

    // H for the logistic equation on its exact trajectory
    let spec = systems::logistic();
    let t: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let x: DMatrix<f64> = simulate(&spec, &t)?;
    let h = build_design(&x, &t, &spec, 1)?;
    println!("H is {}x{}; first row {:?}", h.h.nrows(), h.h.ncols(), h.h.row(0).iter().collect::<Vec<_>>());
    let fitted = (&h.h * nalgebra::dvector![2.5, -0.125]).add_scalar(0.1);
    println!("max |xi + H beta - x| = {:.3e}", (fitted - x.column(0)).abs().max());
    Ok(())
}
