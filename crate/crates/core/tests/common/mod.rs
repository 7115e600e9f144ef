//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Sup-norm distance between the empirical CDF of `draws` and the CDF
/// obtained by trapezoid-normalizing `log_density` on a fine grid.
pub fn cdf_distance(draws: &[f64], log_density: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let m = 20_000;
    let xs: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect();
    let logs: Vec<f64> = xs.iter().map(|&x| log_density(x)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let mut cdf = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (xs[i] - xs[i - 1]);
    }
    let total = cdf[m];
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    let mut j = 0;
    for (x, c) in xs.iter().zip(&cdf).step_by(20) {
        while j < sorted.len() && sorted[j] <= *x {
            j += 1;
        }
        worst = worst.max((j as f64 / n - c / total).abs());
    }
    worst
}

pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
}

pub fn sample_moments(draws: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = draws.len() as f64;
    let d = draws[0].len();
    let mut mean = DVector::zeros(d);
    for x in draws {
        mean += x;
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for x in draws {
        let c = x - &mean;
        cov += &c * c.transpose();
    }
    (mean, cov / (n - 1.0))
}

/// Worst mean error in units of `max(|m|, sd)` and worst covariance error
/// relative to `sqrt(V_ii V_jj)`.
pub fn moment_errors(draws: &[DVector<f64>], mean: &DVector<f64>, cov: &DMatrix<f64>) -> (f64, f64) {
    let (m, c) = sample_moments(draws);
    let mut mean_err: f64 = 0.0;
    let mut cov_err: f64 = 0.0;
    for i in 0..mean.len() {
        let scale = mean[i].abs().max(cov[(i, i)].sqrt());
        mean_err = mean_err.max((m[i] - mean[i]).abs() / scale);
        for j in 0..mean.len() {
            let scale = (cov[(i, i)] * cov[(j, j)]).sqrt();
            cov_err = cov_err.max((c[(i, j)] - cov[(i, j)]).abs() / scale);
        }
    }
    (mean_err, cov_err)
}

/// Relative error of the sample mean (in units of `max(|m|, sd)`) and of
/// the sample variance for scalar draws.
pub fn scalar_moment_errors(draws: &[f64], mean: f64, var: f64) -> (f64, f64) {
    let (m, v) = mean_var(draws);
    ((m - mean).abs() / mean.abs().max(var.sqrt()), (v - var).abs() / var)
}

pub fn ln_gamma_kernel(shape: f64, rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { f64::NEG_INFINITY } else { (shape - 1.0) * x.ln() - rate * x }
}

pub fn ln_inv_gamma_kernel(shape: f64, rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { f64::NEG_INFINITY } else { -(shape + 1.0) * x.ln() - rate / x }
}

pub fn logistic_exact(t: f64) -> f64 {
    let (a, k, x0) = (2.5, 20.0, 0.1);
    k * x0 * (a * t).exp() / (k + x0 * ((a * t).exp() - 1.0))
}
