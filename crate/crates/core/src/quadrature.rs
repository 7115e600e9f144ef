//! Cumulative trapezoidal integration and the integrated-regressor design matrix.

use nalgebra::DMatrix;

use crate::error::{Result, SnmError};
use crate::spline::check_increasing;
use crate::systems::{eval_regressors, OdeModelSpec};

/// Running trapezoid integral of `values` over `times`, starting at zero.
pub fn cumtrapz(values: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    if values.len() != times.len() {
        return Err(SnmError::invalid(format!(
            "cumtrapz: {} values for {} time points",
            values.len(),
            times.len()
        )));
    }
    if times.len() < 2 {
        return Err(SnmError::invalid("cumtrapz needs at least 2 points"));
    }
    check_increasing(times)?;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(acc);
    for i in 1..values.len() {
        acc += (times[i] - times[i - 1]) * (values[i] + values[i - 1]) * 0.5;
        out.push(acc);
    }
    Ok(out)
}

/// `H`: column `j` holds `∫_{t₁}^{t_i} h_j(x(s)) ds` on the observation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub h: DMatrix<f64>,
    pub times: Vec<f64>,
}

impl DesignMatrix {
    /// Integrates each column of an `n × b` matrix of regressor values.
    pub fn integrate(regressor_values: &DMatrix<f64>, times: &[f64]) -> Result<Self> {
        if regressor_values.nrows() != times.len() {
            return Err(SnmError::invalid(format!(
                "regressor matrix has {} rows for {} time points",
                regressor_values.nrows(),
                times.len()
            )));
        }
        let mut h = DMatrix::zeros(regressor_values.nrows(), regressor_values.ncols());
        for j in 0..regressor_values.ncols() {
            let col = cumtrapz(regressor_values.column(j).as_slice(), times)?;
            h.column_mut(j).copy_from_slice(&col);
        }
        Ok(DesignMatrix {
            h,
            times: times.to_vec(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.h.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.h.ncols()
    }
}

/// Builds `H` from component trajectories (`n × p`).
///
/// With `refine == 1` the regressors are integrated on the observation grid.
/// With `refine > 1` the components are linearly interpolated onto a grid
/// `refine` times denser, the regressors are evaluated there and integrated,
/// and the result is sampled back at the observation times. Interpolating
/// the components (not the regressor values) is what makes refinement change
/// anything: the trapezoid rule is exact on piecewise-linear integrands.
pub fn build_design(
    components: &DMatrix<f64>,
    times: &[f64],
    spec: &OdeModelSpec,
    refine: usize,
) -> Result<DesignMatrix> {
    if refine == 0 {
        return Err(SnmError::invalid("refine must be at least 1"));
    }
    if components.nrows() != times.len() {
        return Err(SnmError::invalid(format!(
            "component matrix has {} rows for {} time points",
            components.nrows(),
            times.len()
        )));
    }
    if refine == 1 {
        let values = eval_regressors(spec, components)?;
        return DesignMatrix::integrate(&values, times);
    }
    check_increasing(times)?;
    let n = times.len();
    let fine_n = (n - 1) * refine + 1;
    let mut fine_times = Vec::with_capacity(fine_n);
    let mut fine = DMatrix::zeros(fine_n, components.ncols());
    for i in 0..n - 1 {
        let (t0, t1) = (times[i], times[i + 1]);
        for s in 0..refine {
            let w = s as f64 / refine as f64;
            let row = i * refine + s;
            fine_times.push(t0 + w * (t1 - t0));
            for k in 0..components.ncols() {
                fine[(row, k)] = (1.0 - w) * components[(i, k)] + w * components[(i + 1, k)];
            }
        }
    }
    fine_times.push(times[n - 1]);
    for k in 0..components.ncols() {
        fine[(fine_n - 1, k)] = components[(n - 1, k)];
    }
    let values = eval_regressors(spec, &fine)?;
    let dense = DesignMatrix::integrate(&values, &fine_times)?;
    let h = DMatrix::from_fn(n, values.ncols(), |i, j| dense.h[(i * refine, j)]);
    Ok(DesignMatrix {
        h,
        times: times.to_vec(),
    })
}
