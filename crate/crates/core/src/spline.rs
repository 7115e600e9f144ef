//! Penalized cubic regression spline on the unit interval.
//!
//! Each component is represented as `x(t) = θ₁ + θ₂ t + Σ_h θ_{h+2} R(t, κ_h)`
//! where `R` is the reproducing kernel of the cubic smoothing spline on
//! `[0, 1]`. The roughness penalty is `θᵀ S θ` with `S` zero on the affine
//! part and equal to the kernel Gram matrix at the knots elsewhere, so
//! constants and straight lines are never penalized.
//!
//! The kernel is only valid on `[0, 1]`; observation times are rescaled with
//! [`rescale_times`] before any basis is evaluated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SnmError};

/// Interior knot locations in rescaled time, strictly increasing inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotSet(Vec<f64>);

impl KnotSet {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(SnmError::invalid("a knot set needs at least one knot"));
        }
        if knots.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
            return Err(SnmError::invalid("knots must lie strictly inside (0, 1)"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SnmError::invalid("knots must be strictly increasing"));
        }
        Ok(KnotSet(knots))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of knots `q`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of basis functions, `q + 2`.
    pub fn basis_dim(&self) -> usize {
        self.0.len() + 2
    }
}

/// Affine map of strictly increasing times onto `[0, 1]`.
pub fn rescale_times(times: &[f64]) -> Result<Vec<f64>> {
    if times.len() < 3 {
        return Err(SnmError::invalid(format!(
            "need at least 3 time points, got {}",
            times.len()
        )));
    }
    check_increasing(times)?;
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    if !(span > 0.0) || !span.is_finite() {
        return Err(SnmError::invalid("time span must be positive and finite"));
    }
    let mut out: Vec<f64> = times.iter().map(|&t| (t - t0) / span).collect();
    // pin the endpoints against rounding
    out[0] = 0.0;
    let last = out.len() - 1;
    out[last] = 1.0;
    Ok(out)
}

pub(crate) fn check_increasing(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(SnmError::invalid("time points must be finite"));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(SnmError::invalid(format!(
            "time points must be strictly increasing (t[{}] = {} is followed by {})",
            i,
            times[i],
            times[i + 1]
        )));
    }
    Ok(())
}

/// `q` equally spaced interior knots, `κ_h = h / (q + 1)`.
///
/// Requires `q + 2 < n`, otherwise the basis has at least as many columns as
/// there are observations.
pub fn place_knots(rescaled_times: &[f64], q: usize) -> Result<KnotSet> {
    if q == 0 {
        return Err(SnmError::invalid("number of knots must be at least 1"));
    }
    let n = rescaled_times.len();
    if q + 2 >= n {
        return Err(SnmError::invalid(format!(
            "{q} knots give {} basis functions, which needs more than {n} observations",
            q + 2
        )));
    }
    let step = 1.0 / (q as f64 + 1.0);
    KnotSet::new((1..=q).map(|h| h as f64 * step).collect())
}

/// Cubic regression spline kernel `R(x, z)` on `[0, 1]`.
pub fn basis_kernel(x: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&z) {
        return Err(SnmError::invalid(format!(
            "kernel arguments must lie in [0, 1], got ({x}, {z})"
        )));
    }
    Ok(kernel_unchecked(x, z))
}

#[inline]
fn kernel_unchecked(x: f64, z: f64) -> f64 {
    let d = (x - z).abs() - 0.5;
    let d2 = d * d;
    let ax = (x - 0.5) * (x - 0.5) - 1.0 / 12.0;
    let az = (z - 0.5) * (z - 0.5) - 1.0 / 12.0;
    az * ax / 4.0 - (d2 * d2 - 0.5 * d2 + 7.0 / 240.0) / 24.0
}

/// Basis matrix `Ψ` with columns `1`, `t`, `R(t, κ_1)`, …, `R(t, κ_q)`.
pub fn build_basis_matrix(rescaled_times: &[f64], knots: &KnotSet) -> Result<DMatrix<f64>> {
    if rescaled_times
        .iter()
        .any(|t| !(0.0..=1.0).contains(t))
    {
        return Err(SnmError::invalid("basis times must be rescaled into [0, 1]"));
    }
    let n = rescaled_times.len();
    let k = knots.as_slice();
    Ok(DMatrix::from_fn(n, knots.basis_dim(), |i, j| {
        let t = rescaled_times[i];
        match j {
            0 => 1.0,
            1 => t,
            _ => kernel_unchecked(t, k[j - 2]),
        }
    }))
}

/// Penalty matrix `S`: zero on the first two rows and columns, kernel Gram
/// matrix at the knots on the remaining block.
pub fn build_penalty_matrix(knots: &KnotSet) -> DMatrix<f64> {
    let k = knots.as_slice();
    let d = knots.basis_dim();
    DMatrix::from_fn(d, d, |l, m| {
        if l < 2 || m < 2 {
            0.0
        } else {
            kernel_unchecked(k[l - 2], k[m - 2])
        }
    })
}

/// Knots, basis and penalty for one observed component.
#[derive(Debug, Clone)]
pub struct SplineWorkspace {
    pub knots: KnotSet,
    pub basis: DMatrix<f64>,
    pub penalty: DMatrix<f64>,
}

impl SplineWorkspace {
    /// Builds the workspace from original (unscaled) observation times.
    pub fn new(times: &[f64], q: usize) -> Result<Self> {
        let t = rescale_times(times)?;
        let knots = place_knots(&t, q)?;
        Self::with_knots(&t, knots)
    }

    pub fn with_knots(rescaled_times: &[f64], knots: KnotSet) -> Result<Self> {
        let basis = build_basis_matrix(rescaled_times, &knots)?;
        let penalty = build_penalty_matrix(&knots);
        Ok(SplineWorkspace {
            knots,
            basis,
            penalty,
        })
    }

    pub fn dim(&self) -> usize {
        self.knots.basis_dim()
    }

    /// Curve `Ψ θ` at the observation times.
    pub fn curve(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.basis * theta
    }

    /// Quadratic roughness `θᵀ S θ`.
    pub fn roughness(&self, theta: &DVector<f64>) -> f64 {
        theta.dot(&(&self.penalty * theta))
    }
}
