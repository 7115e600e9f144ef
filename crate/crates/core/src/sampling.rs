//! Random draws used by the Gibbs sampler.
//!
//! Every draw takes an explicit [`RngStream`]; a chain owns exactly one
//! stream, so results depend only on the seed and never on thread scheduling.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Result, SnmError};

/// Deterministic random stream seeded from a 64-bit value.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Stream for replicate `r` of a run seeded with `seed`:
    /// `seed XOR splitmix64(r)`. Independent of how replicates are scheduled.
    pub fn for_replicate(seed: u64, r: u64) -> Self {
        Self::new(seed ^ splitmix64(r))
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// SplitMix64 finalizer (Steele, Lea & Flood).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const JITTER_ATTEMPTS: usize = 3;

/// Cholesky factor of a symmetric positive definite matrix, adding diagonal
/// jitter `1e-10 · trace / d` (then ×10, ×100) if the plain factorization fails.
pub fn factor_precision(precision: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let d = precision.nrows();
    if d == 0 || precision.ncols() != d {
        return Err(SnmError::invalid(format!(
            "precision must be a non-empty square matrix, got {}x{}",
            precision.nrows(),
            precision.ncols()
        )));
    }
    if let Some(chol) = Cholesky::new(precision.clone()) {
        return Ok(chol);
    }
    let base = 1e-10 * precision.trace().abs() / d as f64;
    let mut jitter = if base > 0.0 { base } else { 1e-10 };
    for _ in 0..JITTER_ATTEMPTS {
        let mut p = precision.clone();
        for i in 0..d {
            p[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(p) {
            log::debug!("precision factorized after adding jitter {jitter:e}");
            return Ok(chol);
        }
        jitter *= 10.0;
    }
    let diag = precision.diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Err(SnmError::Numerical(format!(
        "precision matrix ({d}x{d}) is not positive definite even with jitter {:e}; \
         diagonal range [{lo:e}, {hi:e}]",
        jitter / 10.0
    )))
}

/// Mean `P⁻¹ ℓ` of the Gaussian with precision `P` and linear term `ℓ`.
pub fn precision_mean(precision: &DMatrix<f64>, linear_term: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = factor_precision(precision)?;
    Ok(chol.solve(linear_term))
}

/// Draw from `N(P⁻¹ ℓ, P⁻¹)` without forming `P⁻¹`.
pub fn mvn_precision_draw(
    precision: &DMatrix<f64>,
    linear_term: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let d = precision.nrows();
    if linear_term.len() != d {
        return Err(SnmError::invalid(format!(
            "linear term has length {} for a {d}x{d} precision",
            linear_term.len()
        )));
    }
    let chol = factor_precision(precision)?;
    let mut draw = chol.solve(linear_term);
    // P = L Lᵀ; u solving Lᵀ u = z has covariance (L Lᵀ)⁻¹
    let z = DVector::from_fn(d, |_, _| rng.standard_normal());
    let u = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| SnmError::Numerical("singular Cholesky factor".into()))?;
    draw += u;
    Ok(draw)
}

fn check_shape_rate(shape: f64, rate: f64) -> Result<()> {
    if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
        return Err(SnmError::invalid(format!(
            "gamma parameters must be positive and finite, got shape {shape}, rate {rate}"
        )));
    }
    Ok(())
}

/// Gamma draw with mean `shape / rate`.
pub fn gamma_draw(shape: f64, rate: f64, rng: &mut RngStream) -> Result<f64> {
    check_shape_rate(shape, rate)?;
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| SnmError::invalid(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Inverse-gamma draw: the reciprocal of `gamma_draw(shape, rate)`.
pub fn inv_gamma_draw(shape: f64, rate: f64, rng: &mut RngStream) -> Result<f64> {
    let g = gamma_draw(shape, rate, rng)?;
    if g == 0.0 {
        return Err(SnmError::Numerical(format!(
            "gamma({shape}, {rate}) underflowed to zero"
        )));
    }
    Ok(1.0 / g)
}

/// Normal draw with the given mean and variance.
pub fn normal_draw(mean: f64, variance: f64, rng: &mut RngStream) -> Result<f64> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(SnmError::invalid(format!("normal variance must be >= 0, got {variance}")));
    }
    Ok(mean + variance.sqrt() * rng.standard_normal())
}

/// Uniform draw on `[lo, hi)`.
pub fn uniform_draw(lo: f64, hi: f64, rng: &mut RngStream) -> f64 {
    rng.gen_range(lo..hi)
}
