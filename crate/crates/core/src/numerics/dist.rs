use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::NumericsError;

/// χ² draw with (possibly fractional) `df` degrees of freedom, as
/// Gamma(df/2, scale 2).
pub fn sample_chisq<R: Rng + ?Sized>(df: f64, rng: &mut R) -> Result<f64, NumericsError> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(NumericsError::InvalidParameter("chi-square df must be positive"));
    }
    let gamma = Gamma::new(df / 2.0, 2.0)
        .map_err(|_| NumericsError::InvalidParameter("chi-square df must be positive"))?;
    // Gamma draws with tiny shape can underflow to exactly zero.
    Ok(gamma.sample(rng).max(f64::MIN_POSITIVE))
}

/// Scaled inverse-χ²(ν, s0²) draw, defined as ν·s0²/χ²_ν.
pub fn sample_scaled_inv_chisq<R: Rng + ?Sized>(
    nu: f64,
    s0sq: f64,
    rng: &mut R,
) -> Result<f64, NumericsError> {
    if !(s0sq >= 0.0) || !s0sq.is_finite() {
        return Err(NumericsError::InvalidParameter("scale must be nonnegative"));
    }
    let chi = sample_chisq(nu, rng)?;
    Ok(nu * s0sq / chi)
}

pub fn sample_normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> Result<f64, NumericsError> {
    if !(sd >= 0.0) || !sd.is_finite() || !mean.is_finite() {
        return Err(NumericsError::InvalidParameter("normal sd must be finite and nonnegative"));
    }
    if sd == 0.0 {
        return Ok(mean);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + sd * z)
}

/// Uniform draw on the open interval (lo, hi).
pub fn sample_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return lo + (hi - lo) * u;
        }
    }
}
