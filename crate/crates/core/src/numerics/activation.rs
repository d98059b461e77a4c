use crate::error::{Error, Result};

/// Sigmoid in its tanh form, `0.5 (1 + tanh(x / 2))`.
#[inline]
pub fn sigma_hat(x: f64) -> f64 {
    0.5 * (1.0 + (0.5 * x).tanh())
}

/// Derivative of [`sigma_hat`] expressed through its value `s`.
#[inline]
pub fn sigma_hat_prime_from_value(s: f64) -> f64 {
    s * (1.0 - s)
}

#[inline]
pub fn sigma_hat_prime(x: f64) -> f64 {
    sigma_hat_prime_from_value(sigma_hat(x))
}

/// Bias `b` with `sigma_hat(b) = tau`, i.e. `2 artanh(2 tau - 1)`.
///
/// Evaluated as `ln(tau) - ln(1 - tau)`, which is the same function but keeps
/// full relative precision for `tau` close to 0.
pub fn sigma_hat_inverse(tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!(
            "sigma_hat_inverse needs tau in (0, 1), got {tau}"
        )));
    }
    Ok(tau.ln() - (-tau).ln_1p())
}

/// Saturating bias `b_inf` with `|1 - sigma_hat(b_inf)| <= tol`.
pub fn saturation_bias(tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!(
            "saturation tolerance must lie in (0, 1), got {tol}"
        )));
    }
    // Nudge upward: rounding in `1 - tol` can otherwise land just outside the tolerance.
    let b = sigma_hat_inverse(1.0 - tol)?;
    Ok(b + 1e-6 * b.abs().max(1.0))
}

#[inline]
pub fn tanh_prime_from_value(t: f64) -> f64 {
    1.0 - t * t
}
