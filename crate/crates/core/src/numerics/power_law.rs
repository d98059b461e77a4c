//! Log-log histogram regression for power-law decay exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Decay exponent `p` in `density ∝ amplitude^(-p)`.
    pub exponent: f64,
    /// Fitted log-density at amplitude 1.
    pub intercept: f64,
    pub bins_used: usize,
    /// Geometric bin centres and empirical densities of the non-empty bins.
    pub centres: Vec<f64>,
    pub densities: Vec<f64>,
}

/// Fits a power-law decay exponent to positive samples.
///
/// Samples are binned into [`DEFAULT_BINS`] logarithmic bins spanning the
/// observed range, empty bins are dropped, and `ln(density)` is regressed on
/// `ln(centre)`. Each bin is weighted by its count, the inverse of the
/// Poisson variance of a log-count.
pub fn fit_power_law(amplitudes: &[f64]) -> Result<f64> {
    fit_power_law_with(amplitudes, DEFAULT_BINS).map(|f| f.exponent)
}

pub fn fit_power_law_with(amplitudes: &[f64], bins: usize) -> Result<PowerLawFit> {
    if bins < 2 {
        return Err(Error::Domain("need at least two bins".into()));
    }
    if amplitudes.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::Domain(
            "power-law fit needs positive finite amplitudes".into(),
        ));
    }
    let (lo, hi) = amplitudes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });
    if amplitudes.is_empty() || !(hi > lo) {
        return Err(Error::DegenerateFit(
            "all samples identical (zero-width range)".into(),
        ));
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let step = (log_hi - log_lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &a in amplitudes {
        let idx = (((a.ln() - log_lo) / step) as usize).min(bins - 1);
        counts[idx] += 1;
    }

    let total = amplitudes.len() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut centres = Vec::new();
    let mut densities = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let left = (log_lo + step * i as f64).exp();
        let right = (log_lo + step * (i + 1) as f64).exp();
        let density = c as f64 / (total * (right - left));
        let centre = (left * right).sqrt();
        xs.push(centre.ln());
        ys.push(density.ln());
        ws.push(c as f64);
        centres.push(centre);
        densities.push(density);
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "only {} non-empty bin(s)",
            xs.len()
        )));
    }
    let (slope, intercept) = weighted_least_squares(&xs, &ys, &ws)?;
    Ok(PowerLawFit {
        exponent: -slope,
        intercept,
        bins_used: xs.len(),
        centres,
        densities,
    })
}

/// Slope and intercept of the weighted least-squares line through `(x, y)`.
pub fn weighted_least_squares(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<(f64, f64)> {
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("abscissae have zero spread".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let ones = vec![1.0; xs.len()];
    weighted_least_squares(xs, ys, &ones).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_uniform;

    /// Inverse-CDF draws from `density ∝ a^(-p)` on `[lo, hi]`.
    fn planted(p: f64, lo: f64, hi: f64, n: usize, seed: u64) -> Vec<f64> {
        let u = seeded_uniform(0.0, 1.0, n, seed).unwrap();
        u.into_iter()
            .map(|u| {
                if (p - 1.0).abs() < 1e-12 {
                    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
                } else {
                    let q = 1.0 - p;
                    (lo.powf(q) + u * (hi.powf(q) - lo.powf(q))).powf(1.0 / q)
                }
            })
            .collect()
    }

    #[test]
    fn recovers_half_exponent() {
        let s = planted(0.5, 1e-4, 1.0, 100_000, 11);
        let p = fit_power_law(&s).unwrap();
        assert!((p - 0.5).abs() < 0.05, "p = {p}");
    }

    #[test]
    fn recovers_unit_exponent() {
        let s = planted(1.0, 1e-4, 1.0, 100_000, 12);
        let p = fit_power_law(&s).unwrap();
        assert!((p - 1.0).abs() < 0.05, "p = {p}");
    }

    #[test]
    fn uniform_is_flat() {
        let s = seeded_uniform(0.0, 1.0, 100_000, 13).unwrap();
        let p = fit_power_law(&s).unwrap();
        assert!(p.abs() < 0.05, "p = {p}");
    }

    #[test]
    fn identical_samples_are_degenerate() {
        assert!(matches!(
            fit_power_law(&[0.3; 100]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_power_law(&[]).is_err());
        assert!(matches!(fit_power_law(&[0.1, -1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn planted_exponents_across_seeds() {
        for (i, p) in [0.25, 0.5, 0.75, 1.0, 1.5].into_iter().enumerate() {
            let s = planted(p, 1e-3, 1.0, 100_000, 100 + i as u64);
            let fit = fit_power_law(&s).unwrap();
            assert!((fit - p).abs() < 0.05, "planted {p}, fit {fit}");
        }
    }
}
