//! How a single step's gradient contribution `∂ℰ_n^{(k)}/∂θ` scales with the
//! step size `Δt` and with the lag `n − k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::bounds::random_inputs;
use super::report::{CaseResult, VerificationReport};
use crate::error::{Error, Result};
use crate::gradients::{gradient_contributions, ThetaEntry};
use crate::lem::{forward_sequence, LemParams, LemState};
use crate::numerics::{derive_seed, least_squares_slope, rng_from_seed, Matrix};

pub const SLOPE_RANGE: (f64, f64) = (1.3, 1.7);
pub const K_RATIO_LIMIT: f64 = 10.0;
const CENSOR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFamily {
    #[default]
    Wz,
    Wy,
}

impl WeightFamily {
    fn entry(self, alpha: usize, beta: usize) -> ThetaEntry {
        match self {
            WeightFamily::Wz => ThetaEntry::Wz { alpha, beta },
            WeightFamily::Wy => ThetaEntry::Wy { alpha, beta },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub delta_t: f64,
    pub k: usize,
    /// Mean of `|∂ℰ_n^{(k)}/∂θ|` over every entry of the weight matrix.
    pub mean_abs: f64,
    pub max_abs: f64,
    /// True when every entry underflowed, so the row carries no slope data.
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub family: WeightFamily,
    pub d: usize,
    pub n: usize,
    pub models: usize,
    /// Least-squares slope of `log ḡ(Δt)` against `log Δt`, where `ḡ` is the
    /// geometric mean over the uncensored lags of the entry-averaged magnitude.
    pub slope: Option<f64>,
    pub per_k_slopes: Vec<(usize, Option<f64>)>,
    /// Largest over smallest entry-averaged magnitude across lags at
    /// `k_ratio_delta_t`.
    pub k_ratio: Option<f64>,
    pub k_ratio_delta_t: f64,
    /// Mean `‖W_y‖₁` over the models, logged for reference.
    pub wy_norm_one: f64,
    pub rows: Vec<ScalingRow>,
    pub report: VerificationReport,
}

fn slope_of(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    least_squares_slope(&xs, &ys).ok()
}

/// Entry-averaged contribution magnitudes of one random model for every
/// `(Δt, k)`, plus its `‖W_y‖₁`. Weights, inputs and target are fixed; only
/// the step size changes.
fn model_rows(
    family: WeightFamily,
    d: usize,
    n: usize,
    k_list: &[usize],
    dt_list: &[f64],
    seed: u64,
) -> Result<(f64, Vec<ScalingRow>)> {
    let m = 2;
    let mut rng = rng_from_seed(derive_seed(seed, 0x9a3));
    let inputs = random_inputs(n, m, 1.0, &mut rng);
    let target = random_inputs(1, d, 1.0, &mut rng).remove(0);
    let base = LemParams::init(d, m, d, 1.0, derive_seed(seed, 0x9a4))?;
    let rows: Vec<Vec<ScalingRow>> = dt_list
        .par_iter()
        .map(|&dt| {
            let mut p = base.clone();
            p.delta_t = dt;
            p.w_out = Matrix::identity(d);
            let (_, caches) = forward_sequence(&p, &inputs, &LemState::zeros(d))?;
            let mut sums = vec![(0.0, 0.0f64); k_list.len()];
            for alpha in 0..d {
                for beta in 0..d {
                    let all = gradient_contributions(&p, &caches, &target, n, family.entry(alpha, beta))?;
                    for (s, &k) in sums.iter_mut().zip(k_list) {
                        let v = all[k - 1].abs();
                        s.0 += v;
                        s.1 = s.1.max(v);
                    }
                }
            }
            Ok(k_list
                .iter()
                .zip(sums)
                .map(|(&k, (sum, max))| ScalingRow {
                    delta_t: dt,
                    k,
                    mean_abs: sum / (d * d) as f64,
                    max_abs: max,
                    censored: max < CENSOR_FLOOR,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((base.wy.norm_one(), rows.into_iter().flatten().collect()))
}

/// Contribution scaling for one weight family, averaged (geometrically) over
/// `models` random models. States start at zero.
pub fn prop3_scaling_with(
    family: WeightFamily,
    d: usize,
    n: usize,
    k_list: &[usize],
    dt_list: &[f64],
    models: usize,
    seed: u64,
) -> Result<ScalingResult> {
    if d == 0 || n < 2 || models == 0 {
        return Err(Error::Config("scaling study needs d >= 1, n >= 2 and at least one model".into()));
    }
    if k_list.is_empty() || dt_list.len() < 2 {
        return Err(Error::Config("scaling study needs lags and at least two step sizes".into()));
    }
    if let Some(k) = k_list.iter().find(|&&k| k == 0 || 2 * k > n) {
        return Err(Error::Domain(format!("lag k = {k} must satisfy 1 <= k <= n/2 = {}", n / 2)));
    }
    if let Some(dt) = dt_list.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::Domain(format!("step size {dt} must be positive")));
    }
    let per_model: Vec<(f64, Vec<ScalingRow>)> = (0..models as u64)
        .map(|j| model_rows(family, d, n, k_list, dt_list, derive_seed(seed, j)))
        .collect::<Result<_>>()?;
    let wy_norm_one = per_model.iter().map(|p| p.0).sum::<f64>() / models as f64;
    // Geometric mean over the ensemble, row by row.
    let rows: Vec<ScalingRow> = (0..per_model[0].1.len())
        .map(|i| {
            let first = &per_model[0].1[i];
            let all = per_model.iter().map(|p| &p.1[i]);
            let censored = all.clone().any(|r| r.censored);
            ScalingRow {
                delta_t: first.delta_t,
                k: first.k,
                mean_abs: if censored {
                    0.0
                } else {
                    (all.clone().map(|r| r.mean_abs.ln()).sum::<f64>() / models as f64).exp()
                },
                max_abs: all.map(|r| r.max_abs).fold(0.0, f64::max),
                censored,
            }
        })
        .collect();

    let live_k: Vec<usize> = k_list
        .iter()
        .copied()
        .filter(|&k| rows.iter().filter(|r| r.k == k).all(|r| !r.censored))
        .collect();
    let per_k_slopes = k_list
        .iter()
        .map(|&k| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.k == k && !r.censored)
                .map(|r| (r.delta_t, r.mean_abs))
                .collect();
            (k, slope_of(&pts))
        })
        .collect();
    let pooled: Vec<(f64, f64)> = if live_k.is_empty() {
        Vec::new()
    } else {
        dt_list
            .iter()
            .map(|&dt| {
                let logs: f64 = rows
                    .iter()
                    .filter(|r| r.delta_t == dt && live_k.contains(&r.k))
                    .map(|r| r.mean_abs.ln())
                    .sum();
                (dt, (logs / live_k.len() as f64).exp())
            })
            .collect()
    };
    let slope = slope_of(&pooled);

    let k_ratio_delta_t = *dt_list
        .iter()
        .min_by(|a, b| (a.ln() - 1e-2f64.ln()).abs().total_cmp(&(b.ln() - 1e-2f64.ln()).abs()))
        .expect("non-empty");
    let at: Vec<f64> = rows
        .iter()
        .filter(|r| r.delta_t == k_ratio_delta_t && !r.censored)
        .map(|r| r.mean_abs)
        .collect();
    let k_ratio = (at.len() >= 2).then(|| {
        at.iter().copied().fold(0.0, f64::max) / at.iter().copied().fold(f64::INFINITY, f64::min)
    });

    let censored: Vec<usize> = k_list.iter().copied().filter(|k| !live_k.contains(k)).collect();
    let case = match slope {
        Some(s) => CaseResult::within("log-log slope", s, SLOPE_RANGE.0, SLOPE_RANGE.1),
        None => CaseResult::upper("log-log slope", f64::NAN, SLOPE_RANGE.1),
    }
    .with_extra(json!({ "per_k_slopes": per_k_slopes, "censored_k": censored }));
    let mut report = VerificationReport::from_cases("prop3", vec![case]).note(format!("‖W_y‖₁ = {wy_norm_one:.4}"));
    report = match k_ratio {
        Some(r) if r <= K_RATIO_LIMIT => report.note(format!("k-ratio {r:.3} at Δt = {k_ratio_delta_t} (≤ {K_RATIO_LIMIT})")),
        Some(r) => report.note(format!(
            "warning: k-ratio {r:.3} at Δt = {k_ratio_delta_t} exceeds {K_RATIO_LIMIT} (diagnostic only)"
        )),
        None => report.note("k-ratio unavailable: fewer than two uncensored lags"),
    };
    if !censored.is_empty() {
        report = report.note(format!("lags {censored:?} censored (contribution below {CENSOR_FLOOR:e})"));
    }
    Ok(ScalingResult {
        family,
        d,
        n,
        models,
        slope,
        per_k_slopes,
        k_ratio,
        k_ratio_delta_t,
        wy_norm_one,
        rows,
        report,
    })
}

/// Scaling study over `W_z` entries.
pub fn prop3_scaling(d: usize, n: usize, k_list: &[usize], dt_list: &[f64], models: usize, seed: u64) -> Result<ScalingResult> {
    prop3_scaling_with(WeightFamily::Wz, d, n, k_list, dt_list, models, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contributions_are_finite_and_nonzero() {
        let r = prop3_scaling(4, 20, &[2, 5, 10], &[1e-2, 1e-1], 1, 1).unwrap();
        assert!(r.rows.iter().all(|row| row.mean_abs.is_finite() && row.mean_abs > 0.0));
        assert!(r.slope.unwrap().is_finite());
    }

    #[test]
    fn first_lag_of_wz_is_censored_from_rest() {
        // y_0 = 0, so the W_z contribution of step 1 vanishes identically.
        let r = prop3_scaling(3, 10, &[1, 3], &[1e-2, 1e-1], 1, 2).unwrap();
        assert!(r.rows.iter().filter(|row| row.k == 1).all(|row| row.censored));
        assert!(r.slope.is_some());
    }

    #[test]
    fn lag_must_be_short_relative_to_horizon() {
        assert!(prop3_scaling(2, 10, &[6], &[1e-2, 1e-1], 1, 0).is_err());
        assert!(prop3_scaling(2, 10, &[0], &[1e-2, 1e-1], 1, 0).is_err());
    }

    #[test]
    fn reproducible() {
        let a = prop3_scaling_with(WeightFamily::Wy, 3, 10, &[1, 4], &[1e-3, 1e-2], 2, 5).unwrap();
        let b = prop3_scaling_with(WeightFamily::Wy, 3, 10, &[1, 4], &[1e-3, 1e-2], 2, 5).unwrap();
        assert_eq!(a, b);
    }
}
