//! Explicit ODE integrators: adaptive Dormand–Prince 5(4) and fixed-step
//! classical RK4. Both report the state exactly at requested sample times by
//! shortening the step that would cross one.

use serde::Serialize;

use crate::error::{Error, Result};

/// States at the requested sample times plus work counters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn check_samples(t_span: (f64, f64), sample_times: &[f64]) -> Result<()> {
    let (t0, t1) = t_span;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Domain(format!("invalid time span ({t0}, {t1})")));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be non-decreasing".into()));
    }
    if sample_times.iter().any(|&t| t < t0 || t > t1) {
        return Err(Error::Domain(format!("sample times must lie in [{t0}, {t1}]")));
    }
    Ok(())
}

fn rms_norm(v: &[f64], scale: &[f64]) -> f64 {
    (v.iter().zip(scale).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Adaptive Dormand–Prince 5(4) with local extrapolation.
///
/// The error per step is the RMS of `err_i / (abs_tol + rel_tol·max(|y_i|, |ŷ_i|))`;
/// steps are accepted when it is ≤ 1 and rescaled by
/// `0.9·err^{-1/5}` clamped to `[0.2, 5]`.
pub fn rk45_integrate<F>(
    rhs: F,
    y0: &[f64],
    t_span: (f64, f64),
    rel_tol: f64,
    abs_tol: f64,
    sample_times: &[f64],
) -> Result<OdeSolution>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    check_samples(t_span, sample_times)?;
    if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
        return Err(Error::Domain("tolerances must be positive".into()));
    }
    let (t0, t1) = t_span;
    let span = t1 - t0;
    let min_step = 1e-12 * span;
    let n = y0.len();
    let mut sol = OdeSolution {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        accepted_steps: 0,
        rejected_steps: 0,
        rhs_evals: 0,
    };
    let mut next_sample = 0;
    let mut t = t0;
    let mut y = y0.to_vec();
    while next_sample < sample_times.len() && sample_times[next_sample] <= t {
        sol.times.push(sample_times[next_sample]);
        sol.states.push(y.clone());
        next_sample += 1;
    }
    if next_sample == sample_times.len() {
        return Ok(sol);
    }

    let eval = |t: f64, y: &[f64], evals: &mut usize| {
        *evals += 1;
        rhs(t, y)
    };
    let mut k0 = eval(t, &y, &mut sol.rhs_evals);

    // starting step from the scaled size of y and its derivatives
    let scale0: Vec<f64> = y.iter().map(|v| abs_tol + rel_tol * v.abs()).collect();
    let d0 = rms_norm(&y, &scale0);
    let d1 = rms_norm(&k0, &scale0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(&k0).map(|(a, b)| a + h0 * b).collect();
    let k1 = eval(t + h0, &y1, &mut sol.rhs_evals);
    let diff: Vec<f64> = k1.iter().zip(&k0).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, &scale0) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let mut h = (100.0 * h0).min(h1).min(span);

    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    while next_sample < sample_times.len() {
        let target = sample_times[next_sample];
        let landing = t + h >= target;
        let step = if landing { target - t } else { h };
        if step < min_step && !landing {
            return Err(Error::Stiffness { t, step, min_step });
        }
        k[0].clone_from(&k0);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                stage[i] = y[i] + step * acc;
            }
            k[s] = eval(t + C[s] * step, &stage, &mut sol.rhs_evals);
        }
        // stage 7 is evaluated at the fifth-order solution
        let y_new = stage.clone();
        let err: Vec<f64> = (0..n)
            .map(|i| step * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>())
            .collect();
        let scale: Vec<f64> = (0..n)
            .map(|i| abs_tol + rel_tol * y[i].abs().max(y_new[i].abs()))
            .collect();
        let mut err_norm = rms_norm(&err, &scale);
        if !err_norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            err_norm = f64::INFINITY;
        }
        let factor = if err_norm == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err_norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        if err_norm <= 1.0 {
            sol.accepted_steps += 1;
            t = if landing { target } else { t + step };
            y = y_new;
            k0 = std::mem::take(&mut k[6]);
            k[6] = vec![0.0; n];
            // a landing step was shortened artificially, so only grow from h
            h = if landing { h.max(step * factor) } else { step * factor };
            while next_sample < sample_times.len() && sample_times[next_sample] <= t {
                sol.times.push(sample_times[next_sample]);
                sol.states.push(y.clone());
                next_sample += 1;
            }
        } else {
            sol.rejected_steps += 1;
            h = step * factor.min(1.0);
            if h < min_step {
                return Err(Error::Stiffness { t, step: h, min_step });
            }
        }
    }
    Ok(sol)
}

/// Classical RK4 with step `dt`, shortened only to land on sample times.
pub fn rk4_integrate<F>(rhs: F, y0: &[f64], t_span: (f64, f64), dt: f64, sample_times: &[f64]) -> Result<OdeSolution>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    check_samples(t_span, sample_times)?;
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    let n = y0.len();
    let mut sol = OdeSolution {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        accepted_steps: 0,
        rejected_steps: 0,
        rhs_evals: 0,
    };
    let mut t = t_span.0;
    let mut y = y0.to_vec();
    let mut tmp = vec![0.0; n];
    for &target in sample_times {
        // steps that would land within dt·1e-9 of the sample are merged into it
        while target - t > dt * 1e-9 {
            let h = dt.min(target - t);
            let k1 = rhs(t, &y);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            let k2 = rhs(t + 0.5 * h, &tmp);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            let k3 = rhs(t + 0.5 * h, &tmp);
            for i in 0..n {
                tmp[i] = y[i] + h * k3[i];
            }
            let k4 = rhs(t + h, &tmp);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t = if h == target - t { target } else { t + h };
            sol.accepted_steps += 1;
            sol.rhs_evals += 4;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    t,
                    hint: "RK4 state became non-finite; reduce dt".into(),
                });
            }
        }
        sol.times.push(target);
        sol.states.push(y.clone());
    }
    Ok(sol)
}

/// `n` evenly spaced points covering `[t0, t1]` inclusive.
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![t0],
        _ => (0..n)
            .map(|i| if i == n - 1 { t1 } else { t0 + (t1 - t0) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}
