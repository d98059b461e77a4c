use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::report::{CaseResult, VerificationReport};
use crate::error::{Error, Result};
use crate::gradients::gradient_report;
use crate::lem::{state_trajectory, LemParams, LemState};
use crate::numerics::{derive_seed, rng_from_seed, Matrix, SeededRng, TensorSet};

/// Proof-form state bound `√(t_n (1 + 2Δt))`.
pub fn prop1_bound(n: usize, delta_t: f64) -> f64 {
    (n as f64 * delta_t * (1.0 + 2.0 * delta_t)).sqrt()
}

/// Statement-form state bound `√(t_n (1 + Δt))`.
pub fn prop1_statement_bound(n: usize, delta_t: f64) -> f64 {
    (n as f64 * delta_t * (1.0 + delta_t)).sqrt()
}

/// A model with every weight and bias drawn from `U(−scale, scale)`.
pub fn random_model(d: usize, m: usize, o: usize, delta_t: f64, scale: f64, rng: &mut SeededRng) -> Result<LemParams> {
    let mut p = LemParams::zeros(d, m, o, delta_t)?;
    for t in p.tensor_slices_mut() {
        t.iter_mut().for_each(|v| *v = rng.random_range(-scale..=scale));
    }
    Ok(p)
}

pub fn random_inputs(n: usize, m: usize, amplitude: f64, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-amplitude..=amplitude)).collect())
        .collect()
}

/// Simulates random models from the zero state and checks every step
/// against the proof-form bound. Weight scales range over `[0.1, 10]`, so
/// gates and activations hit saturation as well as the linear regime.
pub fn prop1_suite(n_models: usize, n_steps: usize, delta_t_max: f64, seed: u64) -> Result<VerificationReport> {
    if !(delta_t_max > 0.0 && delta_t_max <= 0.5) {
        return Err(Error::Domain(format!("the state bound needs 0 < Δt ≤ 1/2, got {delta_t_max}")));
    }
    if n_models == 0 || n_steps == 0 {
        return Err(Error::Config("prop1 suite needs at least one model and one step".into()));
    }
    let rows: Vec<(CaseResult, usize)> = (0..n_models as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i));
            let d = rng.random_range(1..=8);
            let m = rng.random_range(1..=4);
            let dt = rng.random_range(1e-3..=delta_t_max);
            let scale = 10f64.powf(rng.random_range(-1.0..=1.0));
            let amp = 10f64.powf(rng.random_range(-1.0..=1.0));
            let p = random_model(d, m, 1, dt, scale, &mut rng)?;
            let inputs = random_inputs(n_steps, m, amp, &mut rng);
            let states = state_trajectory(&p, &inputs, &LemState::zeros(d))?;
            let mut worst = (f64::INFINITY, 0usize, 0.0, 0.0);
            let mut statement_violations = 0;
            for (k, s) in states.iter().enumerate() {
                let obs = s.max_abs();
                let b = prop1_bound(k + 1, dt);
                if b - obs < worst.0 {
                    worst = (b - obs, k + 1, obs, b);
                }
                if obs > prop1_statement_bound(k + 1, dt) {
                    statement_violations += 1;
                }
            }
            let case = CaseResult::upper(format!("model {i}"), worst.2, worst.3).with_extra(json!({
                "d": d, "m": m, "delta_t": dt, "weight_scale": scale, "input_scale": amp,
                "tightest_step": worst.1,
                "statement_form_violations": statement_violations,
            }));
            Ok((case, statement_violations))
        })
        .collect::<Result<_>>()?;
    let statement: usize = rows.iter().map(|r| r.1).sum();
    let cases = rows.into_iter().map(|r| r.0).collect();
    Ok(VerificationReport::from_cases("prop1", cases).note(format!(
        "statement form √(t_n(1+Δt)) exceeded at {statement} of {} steps (reported, not asserted)",
        n_models * n_steps
    )))
}

/// Gradient bound suite: random models with `T = NΔt = 1`, identity readout
/// and the per-step MSE loss. Cycles `Δt` through 0.01, 0.05 and 0.1.
pub fn prop2_suite(n_models: usize, seed: u64) -> Result<VerificationReport> {
    if n_models == 0 {
        return Err(Error::Config("prop2 suite needs at least one model".into()));
    }
    const STEPS: [f64; 3] = [0.01, 0.05, 0.1];
    let rows: Vec<(CaseResult, bool)> = (0..n_models as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i));
            let dt = STEPS[i as usize % STEPS.len()];
            let n = (1.0 / dt).round() as usize;
            let d = rng.random_range(1..=8);
            let m = rng.random_range(1..=4);
            let scale = 10f64.powf(rng.random_range(-1.0..=0.5));
            let mut p = random_model(d, m, d, dt, scale, &mut rng)?;
            p.w_out = Matrix::identity(d);
            let inputs = random_inputs(n, m, 1.0, &mut rng);
            let targets = random_inputs(n, d, 1.0, &mut rng);
            let r = gradient_report(&p, &inputs, &targets)?;
            let case = CaseResult::upper(format!("model {i}"), r.empirical_max_abs, r.bound_unconditional).with_extra(
                json!({
                    "d": d, "m": m, "delta_t": dt, "n": n, "eta": r.eta, "x_hat": r.x_hat,
                    "small_dt_bound": r.bound_small_dt, "small_dt_pass": r.pass_small_dt,
                }),
            );
            Ok((case, r.pass_small_dt))
        })
        .collect::<Result<_>>()?;
    let small = rows.iter().filter(|r| r.1).count();
    let cases = rows.into_iter().map(|r| r.0).collect();
    Ok(VerificationReport::from_cases("prop2", cases).note(format!(
        "small-Δt bound (3+√3X̂)(3+6η) held for {small} of {n_models} models (reported, not asserted)"
    )))
}
