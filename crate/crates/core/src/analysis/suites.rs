use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::bounds::random_inputs;
use super::report::{CaseResult, VerificationReport};
use crate::baselines::{compare_trajectories, construct_equivalent_pair};
use crate::error::{Error, Result};
use crate::gradients::{backward, finite_difference_gradient, DEFAULT_FD_EPSILON};
use crate::lem::{forward_sequence, LemParams, LemState};
use crate::numerics::{derive_seed, max_relative_error, rng_from_seed, seeded_uniform};
use crate::solvers::{cost_comparison, hmm_solve, linear_exact, FastSlowSystem, HmmSettings};
use crate::training::loss::{sequence_loss, LossKind, SequenceTarget};

pub const GRADCHECK_TOLERANCE: f64 = 1e-6;
/// Relative errors are taken against `max(|a|, |b|, floor)`.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradcheckSettings {
    pub instances: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub m_max: usize,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for GradcheckSettings {
    fn default() -> Self {
        Self {
            instances: 20,
            d_min: 1,
            d_max: 8,
            m_max: 4,
            n_min: 2,
            n_max: 16,
        }
    }
}

/// Analytic gradients against the central-difference oracle on random
/// instances. Even instances use the per-step MSE head, odd ones softmax
/// cross-entropy on the last step.
pub fn gradcheck_suite(settings: GradcheckSettings, seed: u64) -> Result<VerificationReport> {
    let s = settings;
    if s.instances == 0 || s.d_min == 0 || s.d_min > s.d_max || s.n_min == 0 || s.n_min > s.n_max || s.m_max == 0 {
        return Err(Error::Config(format!("invalid gradcheck settings {s:?}")));
    }
    let cases = (0..s.instances as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i));
            let d = rng.random_range(s.d_min..=s.d_max);
            let m = rng.random_range(1..=s.m_max);
            let n = rng.random_range(s.n_min..=s.n_max);
            let o = rng.random_range(2..=3);
            let dt = rng.random_range(0.05..=1.0);
            let p = LemParams::init(d, m, o, dt, derive_seed(seed, 1000 + i))?;
            let inputs = random_inputs(n, m, 1.0, &mut rng);
            let per_step = random_inputs(n, o, 1.0, &mut rng);
            let class = rng.random_range(0..o);
            let (kind, target) = if i % 2 == 0 {
                (LossKind::Mse, SequenceTarget::PerStep(&per_step))
            } else {
                (LossKind::CrossEntropy, SequenceTarget::Class(class))
            };
            let (out, caches) = forward_sequence(&p, &inputs, &LemState::zeros(d))?;
            let (_, g) = sequence_loss(kind, &out, target)?;
            let analytic = backward(&p, &caches, &g)?;
            let fd = finite_difference_gradient(&p, &inputs, target, kind, DEFAULT_FD_EPSILON)?;
            let err = max_relative_error(&analytic, &fd, GRADCHECK_FLOOR);
            Ok(
                CaseResult::upper(format!("instance {i}"), err, GRADCHECK_TOLERANCE).with_extra(json!({
                    "d": d, "m": m, "n": n, "o": o, "delta_t": dt,
                    "loss": if kind == LossKind::Mse { "mse" } else { "cross_entropy" },
                })),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport::from_cases("gradcheck", cases))
}

pub const EQUIVALENCE_TOLERANCE: f64 = 1e-6;

/// Side-by-side run of the constructed LEM and LSTM pair.
pub fn equivalence_suite(steps: usize, d: usize, m: usize, saturation_tol: f64, seed: u64) -> Result<VerificationReport> {
    if steps == 0 {
        return Err(Error::Config("equivalence needs at least one step".into()));
    }
    let (lem, lstm) = construct_equivalent_pair(d, m, seed, saturation_tol)?;
    let inputs: Vec<Vec<f64>> = seeded_uniform(-1.0, 1.0, steps * m, derive_seed(seed, 7))?
        .chunks(m)
        .map(<[f64]>::to_vec)
        .collect();
    let r = compare_trajectories(&lem, &lstm, &inputs, saturation_tol)?;
    let case = CaseResult::upper("max trajectory divergence", r.max_divergence(), EQUIVALENCE_TOLERANCE).with_extra(
        json!({
            "steps": steps, "d": d, "m": m, "saturation_tol": saturation_tol,
            "hidden": r.max_hidden_divergence, "cell": r.max_cell_divergence,
        }),
    );
    Ok(VerificationReport::from_cases("equivalence", vec![case]))
}

/// Scale-independent HMM settings on `[0, 1]`.
pub const HMM_SETTINGS: HmmSettings = HmmSettings {
    macro_dt: 0.025,
    micro_dt: 0.5,
    k: 20,
    n: 40,
};
pub const HMM_TARGET: f64 = 1e-2;
pub const HMM_TAUS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// HMM accuracy and cost on the linear fast-slow system:
/// - fixed settings reach `HMM_TARGET` against the closed form at τ = 1e-3,
/// - the cheapest HMM meeting the target costs within 2× across τ,
/// - the explicit reference grows at least 5× per decade of τ.
pub fn hmm_suite() -> Result<VerificationReport> {
    let (phi0, psi0) = (1.0, 1.0);
    let mut cases = Vec::new();
    let mut notes = Vec::new();
    for &tau in &HMM_TAUS {
        let sys = FastSlowSystem::linear(tau)?;
        let tr = hmm_solve(&sys, &[psi0], &[phi0], HMM_SETTINGS)?;
        let err = tr.max_psi_error(|t| vec![linear_exact(tau, phi0, psi0, t).1]);
        if tau == 1e-3 {
            cases.push(
                CaseResult::upper(format!("fixed-settings ψ error at τ = {tau:e}"), err, HMM_TARGET)
                    .with_extra(json!({ "settings": HMM_SETTINGS, "evaluations": tr.evaluations })),
            );
        } else {
            notes.push(format!(
                "fixed settings at τ = {tau:e}: ψ error {err:.3e} with {} evaluations",
                tr.evaluations
            ));
        }
    }
    let table = cost_comparison(&FastSlowSystem::linear(1e-3)?, &HMM_TAUS, HMM_TARGET)?;
    let spread = table.hmm_spread().unwrap_or(f64::INFINITY);
    cases.push(CaseResult::upper("HMM cost spread across τ", spread, 2.0).with_extra(serde_json::to_value(&table)?));
    for (w, r) in table.rows.windows(2).zip(table.reference_ratios()) {
        cases.push(CaseResult::lower(
            format!("reference growth τ {:e} → {:e}", w[0].tau, w[1].tau),
            r.unwrap_or(0.0),
            5.0,
        ));
    }
    let mut report = VerificationReport::from_cases("hmm", cases);
    report.notes = notes;
    Ok(report)
}
