use serde::{Deserialize, Serialize};

use super::system::{FastSlowSystem, FastSlowTrajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ForwardEuler,
    Rk4,
}

impl Scheme {
    fn stages(self) -> usize {
        match self {
            Scheme::ForwardEuler => 1,
            Scheme::Rk4 => 4,
        }
    }
}

/// States larger than this multiple of the initial scale count as blow-up.
const BLOWUP_FACTOR: f64 = 1e6;

/// Explicit fine-step solve of the full stiff system.
pub fn reference_stiff_solve(
    system: &FastSlowSystem,
    psi0: &[f64],
    phi0: &[f64],
    t_end: f64,
    dt_fine: f64,
) -> Result<FastSlowTrajectory> {
    reference_stiff_solve_with(system, psi0, phi0, t_end, dt_fine, Scheme::ForwardEuler)
}

/// Explicit solve with `dt_fine`, the last step shortened to land on `t_end`.
///
/// Stability needs `dt_fine = O(τ)` (forward Euler is stable for the fast
/// relaxation only when `dt_fine < 2τ`); instead of refusing larger steps the
/// solver detects the resulting blow-up and reports it.
pub fn reference_stiff_solve_with(
    system: &FastSlowSystem,
    psi0: &[f64],
    phi0: &[f64],
    t_end: f64,
    dt_fine: f64,
    scheme: Scheme,
) -> Result<FastSlowTrajectory> {
    if !(dt_fine > 0.0) || !(t_end > 0.0) {
        return Err(Error::Domain(format!(
            "need dt_fine > 0 and t_end > 0, got {dt_fine} and {t_end}"
        )));
    }
    let m = system.dim;
    if psi0.len() != m || phi0.len() != m {
        return Err(Error::Shape(format!("initial state width for a system of dimension {m}")));
    }
    let scale = phi0.iter().chain(psi0).fold(1.0f64, |a, v| a.max(v.abs()));
    let limit = BLOWUP_FACTOR * scale;
    let mut x: Vec<f64> = phi0.iter().chain(psi0).copied().collect();
    let mut traj = FastSlowTrajectory {
        times: vec![0.0],
        phi: vec![phi0.to_vec()],
        psi: vec![psi0.to_vec()],
        macro_steps: 0,
        micro_steps_total: 0,
        evaluations: 0,
    };
    let steps = (t_end / dt_fine - 1e-9).ceil().max(1.0) as usize;
    let mut t = 0.0;
    let add = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    for step in 1..=steps {
        let h = if step == steps { t_end - t } else { dt_fine };
        match scheme {
            Scheme::ForwardEuler => {
                let k1 = system.rhs(&x);
                x = add(&x, &k1, h);
            }
            Scheme::Rk4 => {
                let k1 = system.rhs(&x);
                let k2 = system.rhs(&add(&x, &k1, 0.5 * h));
                let k3 = system.rhs(&add(&x, &k2, 0.5 * h));
                let k4 = system.rhs(&add(&x, &k3, h));
                for i in 0..x.len() {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        t = if step == steps { t_end } else { step as f64 * dt_fine };
        // one rhs call evaluates f and g once each
        traj.evaluations += 2 * scheme.stages();
        traj.micro_steps_total += 1;
        if x.iter().any(|v| !v.is_finite() || v.abs() > limit) {
            return Err(Error::Divergence {
                t,
                hint: format!(
                    "explicit reference blew up with dt_fine = {dt_fine:e}; use dt_fine <= tau/2 = {:e}",
                    system.tau / 2.0
                ),
            });
        }
        traj.times.push(t);
        traj.phi.push(x[..m].to_vec());
        traj.psi.push(x[m..].to_vec());
    }
    traj.macro_steps = steps;
    Ok(traj)
}
