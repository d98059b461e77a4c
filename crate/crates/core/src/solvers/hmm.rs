use serde::{Deserialize, Serialize};

use super::system::{FastSlowSystem, FastSlowTrajectory};
use crate::error::{ensure_finite, Error, Result};

/// Step sizes and counts for [`hmm_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmmSettings {
    pub macro_dt: f64,
    pub micro_dt: f64,
    pub k: usize,
    pub n: usize,
}

impl HmmSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("macro_dt", self.macro_dt), ("micro_dt", self.micro_dt)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.k == 0 || self.n == 0 {
            return Err(Error::Domain("HMM needs K >= 1 and N >= 1".into()));
        }
        Ok(())
    }

    /// Evaluations of `f` and `g` a solve will make.
    pub fn evaluations(&self) -> usize {
        self.n * (self.k + 1)
    }
}

/// `(1 − δt)^K`: the weight the micro solver leaves on the incoming `φ`.
pub fn micro_contraction(micro_dt: f64, k: usize) -> f64 {
    (1.0 - micro_dt).powi(k as i32)
}

/// Heterogeneous multiscale method for a fast-slow system.
///
/// Each macro step relaxes the fast variable with `K` micro steps
/// `φ ← (1 − δt) φ + δt f(ψ_{n−1})`, then advances the slow variable with
/// `ψ_n = ψ_{n−1} + Δt g(φ_n, ψ_{n−1})`. Nothing here depends on `τ`.
pub fn hmm_solve(system: &FastSlowSystem, psi0: &[f64], phi0: &[f64], settings: HmmSettings) -> Result<FastSlowTrajectory> {
    settings.validate()?;
    if psi0.len() != system.dim || phi0.len() != system.dim {
        return Err(Error::Shape(format!(
            "initial state widths ({}, {}) for a system of dimension {}",
            phi0.len(),
            psi0.len(),
            system.dim
        )));
    }
    let HmmSettings { macro_dt, micro_dt, k, n } = settings;
    let mut traj = FastSlowTrajectory {
        times: vec![0.0],
        phi: vec![phi0.to_vec()],
        psi: vec![psi0.to_vec()],
        macro_steps: 0,
        micro_steps_total: 0,
        evaluations: 0,
    };
    let mut phi = phi0.to_vec();
    let mut psi = psi0.to_vec();
    for step in 1..=n {
        for _ in 0..k {
            let f = (system.f)(&psi);
            for (p, fv) in phi.iter_mut().zip(&f) {
                *p = (1.0 - micro_dt) * *p + micro_dt * fv;
            }
            traj.micro_steps_total += 1;
            traj.evaluations += 1;
        }
        let g = (system.g)(&phi, &psi);
        traj.evaluations += 1;
        for (q, gv) in psi.iter_mut().zip(&g) {
            *q += macro_dt * gv;
        }
        let t = step as f64 * macro_dt;
        if ensure_finite(&phi, "HMM phi").is_err() || ensure_finite(&psi, "HMM psi").is_err() {
            return Err(Error::Divergence {
                t,
                hint: "HMM state became non-finite; reduce macro_dt".into(),
            });
        }
        traj.macro_steps += 1;
        traj.times.push(t);
        traj.phi.push(phi.clone());
        traj.psi.push(psi.clone());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::linear_exact;
    use std::sync::Arc;

    #[test]
    fn micro_iterations_match_closed_form() {
        let sys = FastSlowSystem::new(
            Arc::new(|psi: &[f64]| psi.iter().map(|v| v.sin() + 0.5).collect()),
            Arc::new(|_: &[f64], _: &[f64]| vec![0.0, 0.0]),
            0.1,
            2,
        )
        .unwrap();
        let psi = [0.7, -1.3];
        let phi0 = [2.0, -0.4];
        for micro_dt in [0.1, 0.5, 0.9] {
            for k in [1, 3, 20] {
                let tr = hmm_solve(&sys, &psi, &phi0, HmmSettings { macro_dt: 0.1, micro_dt, k, n: 1 }).unwrap();
                let dbar = micro_contraction(micro_dt, k);
                let f = (sys.f)(&psi);
                for i in 0..2 {
                    let closed = dbar * phi0[i] + (1.0 - dbar) * f[i];
                    assert!((tr.phi[1][i] - closed).abs() <= 1e-12, "dt {micro_dt} K {k}");
                }
            }
        }
    }

    #[test]
    fn slow_manifold_decay() {
        let sys = FastSlowSystem::linear(1e-3).unwrap();
        let s = HmmSettings { macro_dt: 0.01, micro_dt: 0.5, k: 20, n: 100 };
        let tr = hmm_solve(&sys, &[1.0], &[1.0], s).unwrap();
        assert!((tr.final_psi()[0] - (-1f64).exp()).abs() < 1e-2);
        let err = tr.max_psi_error(|t| vec![linear_exact(1e-3, 1.0, 1.0, t).1]);
        assert!(err < 1e-2);
        assert_eq!(tr.evaluations, s.evaluations());
        assert_eq!((tr.macro_steps, tr.micro_steps_total), (100, 2000));
    }

    #[test]
    fn zero_slow_field_freezes_psi() {
        let sys = FastSlowSystem::new(
            Arc::new(|psi: &[f64]| psi.to_vec()),
            Arc::new(|_: &[f64], _: &[f64]| vec![0.0]),
            0.01,
            1,
        )
        .unwrap();
        let tr = hmm_solve(&sys, &[0.37], &[0.0], HmmSettings { macro_dt: 0.1, micro_dt: 0.5, k: 5, n: 30 }).unwrap();
        assert!(tr.psi.iter().all(|p| p[0] == 0.37));
    }

    #[test]
    fn settings_validated() {
        let sys = FastSlowSystem::linear(0.1).unwrap();
        let bad = HmmSettings { macro_dt: 1.0, micro_dt: 0.5, k: 1, n: 1 };
        assert!(hmm_solve(&sys, &[1.0], &[1.0], bad).is_err());
        let bad = HmmSettings { macro_dt: 0.1, micro_dt: 0.5, k: 0, n: 1 };
        assert!(hmm_solve(&sys, &[1.0], &[1.0], bad).is_err());
    }
}
