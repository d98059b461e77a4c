use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub type FastMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type SlowMap = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// `φ' = (f(ψ) − φ)/τ`, `ψ' = g(φ, ψ)` with `φ, ψ ∈ R^m`.
#[derive(Clone)]
pub struct FastSlowSystem {
    pub f: FastMap,
    pub g: SlowMap,
    pub tau: f64,
    pub dim: usize,
}

impl fmt::Debug for FastSlowSystem {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("FastSlowSystem")
            .field("tau", &self.tau)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl FastSlowSystem {
    pub fn new(f: FastMap, g: SlowMap, tau: f64, dim: usize) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        if dim == 0 {
            return Err(Error::Shape("fast-slow system needs dim >= 1".into()));
        }
        Ok(Self { f, g, tau, dim })
    }

    /// Scalar test system `f(ψ) = ψ`, `g(φ, ψ) = −φ`.
    pub fn linear(tau: f64) -> Result<Self> {
        Self::new(Arc::new(|psi| psi.to_vec()), Arc::new(|phi, _| phi.iter().map(|v| -v).collect()), tau, 1)
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.f.clone(), self.g.clone(), tau, self.dim)
    }

    /// Right-hand side of the full system for the stacked state `[φ, ψ]`.
    pub fn rhs(&self, state: &[f64]) -> Vec<f64> {
        let (phi, psi) = state.split_at(self.dim);
        let f = (self.f)(psi);
        let mut out: Vec<f64> = phi.iter().zip(&f).map(|(p, fv)| (fv - p) / self.tau).collect();
        out.extend((self.g)(phi, psi));
        out
    }

    /// Largest observed difference quotient of `f` and `g` over random pairs
    /// of points in `[-radius, radius]^m`, as a finite Lipschitz sanity check.
    pub fn sampled_lipschitz(&self, radius: f64, samples: usize, seed: u64) -> Result<f64> {
        let draws = crate::numerics::seeded_uniform(-radius, radius, 4 * self.dim * samples, seed)?;
        let mut worst: f64 = 0.0;
        for chunk in draws.chunks(4 * self.dim) {
            let (a, rest) = chunk.split_at(self.dim);
            let (b, rest) = rest.split_at(self.dim);
            let (c, e) = rest.split_at(self.dim);
            let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            let dx = dist(a, b).max(dist(c, e));
            if dx == 0.0 {
                continue;
            }
            let df = dist(&(self.f)(a), &(self.f)(b));
            let dg = dist(&(self.g)(a, c), &(self.g)(b, e));
            worst = worst.max(df.max(dg) / dx);
        }
        if !worst.is_finite() {
            return Err(Error::NonFinite("Lipschitz estimate".into()));
        }
        Ok(worst)
    }
}

/// Sampled trajectory and work counters for a fast-slow solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FastSlowTrajectory {
    pub times: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub macro_steps: usize,
    pub micro_steps_total: usize,
    /// Evaluations of `f` plus evaluations of `g`.
    pub evaluations: usize,
}

impl FastSlowTrajectory {
    pub fn final_psi(&self) -> &[f64] {
        self.psi.last().map_or(&[], Vec::as_slice)
    }

    /// `max_n ‖ψ_n − ψ_exact(t_n)‖∞`.
    pub fn max_psi_error<F: Fn(f64) -> Vec<f64>>(&self, exact: F) -> f64 {
        self.times
            .iter()
            .zip(&self.psi)
            .map(|(&t, p)| {
                exact(t)
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Trajectory CSV: `time, phi0.., psi0..`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let m = self.phi.first().map_or(0, Vec::len);
        let mut header = vec!["time".to_string()];
        header.extend((0..m).map(|i| format!("phi{i}")));
        header.extend((0..m).map(|i| format!("psi{i}")));
        w.write_record(&header)?;
        for ((t, p), q) in self.times.iter().zip(&self.phi).zip(&self.psi) {
            let mut row = vec![t.to_string()];
            row.extend(p.iter().chain(q).map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exact `(φ(t), ψ(t))` for the linear test system, from the closed-form
/// exponential of `M = [[−1/τ, 1/τ], [−1, 0]]`.
pub fn linear_exact(tau: f64, phi0: f64, psi0: f64, t: f64) -> (f64, f64) {
    let m = [[-1.0 / tau, 1.0 / tau], [-1.0, 0.0]];
    let s = 0.5 * (m[0][0] + m[1][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let q2 = s * s - det;
    // exp(Mt) = e^{st} [c(t) I + k(t) (M − sI)]
    let n = [[m[0][0] - s, m[0][1]], [m[1][0], m[1][1] - s]];
    let apply = |c: f64, k: f64, scale: f64| {
        let x = scale * (c * phi0 + k * (n[0][0] * phi0 + n[0][1] * psi0));
        let y = scale * (c * psi0 + k * (n[1][0] * phi0 + n[1][1] * psi0));
        (x, y)
    };
    if q2 > 0.0 {
        // split into the two real modes to avoid cosh overflow
        let q = q2.sqrt();
        let (a1, b1) = apply(0.5, 0.5 / q, ((s + q) * t).exp());
        let (a2, b2) = apply(0.5, -0.5 / q, ((s - q) * t).exp());
        (a1 + a2, b1 + b2)
    } else if q2 < 0.0 {
        let w = (-q2).sqrt();
        apply((w * t).cos(), (w * t).sin() / w, (s * t).exp())
    } else {
        apply(1.0, t, (s * t).exp())
    }
}
