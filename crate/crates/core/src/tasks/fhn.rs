use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::batch::{BatchMeta, SequenceBatch, Targets};
use super::ode::{linspace, rk45_integrate};
use crate::error::{Error, Result};
use crate::numerics::rng_from_seed;

/// FitzHugh–Nagumo settings:
/// `v' = v − v³/3 − w + I_ext`, `w' = τ (v + a − b w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnConfig {
    pub tau: f64,
    pub i_ext: f64,
    pub a: f64,
    pub b: f64,
    pub t_end: f64,
    pub n_points: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
}

fn default_rel_tol() -> f64 {
    1e-9
}

fn default_abs_tol() -> f64 {
    1e-12
}

impl Default for FhnConfig {
    fn default() -> Self {
        Self {
            tau: 0.02,
            i_ext: 0.5,
            a: 0.7,
            b: 0.8,
            t_end: 400.0,
            n_points: 1000,
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
        }
    }
}

impl FhnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("FHN tau must be positive, got {}", self.tau)));
        }
        if self.n_points < 2 {
            return Err(Error::Config("FHN needs n_points >= 2".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config("FHN needs t_end > 0".into()));
        }
        Ok(())
    }

    pub fn rhs(&self, state: &[f64]) -> Vec<f64> {
        let (v, w) = (state[0], state[1]);
        vec![
            v - v * v * v / 3.0 - w + self.i_ext,
            self.tau * (v + self.a - self.b * w),
        ]
    }

    pub fn sample_times(&self) -> Vec<f64> {
        linspace(0.0, self.t_end, self.n_points)
    }

    /// `(v, w)` at every sample time from `(v0, w0)`.
    pub fn trajectory(&self, v0: f64, w0: f64) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let sol = rk45_integrate(
            |_, y| self.rhs(y),
            &[v0, w0],
            (0.0, self.t_end),
            self.rel_tol,
            self.abs_tol,
            &self.sample_times(),
        )?;
        Ok(sol.states)
    }
}

/// Trajectory regression sequences. Sequence `i` starts at `(c, 0)` with
/// `c ~ U(-1, 1)` drawn from seed `seed + i`; the input at step `j` is
/// `[t_j / t_end, c]` and the target is `(v, w)(t_j)`.
pub fn fhn_generate(config: &FhnConfig, count: usize, seed: u64) -> Result<SequenceBatch> {
    config.validate()?;
    if count == 0 {
        return Err(Error::Config("FHN needs count >= 1".into()));
    }
    let times = config.sample_times();
    type Sample = (Vec<Vec<f64>>, Vec<Vec<f64>>);
    let samples: Vec<Sample> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let c = rng_from_seed(seed.wrapping_add(i)).random_range(-1.0..1.0);
            let traj = config.trajectory(c, 0.0)?;
            let inputs = times.iter().map(|t| vec![t / config.t_end, c]).collect();
            Ok((inputs, traj))
        })
        .collect::<Result<_>>()?;
    let (inputs, targets): (Vec<_>, Vec<_>) = samples.into_iter().unzip();
    SequenceBatch::new(
        inputs,
        Targets::PerStep(targets),
        BatchMeta {
            task: "fhn".into(),
            n_steps: config.n_points,
            seed,
            config: serde_json::to_value(config)?,
        },
    )
}
