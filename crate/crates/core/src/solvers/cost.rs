use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hmm::{hmm_solve, HmmSettings};
use super::reference::{reference_stiff_solve_with, Scheme};
use super::system::{FastSlowSystem, FastSlowTrajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSettings {
    pub t_end: f64,
    pub psi0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub micro_dt: f64,
    pub k: usize,
    /// First macro step tried; halved until the target is met.
    pub macro_dt_start: f64,
    /// Largest evaluation count either method may spend on one attempt.
    pub evaluation_budget: usize,
    pub reference_scheme: Scheme,
}

impl Default for CostSettings {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            psi0: vec![1.0],
            phi0: vec![1.0],
            micro_dt: 0.5,
            k: 20,
            macro_dt_start: 0.2,
            evaluation_budget: 20_000_000,
            reference_scheme: Scheme::ForwardEuler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodCost {
    /// Macro step for HMM, fine step for the reference.
    pub step: f64,
    pub evaluations: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CostOutcome {
    Reached(MethodCost),
    Unreachable { reason: String },
}

impl CostOutcome {
    pub fn evaluations(&self) -> Option<usize> {
        match self {
            CostOutcome::Reached(c) => Some(c.evaluations),
            CostOutcome::Unreachable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub tau: f64,
    pub hmm: CostOutcome,
    pub reference: CostOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub target_accuracy: f64,
    pub settings: CostSettings,
    pub rows: Vec<CostRow>,
}

impl CostTable {
    /// Largest over smallest HMM evaluation count among rows that reached
    /// the target.
    pub fn hmm_spread(&self) -> Option<f64> {
        spread(self.rows.iter().filter_map(|r| r.hmm.evaluations()))
    }

    /// Reference evaluation ratio between consecutive rows.
    pub fn reference_ratios(&self) -> Vec<Option<f64>> {
        self.rows
            .windows(2)
            .map(|w| match (w[0].reference.evaluations(), w[1].reference.evaluations()) {
                (Some(a), Some(b)) => Some(b as f64 / a as f64),
                _ => None,
            })
            .collect()
    }
}

fn spread(values: impl Iterator<Item = usize>) -> Option<f64> {
    let v: Vec<usize> = values.collect();
    let (lo, hi) = (v.iter().min()?, v.iter().max()?);
    Some(*hi as f64 / *lo as f64)
}

/// Dense RK4 solution used as ground truth, sampled by linear interpolation.
pub struct Truth {
    traj: FastSlowTrajectory,
}

impl Truth {
    pub fn compute(system: &FastSlowSystem, settings: &CostSettings) -> Result<Self> {
        let dt = (system.tau / 10.0).min(1e-3);
        let traj = reference_stiff_solve_with(system, &settings.psi0, &settings.phi0, settings.t_end, dt, Scheme::Rk4)?;
        Ok(Self { traj })
    }

    pub fn psi(&self, t: f64) -> Vec<f64> {
        let times = &self.traj.times;
        let j = times.partition_point(|&s| s < t).clamp(1, times.len() - 1);
        let (t0, t1) = (times[j - 1], times[j]);
        let w = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 1.0 };
        self.traj.psi[j - 1]
            .iter()
            .zip(&self.traj.psi[j])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }
}

/// Cheapest HMM run, halving the macro step from `macro_dt_start`, whose
/// ψ-trajectory error against `truth` is within `target`.
pub fn hmm_cost(system: &FastSlowSystem, truth: &Truth, target: f64, settings: &CostSettings) -> Result<MethodCost> {
    let mut macro_dt = settings.macro_dt_start;
    loop {
        let n = (settings.t_end / macro_dt).round().max(1.0) as usize;
        let hs = HmmSettings {
            macro_dt: settings.t_end / n as f64,
            micro_dt: settings.micro_dt,
            k: settings.k,
            n,
        };
        if hs.evaluations() > settings.evaluation_budget {
            return Err(Error::Budget {
                target,
                budget: settings.evaluation_budget,
            });
        }
        let tr = hmm_solve(system, &settings.psi0, &settings.phi0, hs)?;
        let error = tr.max_psi_error(|t| truth.psi(t));
        if error <= target {
            return Ok(MethodCost {
                step: hs.macro_dt,
                evaluations: tr.evaluations,
                error,
            });
        }
        macro_dt /= 2.0;
    }
}

/// Cheapest explicit reference run, halving from `dt_fine = τ/2`.
pub fn reference_cost(system: &FastSlowSystem, truth: &Truth, target: f64, settings: &CostSettings) -> Result<MethodCost> {
    let mut dt = system.tau / 2.0;
    loop {
        let steps = (settings.t_end / dt).ceil() as usize;
        let per_step = match settings.reference_scheme {
            Scheme::ForwardEuler => 2,
            Scheme::Rk4 => 8,
        };
        if steps.saturating_mul(per_step) > settings.evaluation_budget {
            return Err(Error::Budget {
                target,
                budget: settings.evaluation_budget,
            });
        }
        match reference_stiff_solve_with(
            system,
            &settings.psi0,
            &settings.phi0,
            settings.t_end,
            dt,
            settings.reference_scheme,
        ) {
            Ok(tr) => {
                let error = tr.max_psi_error(|t| truth.psi(t));
                if error <= target {
                    return Ok(MethodCost {
                        step: dt,
                        evaluations: tr.evaluations,
                        error,
                    });
                }
            }
            Err(Error::Divergence { .. }) => {}
            Err(e) => return Err(e),
        }
        dt /= 2.0;
    }
}

fn outcome(r: Result<MethodCost>) -> Result<CostOutcome> {
    match r {
        Ok(c) => Ok(CostOutcome::Reached(c)),
        Err(e @ Error::Budget { .. }) => Ok(CostOutcome::Unreachable { reason: e.to_string() }),
        Err(e) => Err(e),
    }
}

/// For every `τ`, the cheapest HMM and reference settings that reach
/// `target_accuracy` on the ψ-trajectory. A method that cannot reach it within
/// the evaluation budget is reported as unreachable for that row.
pub fn cost_comparison(system: &FastSlowSystem, tau_list: &[f64], target_accuracy: f64) -> Result<CostTable> {
    cost_comparison_with(system, tau_list, target_accuracy, &CostSettings::default())
}

pub fn cost_comparison_with(
    system: &FastSlowSystem,
    tau_list: &[f64],
    target_accuracy: f64,
    settings: &CostSettings,
) -> Result<CostTable> {
    if !(target_accuracy > 0.0) {
        return Err(Error::Domain("target accuracy must be positive".into()));
    }
    if let Some(t) = tau_list.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Domain(format!("tau must lie in (0, 1], got {t}")));
    }
    let rows = tau_list
        .par_iter()
        .map(|&tau| {
            let sys = system.with_tau(tau)?;
            let truth = Truth::compute(&sys, settings)?;
            Ok(CostRow {
                tau,
                hmm: outcome(hmm_cost(&sys, &truth, target_accuracy, settings))?,
                reference: outcome(reference_cost(&sys, &truth, target_accuracy, settings))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CostTable {
        target_accuracy,
        settings: settings.clone(),
        rows,
    })
}
