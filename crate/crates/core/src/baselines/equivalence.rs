use serde::Serialize;

use super::lstm::{lstm_forward_step, LstmParams, LstmState};
use crate::error::{Error, Result};
use crate::lem::{forward_step, LemParams, LemState};
use crate::numerics::{saturation_bias, Matrix};

/// A LEM cell and an LSTM cell whose trajectories coincide up to gate
/// saturation leakage, with `c_n ↔ z_n`, `h_n ↔ y_n`, `i_n = Δt_n`,
/// `f_n = 1 − Δt_n` and `o_n ≈ 1`.
///
/// The LEM side uses `Δt = 1`, `W2 = V2 = 0`, `b2 = b_∞`, `Wy = I`, `Vy = 0`,
/// `by = 0`. The LSTM side copies `(W1, V1, b1)` into the input gate, their
/// negation into the forget gate (`σ̂(−x) = 1 − σ̂(x)`), `(Wz, Vz, bz)` into
/// the candidate, and sets `Wo = Vo = 0`, `bo = b_∞`. Readouts are shared.
pub fn construct_equivalent_pair(
    d: usize,
    m: usize,
    seed: u64,
    saturation_tol: f64,
) -> Result<(LemParams, LstmParams)> {
    let b_inf = saturation_bias(saturation_tol)?;
    let mut lem = LemParams::init(d, m, 1, 1.0, seed)?;
    lem.w2 = Matrix::zeros(d, d);
    lem.v2 = Matrix::zeros(d, m);
    lem.b2 = vec![b_inf; d];
    lem.wy = Matrix::identity(d);
    lem.vy = Matrix::zeros(d, m);
    lem.by = vec![0.0; d];

    let negate = |x: &Matrix| {
        let mut y = x.clone();
        y.scale(-1.0);
        y
    };
    let mut lstm = LstmParams::zeros(d, m, 1)?;
    lstm.wi = lem.w1.clone();
    lstm.vi = lem.v1.clone();
    lstm.bi = lem.b1.clone();
    lstm.wf = negate(&lem.w1);
    lstm.vf = negate(&lem.v1);
    lstm.bf = lem.b1.iter().map(|b| -b).collect();
    lstm.w = lem.wz.clone();
    lstm.v = lem.vz.clone();
    lstm.b = lem.bz.clone();
    lstm.bo = vec![b_inf; d];
    lstm.w_out = lem.w_out.clone();
    Ok((lem, lstm))
}

/// Largest divergence between paired states over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub steps: usize,
    pub saturation_tol: f64,
    /// `max_n ‖y_n − h_n‖∞`
    pub max_hidden_divergence: f64,
    /// `max_n ‖z_n − c_n‖∞`
    pub max_cell_divergence: f64,
}

impl EquivalenceReport {
    pub fn max_divergence(&self) -> f64 {
        self.max_hidden_divergence.max(self.max_cell_divergence)
    }
}

/// Runs both members of a pair side by side from rest.
pub fn compare_trajectories(lem: &LemParams, lstm: &LstmParams, inputs: &[Vec<f64>], saturation_tol: f64) -> Result<EquivalenceReport> {
    if lem.dims() != lstm.dims() {
        return Err(Error::Shape(format!(
            "paired models differ in shape: {:?} vs {:?}",
            lem.dims(),
            lstm.dims()
        )));
    }
    let d = lem.hidden();
    let mut a = LemState::zeros(d);
    let mut b = LstmState::zeros(d);
    let mut report = EquivalenceReport {
        steps: inputs.len(),
        saturation_tol,
        max_hidden_divergence: 0.0,
        max_cell_divergence: 0.0,
    };
    for u in inputs {
        a = forward_step(lem, &a, u)?.0;
        b = lstm_forward_step(lstm, &b, u)?.0;
        for k in 0..d {
            report.max_hidden_divergence = report.max_hidden_divergence.max((a.y[k] - b.h[k]).abs());
            report.max_cell_divergence = report.max_cell_divergence.max((a.z[k] - b.c[k]).abs());
        }
    }
    Ok(report)
}
