use serde::{Deserialize, Serialize};

use super::backward::backward;
use crate::error::{Error, Result};
use crate::lem::{forward_sequence, LemGrads, LemParams, LemState};
use crate::numerics::Matrix;
use crate::training::loss::mse_loss;

/// The two gradient upper bounds for the identity-readout MSE loss with
/// `T = NΔt = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Bounds {
    pub eta: f64,
    pub x_hat: f64,
    /// `(3 + √3 X̂)(3 + 6η)`, valid for sufficiently small `Δt`.
    pub small_dt: f64,
    /// `(3 + √3 X̂)(1 + e^{1+3η})`, valid for any `Δt`.
    pub unconditional: f64,
}

pub fn bounds_from(eta: f64, x_hat: f64) -> Prop2Bounds {
    let lead = 3.0 + 3f64.sqrt() * x_hat;
    Prop2Bounds {
        eta,
        x_hat,
        small_dt: lead * (3.0 + 6.0 * eta),
        unconditional: lead * (1.0 + (1.0 + 3.0 * eta).exp()),
    }
}

pub fn prop2_bound(params: &LemParams, x_hat: f64) -> Prop2Bounds {
    bounds_from(params.eta(), x_hat)
}

/// Analytic gradients of one sequence checked against both bounds.
#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    #[serde(skip)]
    pub grads: LemGrads,
    pub eta: f64,
    pub x_hat: f64,
    pub bound_small_dt: f64,
    pub bound_unconditional: f64,
    pub empirical_max_abs: f64,
    pub pass: bool,
    pub pass_small_dt: bool,
}

/// Gradients of `ℰ = (1/N) Σ_n ½‖y_n − ȳ_n‖²` for the identity readout,
/// compared against [`Prop2Bounds`]. `X̂` is the largest target magnitude.
pub fn gradient_report(params: &LemParams, inputs: &[Vec<f64>], targets_y: &[Vec<f64>]) -> Result<GradientReport> {
    let d = params.hidden();
    if params.w_out != Matrix::identity(d) {
        return Err(Error::Config(
            "gradient bounds are stated for the identity readout (W_out = I)".into(),
        ));
    }
    let (outputs, caches) = forward_sequence(params, inputs, &LemState::zeros(d))?;
    let (_, out_grads) = mse_loss(&outputs, targets_y)?;
    let grads = backward(params, &caches, &out_grads)?;
    let x_hat = targets_y
        .iter()
        .flatten()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    let b = prop2_bound(params, x_hat);
    let empirical = grads.max_abs_cell();
    Ok(GradientReport {
        grads,
        eta: b.eta,
        x_hat,
        bound_small_dt: b.small_dt,
        bound_unconditional: b.unconditional,
        empirical_max_abs: empirical,
        pass: empirical <= b.unconditional,
        pass_small_dt: empirical <= b.small_dt,
    })
}
