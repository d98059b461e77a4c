//! Central finite differences, the independent oracle for every analytic
//! gradient in the crate.

use crate::error::{Error, Result};
use crate::lem::{forward_sequence, LemGrads, LemParams, LemState};
use crate::numerics::TensorSet;
use crate::training::loss::{sequence_loss, LossKind, SequenceTarget};

/// Default relative step, `ε · max(1, |θ|)`, for the five-point stencil.
pub const DEFAULT_FD_EPSILON: f64 = 1e-3;

/// Central-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `(ℰ(θ+h) − ℰ(θ−h)) / 2h`, truncation `O(h²)`.
    ThreePoint,
    /// `(−ℰ(θ+2h) + 8ℰ(θ+h) − 8ℰ(θ−h) + ℰ(θ−2h)) / 12h`, truncation `O(h⁴)`.
    #[default]
    FivePoint,
}

/// Five-point central differences for every scalar of `params`, with
/// `h = epsilon · max(1, |θ|)`. `grads_like` supplies the output container.
pub fn central_differences<P, G, F>(params: &P, grads_like: G, epsilon: f64, loss: F) -> Result<G>
where
    P: TensorSet + Clone,
    G: TensorSet,
    F: Fn(&P) -> Result<f64>,
{
    central_differences_with(params, grads_like, epsilon, Stencil::FivePoint, loss)
}

pub fn central_differences_with<P, G, F>(
    params: &P,
    mut grads_like: G,
    epsilon: f64,
    stencil: Stencil,
    loss: F,
) -> Result<G>
where
    P: TensorSet + Clone,
    G: TensorSet,
    F: Fn(&P) -> Result<f64>,
{
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!(
            "finite-difference epsilon must be positive, got {epsilon}"
        )));
    }
    let shapes: Vec<usize> = params.tensor_slices().iter().map(|t| t.len()).collect();
    if shapes != grads_like.tensor_slices().iter().map(|t| t.len()).collect::<Vec<_>>() {
        return Err(Error::Shape("gradient container does not mirror parameters".into()));
    }
    let mut work = params.clone();
    let mut out = grads_like.tensor_slices_mut();
    for (ti, &len) in shapes.iter().enumerate() {
        for j in 0..len {
            let theta = params.tensor_slices()[ti][j];
            let h = epsilon * theta.abs().max(1.0);
            let mut at = |x: f64| -> Result<f64> {
                work.tensor_slices_mut()[ti][j] = x;
                loss(&work)
            };
            // divide by the step actually taken
            let span = (theta + h) - (theta - h);
            let value = match stencil {
                Stencil::ThreePoint => (at(theta + h)? - at(theta - h)?) / span,
                Stencil::FivePoint => {
                    let near = at(theta + h)? - at(theta - h)?;
                    let far = at(theta + 2.0 * h)? - at(theta - 2.0 * h)?;
                    (8.0 * near - far) / (6.0 * span)
                }
            };
            work.tensor_slices_mut()[ti][j] = theta;
            out[ti][j] = value;
        }
    }
    drop(out);
    Ok(grads_like)
}

/// Loss of one LEM sequence from the zero initial state.
pub fn lem_sequence_loss(
    params: &LemParams,
    inputs: &[Vec<f64>],
    target: SequenceTarget<'_>,
    kind: LossKind,
) -> Result<f64> {
    let (outputs, _) = forward_sequence(params, inputs, &LemState::zeros(params.hidden()))?;
    Ok(sequence_loss(kind, &outputs, target)?.0)
}

/// Finite-difference gradient of a LEM sequence loss, re-running the full
/// forward pass for every perturbation.
pub fn finite_difference_gradient(
    params: &LemParams,
    inputs: &[Vec<f64>],
    target: SequenceTarget<'_>,
    kind: LossKind,
    epsilon: f64,
) -> Result<LemGrads> {
    central_differences(params, params.zero_grads(), epsilon, |p| {
        lem_sequence_loss(p, inputs, target, kind)
    })
}
