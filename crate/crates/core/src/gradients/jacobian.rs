//! State Jacobians `∂X_ℓ/∂X_{ℓ-1} = I + Δt E + Δt² F` in the interleaved
//! layout `X = [z¹, y¹, …, z^d, y^d]`, and the per-step decomposition of a
//! loss gradient built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lem::{LemParams, StepCache};
use crate::numerics::{sigma_hat, sigma_hat_prime, tanh_prime_from_value, Matrix};

#[inline]
fn zi(i: usize) -> usize {
    2 * i
}

#[inline]
fn yi(i: usize) -> usize {
    2 * i + 1
}

/// The first- and second-order parts `(E, F)` of one step's state Jacobian.
///
/// Derived directly from the update rule. Compared with the printed entry
/// tables, the `Wz` term of the `(z, y)` block carries `σ̂(A)` rather than
/// `σ̂'(A)`, and the `(y, z)` block of `F` carries `σ̂(A^j) tanh'(D^i)`; those
/// are the values the chain rule produces and the finite-difference check in
/// the tests confirms.
pub fn jacobian_parts(params: &LemParams, cache: &StepCache) -> (Matrix, Matrix) {
    let d = params.hidden();
    let mut e = Matrix::zeros(2 * d, 2 * d);
    let mut f = Matrix::zeros(2 * d, 2 * d);
    let y_prev = &cache.prev_state.y;
    let z_prev = &cache.prev_state.z;

    let sa: Vec<f64> = cache.a.iter().map(|&x| sigma_hat(x)).collect();
    let sb: Vec<f64> = cache.b.iter().map(|&x| sigma_hat(x)).collect();
    let dsa: Vec<f64> = cache.a.iter().map(|&x| sigma_hat_prime(x)).collect();
    let dsb: Vec<f64> = cache.b.iter().map(|&x| sigma_hat_prime(x)).collect();
    let dtc: Vec<f64> = cache.tanh_c.iter().map(|&t| tanh_prime_from_value(t)).collect();
    let dtd: Vec<f64> = cache.tanh_d.iter().map(|&t| tanh_prime_from_value(t)).collect();

    // ∂z^λ_ℓ / ∂y^j_{ℓ-1} divided by Δt, reused by the second-order block.
    let mut dz_dy = Matrix::zeros(d, d);
    for l in 0..d {
        let gate_term = (cache.tanh_c[l] - z_prev[l]) * dsa[l];
        for j in 0..d {
            dz_dy.set(l, j, params.w1.get(l, j) * gate_term + sa[l] * dtc[l] * params.wz.get(l, j));
        }
    }

    for i in 0..d {
        // z rows
        e.set(zi(i), zi(i), -sa[i]);
        for j in 0..d {
            e.set(zi(i), yi(j), dz_dy.get(i, j));
        }
        // y rows
        let outer = sb[i] * dtd[i];
        let gate_term = dsb[i] * (cache.tanh_d[i] - y_prev[i]);
        for j in 0..d {
            let wy = params.wy.get(i, j);
            e.set(yi(i), zi(j), wy * outer);
            f.set(yi(i), zi(j), -wy * outer * sa[j]);
            let mut ey = params.w2.get(i, j) * gate_term;
            if i == j {
                ey -= sb[i];
            }
            e.set(yi(i), yi(j), ey);
            let mut acc = 0.0;
            for l in 0..d {
                acc += params.wy.get(i, l) * dz_dy.get(l, j);
            }
            f.set(yi(i), yi(j), outer * acc);
        }
    }
    (e, f)
}

/// Full Jacobian `∂X_ℓ/∂X_{ℓ-1}` of the step recorded in `cache`.
pub fn state_jacobian(params: &LemParams, cache: &StepCache) -> Matrix {
    let (e, f) = jacobian_parts(params, cache);
    let dt = params.delta_t;
    let n = e.rows();
    let mut j = Matrix::identity(n);
    for (out, (ev, fv)) in j
        .as_mut_slice()
        .iter_mut()
        .zip(e.as_slice().iter().zip(f.as_slice()))
    {
        *out += dt * ev + dt * dt * fv;
    }
    j
}

/// One scalar recurrent weight, 0-based `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "matrix", rename_all = "snake_case")]
pub enum ThetaEntry {
    Wz { alpha: usize, beta: usize },
    Wy { alpha: usize, beta: usize },
}

impl ThetaEntry {
    fn indices(&self) -> (usize, usize) {
        match *self {
            ThetaEntry::Wz { alpha, beta } | ThetaEntry::Wy { alpha, beta } => (alpha, beta),
        }
    }
}

/// `∂⁺X_k/∂θ`: derivative of the step-`k` state with the previous state held
/// fixed (interleaved layout).
///
/// For `(W_y)_{α,β}` the only non-zero entry is `Δt σ̂(B^α) tanh'(D^α) z^β_k`
/// in the `y^α` slot. For `(W_z)_{α,β}` the `z^α` slot carries
/// `Δt σ̂(A^α) tanh'(C^α) y^β_{k-1}`, and because `y_k` reads the new `z_k`
/// every `y^i` slot carries `Δt σ̂(B^i) tanh'(D^i) (W_y)_{i,α}` times it.
pub fn partial_state_derivative(params: &LemParams, cache: &StepCache, theta: ThetaEntry) -> Result<Vec<f64>> {
    let d = params.hidden();
    let (alpha, beta) = theta.indices();
    if alpha >= d || beta >= d {
        return Err(Error::Index(format!(
            "theta entry ({alpha}, {beta}) outside a {d}x{d} matrix"
        )));
    }
    let mut out = vec![0.0; 2 * d];
    let y_slot = |i: usize| cache.gate_dt_bar[i] * tanh_prime_from_value(cache.tanh_d[i]);
    match theta {
        ThetaEntry::Wy { .. } => {
            out[yi(alpha)] = y_slot(alpha) * cache.next_state.z[beta];
        }
        ThetaEntry::Wz { .. } => {
            let dz = cache.gate_dt[alpha]
                * tanh_prime_from_value(cache.tanh_c[alpha])
                * cache.prev_state.y[beta];
            out[zi(alpha)] = dz;
            for i in 0..d {
                out[yi(i)] = y_slot(i) * params.wy.get(i, alpha) * dz;
            }
        }
    }
    Ok(out)
}

/// `∂ℰ_n/∂X_n` for the identity readout `ω_n = y_n` and
/// `ℰ_n = ½ Σ_i (y^i_n − ȳ^i_n)²`.
pub fn loss_state_gradient(cache: &StepCache, target_y: &[f64]) -> Result<Vec<f64>> {
    let y = &cache.next_state.y;
    if target_y.len() != y.len() {
        return Err(Error::Shape(format!(
            "target width {} for {} hidden units",
            target_y.len(),
            y.len()
        )));
    }
    let mut g = vec![0.0; 2 * y.len()];
    for i in 0..y.len() {
        g[yi(i)] = y[i] - target_y[i];
    }
    Ok(g)
}

/// Contribution of step `k` to `∂ℰ_n/∂θ` (1-based `1 ≤ k ≤ n ≤ N`):
/// `∂ℰ_n/∂X_n · Π_{ℓ=k+1}^{n} ∂X_ℓ/∂X_{ℓ-1} · ∂⁺X_k/∂θ`.
///
/// Summing over `k = 1..=n` reproduces the full derivative of `ℰ_n`.
pub fn gradient_contribution(
    params: &LemParams,
    caches: &[StepCache],
    target_y: &[f64],
    n: usize,
    k: usize,
    theta: ThetaEntry,
) -> Result<f64> {
    if k == 0 || k > n || n > caches.len() {
        return Err(Error::Index(format!(
            "need 1 <= k <= n <= N, got k = {k}, n = {n}, N = {}",
            caches.len()
        )));
    }
    let mut row = loss_state_gradient(&caches[n - 1], target_y)?;
    for l in (k + 1..=n).rev() {
        row = row_times(&row, &state_jacobian(params, &caches[l - 1]));
    }
    let partial = partial_state_derivative(params, &caches[k - 1], theta)?;
    Ok(crate::numerics::dot(&row, &partial))
}

/// All contributions `k = 1..=n` for one `n`, sharing the Jacobian products.
pub fn gradient_contributions(
    params: &LemParams,
    caches: &[StepCache],
    target_y: &[f64],
    n: usize,
    theta: ThetaEntry,
) -> Result<Vec<f64>> {
    if n == 0 || n > caches.len() {
        return Err(Error::Index(format!("n = {n} outside 1..={}", caches.len())));
    }
    let mut row = loss_state_gradient(&caches[n - 1], target_y)?;
    let mut out = vec![0.0; n];
    for k in (1..=n).rev() {
        let partial = partial_state_derivative(params, &caches[k - 1], theta)?;
        out[k - 1] = crate::numerics::dot(&row, &partial);
        if k > 1 {
            row = row_times(&row, &state_jacobian(params, &caches[k - 1]));
        }
    }
    Ok(out)
}

/// Bound on one contribution for `(W_y)`-type entries under the small-step
/// assumption: `Δt √(3kΔt) (X̂ + √(3nΔt)) (1 + 2(n−k)(1+3η)Δt)`.
pub fn contribution_bound(delta_t: f64, n: usize, k: usize, x_hat: f64, eta: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    delta_t
        * (3.0 * k * delta_t).sqrt()
        * (x_hat + (3.0 * n * delta_t).sqrt())
        * (1.0 + 2.0 * (n - k) * (1.0 + 3.0 * eta) * delta_t)
}

fn row_times(row: &[f64], m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    m.matvec_t_acc(row, &mut out);
    out
}

/// Product `Π_{ℓ=k+1}^{n} ∂X_ℓ/∂X_{ℓ-1}` (1-based, latest step on the left).
pub fn jacobian_product(params: &LemParams, caches: &[StepCache], n: usize, k: usize) -> Result<Matrix> {
    if k > n || n > caches.len() {
        return Err(Error::Index(format!("need k <= n <= N, got k = {k}, n = {n}")));
    }
    let mut acc = Matrix::identity(2 * params.hidden());
    for l in k + 1..=n {
        acc = state_jacobian(params, &caches[l - 1]).matmul(&acc)?;
    }
    Ok(acc)
}
