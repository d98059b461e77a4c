use crate::error::{Error, Result};
use crate::lem::{LemGrads, LemParams, StepCache};
use crate::numerics::{sigma_hat_prime, tanh_prime_from_value};

/// Reverse-mode gradients of `Σ_n ℰ_n` given `dℰ/dω_n` for every step.
///
/// Within a step `y_n` depends on the freshly computed `z_n`, so the
/// `z`-adjoint picks up a `Wyᵀ` term before flowing back into the gates.
pub fn backward(params: &LemParams, caches: &[StepCache], target_grads: &[Vec<f64>]) -> Result<LemGrads> {
    if caches.len() != target_grads.len() {
        return Err(Error::Shape(format!(
            "backward: {} caches but {} output gradients",
            caches.len(),
            target_grads.len()
        )));
    }
    let (d, _, o) = params.dims();
    if let Some(g) = target_grads.iter().find(|g| g.len() != o) {
        return Err(Error::Shape(format!(
            "backward: output gradient of width {} for {o} outputs",
            g.len()
        )));
    }
    let dt = params.delta_t;
    let mut grads = params.zero_grads();
    let mut gy = vec![0.0; d];
    let mut gz = vec![0.0; d];
    let mut g_d = vec![0.0; d];
    let mut g_a = vec![0.0; d];
    let mut g_b = vec![0.0; d];
    let mut g_c = vec![0.0; d];

    for (cache, g_out) in caches.iter().zip(target_grads).rev() {
        let y_new = &cache.next_state.y;
        let z_new = &cache.next_state.z;
        let y_prev = &cache.prev_state.y;
        let z_prev = &cache.prev_state.z;
        let u = &cache.u;

        if g_out.iter().any(|&v| v != 0.0) {
            params.w_out.matvec_t_acc(g_out, &mut gy);
            grads.w_out.add_outer(g_out, y_new);
        }

        // y_n = (1 - Δt̄) y_{n-1} + Δt̄ tanh(D)
        for i in 0..d {
            let gate = cache.gate_dt_bar[i];
            g_d[i] = gy[i] * gate * tanh_prime_from_value(cache.tanh_d[i]);
            g_b[i] = gy[i] * (cache.tanh_d[i] - y_prev[i]) * dt * sigma_hat_prime(cache.b[i]);
        }
        // D = Wy z_n + Vy u + by
        params.wy.matvec_t_acc(&g_d, &mut gz);
        grads.wy.add_outer(&g_d, z_new);
        grads.vy.add_outer(&g_d, u);
        crate::numerics::axpy(1.0, &g_d, &mut grads.by);

        // z_n = (1 - Δt) z_{n-1} + Δt tanh(C)
        for i in 0..d {
            let gate = cache.gate_dt[i];
            g_c[i] = gz[i] * gate * tanh_prime_from_value(cache.tanh_c[i]);
            g_a[i] = gz[i] * (cache.tanh_c[i] - z_prev[i]) * dt * sigma_hat_prime(cache.a[i]);
        }

        let mut gy_prev: Vec<f64> = (0..d).map(|i| gy[i] * (1.0 - cache.gate_dt_bar[i])).collect();
        let gz_prev: Vec<f64> = (0..d).map(|i| gz[i] * (1.0 - cache.gate_dt[i])).collect();

        params.w1.matvec_t_acc(&g_a, &mut gy_prev);
        params.w2.matvec_t_acc(&g_b, &mut gy_prev);
        params.wz.matvec_t_acc(&g_c, &mut gy_prev);

        grads.w1.add_outer(&g_a, y_prev);
        grads.w2.add_outer(&g_b, y_prev);
        grads.wz.add_outer(&g_c, y_prev);
        grads.v1.add_outer(&g_a, u);
        grads.v2.add_outer(&g_b, u);
        grads.vz.add_outer(&g_c, u);
        crate::numerics::axpy(1.0, &g_a, &mut grads.b1);
        crate::numerics::axpy(1.0, &g_b, &mut grads.b2);
        crate::numerics::axpy(1.0, &g_c, &mut grads.bz);

        gy = gy_prev;
        gz = gz_prev;
    }
    Ok(grads)
}
