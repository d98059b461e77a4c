use serde::{Deserialize, Serialize};

use super::params::LemParams;
use crate::error::{ensure_finite, Error, Result};
use crate::numerics::sigma_hat;

/// Hidden state `(y, z)` of a LEM cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemState {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl LemState {
    pub fn zeros(d: usize) -> Self {
        Self {
            y: vec![0.0; d],
            z: vec![0.0; d],
        }
    }

    /// Interleaved layout `[z¹, y¹, …, z^d, y^d]`.
    pub fn interleaved(&self) -> Vec<f64> {
        self.z
            .iter()
            .zip(&self.y)
            .flat_map(|(&z, &y)| [z, y])
            .collect()
    }

    pub fn from_interleaved(x: &[f64]) -> Self {
        let z = x.iter().step_by(2).copied().collect();
        let y = x.iter().skip(1).step_by(2).copied().collect();
        Self { y, z }
    }

    pub fn max_abs(&self) -> f64 {
        self.y
            .iter()
            .chain(&self.z)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Everything one step needs for reverse-mode differentiation.
///
/// `a`, `b`, `c` are evaluated at the previous state; `d` at the new `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCache {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    /// `Δt · σ̂(A)`
    pub gate_dt: Vec<f64>,
    /// `Δt · σ̂(B)`
    pub gate_dt_bar: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub tanh_d: Vec<f64>,
    pub u: Vec<f64>,
    pub prev_state: LemState,
    pub next_state: LemState,
}

fn affine(
    w: &crate::numerics::Matrix,
    x: &[f64],
    v: &crate::numerics::Matrix,
    u: &[f64],
    b: &[f64],
) -> Vec<f64> {
    let mut out = b.to_vec();
    w.matvec_acc(x, &mut out);
    v.matvec_acc(u, &mut out);
    out
}

/// One IMEX step: gates from `y_{n-1}`, then `z_n`, then `y_n` from the new
/// `z_n`.
pub fn forward_step(params: &LemParams, state: &LemState, u: &[f64]) -> Result<(LemState, StepCache)> {
    let (d, m, _) = params.dims();
    if u.len() != m || state.y.len() != d || state.z.len() != d {
        return Err(Error::Shape(format!(
            "forward_step: expected input {m} and state {d}, got input {} and state ({}, {})",
            u.len(),
            state.y.len(),
            state.z.len()
        )));
    }
    ensure_finite(u, "LEM input")?;
    ensure_finite(&state.y, "LEM state y")?;
    ensure_finite(&state.z, "LEM state z")?;

    let dt = params.delta_t;
    let y_prev = &state.y;
    let z_prev = &state.z;

    let a = affine(&params.w1, y_prev, &params.v1, u, &params.b1);
    let b = affine(&params.w2, y_prev, &params.v2, u, &params.b2);
    let c = affine(&params.wz, y_prev, &params.vz, u, &params.bz);

    let gate_dt: Vec<f64> = a.iter().map(|&x| dt * sigma_hat(x)).collect();
    let gate_dt_bar: Vec<f64> = b.iter().map(|&x| dt * sigma_hat(x)).collect();
    let tanh_c: Vec<f64> = c.iter().map(|x| x.tanh()).collect();

    let z: Vec<f64> = (0..d)
        .map(|i| (1.0 - gate_dt[i]) * z_prev[i] + gate_dt[i] * tanh_c[i])
        .collect();

    let dd = affine(&params.wy, &z, &params.vy, u, &params.by);
    let tanh_d: Vec<f64> = dd.iter().map(|x| x.tanh()).collect();
    let y: Vec<f64> = (0..d)
        .map(|i| (1.0 - gate_dt_bar[i]) * y_prev[i] + gate_dt_bar[i] * tanh_d[i])
        .collect();

    let next = LemState { y, z };
    ensure_finite(&next.y, "LEM state y")?;
    ensure_finite(&next.z, "LEM state z")?;
    let cache = StepCache {
        a,
        b,
        c,
        d: dd,
        gate_dt,
        gate_dt_bar,
        tanh_c,
        tanh_d,
        u: u.to_vec(),
        prev_state: state.clone(),
        next_state: next.clone(),
    };
    Ok((next, cache))
}

/// Runs the cell over `inputs`, returning readouts `ω_n = W_out y_n` and the
/// per-step caches.
pub fn forward_sequence(
    params: &LemParams,
    inputs: &[Vec<f64>],
    init: &LemState,
) -> Result<(Vec<Vec<f64>>, Vec<StepCache>)> {
    if inputs.is_empty() {
        return Err(Error::Shape("forward_sequence: empty input sequence".into()));
    }
    let mut state = init.clone();
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut caches = Vec::with_capacity(inputs.len());
    for u in inputs {
        let (next, cache) = forward_step(params, &state, u)?;
        outputs.push(params.w_out.matvec(&next.y)?);
        caches.push(cache);
        state = next;
    }
    Ok((outputs, caches))
}

/// Hidden-state trajectory only, without readouts or caches.
pub fn state_trajectory(
    params: &LemParams,
    inputs: &[Vec<f64>],
    init: &LemState,
) -> Result<Vec<LemState>> {
    let mut state = init.clone();
    let mut out = Vec::with_capacity(inputs.len());
    for u in inputs {
        state = forward_step(params, &state, u)?.0;
        out.push(state.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{saturation_bias, seeded_uniform, sigma_hat};

    fn random_inputs(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
        seeded_uniform(-1.0, 1.0, n * m, seed)
            .unwrap()
            .chunks(m)
            .map(<[f64]>::to_vec)
            .collect()
    }

    #[test]
    fn zero_model_stays_at_rest() {
        let p = LemParams::zeros(3, 2, 1, 1.0).unwrap();
        let (s, cache) = forward_step(&p, &LemState::zeros(3), &[0.0, 0.0]).unwrap();
        assert_eq!(s, LemState::zeros(3));
        assert!(cache.gate_dt.iter().all(|&g| g == 0.5));
        assert!(cache.gate_dt_bar.iter().all(|&g| g == 0.5));
    }

    #[test]
    fn saturated_gates_drive_states_to_one() {
        let mut p = LemParams::zeros(3, 1, 1, 1.0).unwrap();
        let b_inf = saturation_bias(1e-12).unwrap();
        p.b1 = vec![b_inf; 3];
        p.b2 = vec![b_inf; 3];
        p.bz = vec![20.0; 3];
        p.by = vec![20.0; 3];
        let (s, _) = forward_step(&p, &LemState::zeros(3), &[0.0]).unwrap();
        for i in 0..3 {
            assert!((s.z[i] - 1.0).abs() < 1e-8);
            assert!((s.y[i] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn y_update_uses_new_z() {
        // With zero previous state only the fresh z can feed y through Wy.
        let mut p = LemParams::zeros(1, 1, 1, 1.0).unwrap();
        p.bz = vec![1.0];
        p.wy = crate::numerics::Matrix::identity(1);
        let (s, c) = forward_step(&p, &LemState::zeros(1), &[0.0]).unwrap();
        let z = 0.5 * 1f64.tanh();
        assert_eq!(s.z[0], z);
        assert_eq!(c.d[0], z);
        assert_eq!(s.y[0], 0.5 * z.tanh());
    }

    #[test]
    fn proof_bound_on_random_model() {
        let p = LemParams::init(8, 3, 1, 0.5, 17).unwrap();
        let inputs = random_inputs(100, 3, 18);
        let traj = state_trajectory(&p, &inputs, &LemState::zeros(8)).unwrap();
        for (n, s) in traj.iter().enumerate() {
            let t = (n + 1) as f64 * 0.5;
            assert!(s.max_abs() <= (t * (1.0 + 2.0 * 0.5)).sqrt());
        }
    }

    #[test]
    fn gates_lie_strictly_inside_zero_dt() {
        let p = LemParams::init(6, 2, 1, 0.3, 4).unwrap();
        let (_, caches) = forward_sequence(&p, &random_inputs(50, 2, 5), &LemState::zeros(6)).unwrap();
        for c in &caches {
            for &g in c.gate_dt.iter().chain(&c.gate_dt_bar) {
                assert!(g > 0.0 && g < 0.3);
            }
        }
    }

    #[test]
    fn constant_gates_in_two_scale_reduction() {
        let mut p = LemParams::init(4, 2, 1, 0.7, 9).unwrap();
        for w in [&mut p.w1, &mut p.w2, &mut p.v1, &mut p.v2] {
            w.scale(0.0);
        }
        p.b1 = vec![-0.4; 4];
        p.b2 = vec![1.3; 4];
        let (_, caches) = forward_sequence(&p, &random_inputs(30, 2, 1), &LemState::zeros(4)).unwrap();
        for c in &caches {
            assert!(c.gate_dt.iter().all(|&g| g == 0.7 * sigma_hat(-0.4)));
            assert!(c.gate_dt_bar.iter().all(|&g| g == 0.7 * sigma_hat(1.3)));
        }
    }

    #[test]
    fn replaying_caches_is_bit_exact() {
        let p = LemParams::init(5, 3, 2, 0.4, 2).unwrap();
        let (_, caches) = forward_sequence(&p, &random_inputs(40, 3, 3), &LemState::zeros(5)).unwrap();
        for c in &caches {
            let (next, _) = forward_step(&p, &c.prev_state, &c.u).unwrap();
            assert_eq!(next, c.next_state);
        }
    }

    #[test]
    fn single_step_sequence_matches_step_and_readout() {
        let p = LemParams::init(4, 2, 3, 0.9, 7).unwrap();
        let u = vec![0.3, -0.8];
        let (out, _) = forward_sequence(&p, std::slice::from_ref(&u), &LemState::zeros(4)).unwrap();
        let (s, _) = forward_step(&p, &LemState::zeros(4), &u).unwrap();
        assert_eq!(out[0], p.w_out.matvec(&s.y).unwrap());
    }

    #[test]
    fn zero_readout_gives_zero_outputs() {
        let mut p = LemParams::init(4, 2, 3, 0.9, 7).unwrap();
        p.w_out.scale(0.0);
        let (out, _) = forward_sequence(&p, &random_inputs(10, 2, 0), &LemState::zeros(4)).unwrap();
        assert!(out.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn nonfinite_input_is_rejected() {
        let p = LemParams::init(2, 1, 1, 0.5, 0).unwrap();
        assert!(matches!(
            forward_step(&p, &LemState::zeros(2), &[f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            forward_step(&p, &LemState::zeros(2), &[0.0, 1.0]),
            Err(Error::Shape(_))
        ));
        assert!(forward_sequence(&p, &[], &LemState::zeros(2)).is_err());
    }

    #[test]
    fn interleaving_roundtrip() {
        let s = LemState {
            y: vec![1.0, 2.0],
            z: vec![3.0, 4.0],
        };
        assert_eq!(s.interleaved(), vec![3.0, 1.0, 4.0, 2.0]);
        assert_eq!(LemState::from_interleaved(&s.interleaved()), s);
    }
}
