//! Exact backpropagation through time for LEM, the analytic state Jacobian,
//! per-step gradient contributions, the gradient upper bounds, and a
//! central-difference oracle.

mod backward;
mod bounds;
mod fd;
mod jacobian;

pub use backward::backward;
pub use bounds::{bounds_from, gradient_report, prop2_bound, GradientReport, Prop2Bounds};
pub use fd::{
    central_differences, central_differences_with, finite_difference_gradient, lem_sequence_loss, Stencil,
    DEFAULT_FD_EPSILON,
};
pub use jacobian::{
    contribution_bound, gradient_contribution, gradient_contributions, jacobian_parts, jacobian_product,
    loss_state_gradient, partial_state_derivative, state_jacobian, ThetaEntry,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lem::{forward_sequence, forward_step, LemParams, LemState};
    use crate::numerics::{max_relative_error, seeded_uniform, Matrix};
    use crate::training::loss::{sequence_loss, LossKind, SequenceTarget};

    fn seq(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
        seeded_uniform(-1.0, 1.0, n * m, seed)
            .unwrap()
            .chunks(m)
            .map(<[f64]>::to_vec)
            .collect()
    }

    fn analytic(p: &LemParams, inputs: &[Vec<f64>], target: SequenceTarget<'_>, kind: LossKind) -> crate::lem::LemGrads {
        let (out, caches) = forward_sequence(p, inputs, &LemState::zeros(p.hidden())).unwrap();
        let (_, g) = sequence_loss(kind, &out, target).unwrap();
        backward(p, &caches, &g).unwrap()
    }

    #[test]
    fn zero_output_gradients_give_zero() {
        let p = LemParams::init(3, 2, 2, 0.5, 1).unwrap();
        let (_, caches) = forward_sequence(&p, &seq(6, 2, 2), &LemState::zeros(3)).unwrap();
        let g = backward(&p, &caches, &vec![vec![0.0; 2]; 6]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let p = LemParams::init(3, 2, 2, 0.5, 1).unwrap();
        let (_, caches) = forward_sequence(&p, &seq(6, 2, 2), &LemState::zeros(3)).unwrap();
        assert!(matches!(backward(&p, &caches, &vec![vec![0.0; 2]; 5]), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let p = LemParams::init(4, 2, 3, 0.6, 10).unwrap();
        let inputs = seq(10, 2, 11);
        let targets = seq(10, 3, 12);
        let t = SequenceTarget::PerStep(&targets);
        let a = analytic(&p, &inputs, t, LossKind::Mse);
        let fd = finite_difference_gradient(&p, &inputs, t, LossKind::Mse, DEFAULT_FD_EPSILON).unwrap();
        let err = max_relative_error(&a, &fd, 1e-8);
        assert!(err <= 1e-6, "max relative error {err:e}");
    }

    #[test]
    fn cross_entropy_backward_matches_finite_differences() {
        let p = LemParams::init(5, 3, 4, 1.0, 20).unwrap();
        let inputs = seq(8, 3, 21);
        let t = SequenceTarget::Class(2);
        let a = analytic(&p, &inputs, t, LossKind::CrossEntropy);
        let fd = finite_difference_gradient(&p, &inputs, t, LossKind::CrossEntropy, DEFAULT_FD_EPSILON).unwrap();
        let err = max_relative_error(&a, &fd, 1e-8);
        assert!(err <= 1e-6, "max relative error {err:e}");
    }

    #[test]
    fn one_step_scalar_gradient_by_hand() {
        // d = m = o = 1, one step from rest: z = Δt σ̂(a) tanh(c), y = Δt σ̂(b) tanh(D),
        // ω = w y, ℰ = ½(ω − t)².
        let mut p = LemParams::zeros(1, 1, 1, 0.8).unwrap();
        p.v1 = Matrix::from_vec(1, 1, vec![0.4]).unwrap();
        p.vz = Matrix::from_vec(1, 1, vec![-0.7]).unwrap();
        p.b2 = vec![0.3];
        p.wy = Matrix::from_vec(1, 1, vec![1.5]).unwrap();
        p.by = vec![0.1];
        p.w_out = Matrix::from_vec(1, 1, vec![2.0]).unwrap();
        let u = 0.9;
        let target = [0.25];
        let dt = 0.8;
        let sh = crate::numerics::sigma_hat;
        let a = 0.4 * u;
        let c = -0.7 * u;
        let z = dt * sh(a) * c.tanh();
        let dd = 1.5 * z + 0.1;
        let y = dt * sh(0.3) * dd.tanh();
        let r = 2.0 * y - target[0];
        // ∂ℰ/∂by = r · w · Δt σ̂(b) tanh'(D)
        let g_by = r * 2.0 * dt * sh(0.3) * (1.0 - dd.tanh().powi(2));
        // ∂ℰ/∂Wy = g_by · z ; ∂ℰ/∂vz = g_by · Wy · Δt σ̂(a) tanh'(c) u
        let g_wy = g_by * z;
        let g_vz = g_by * 1.5 * dt * sh(a) * (1.0 - c.tanh().powi(2)) * u;
        let g = analytic(&p, &[vec![u]], SequenceTarget::Last(&target), LossKind::Mse);
        assert!((g.by[0] - g_by).abs() < 1e-12);
        assert!((g.wy.get(0, 0) - g_wy).abs() < 1e-12);
        assert!((g.vz.get(0, 0) - g_vz).abs() < 1e-12);
        let fd = finite_difference_gradient(&p, &[vec![u]], SequenceTarget::Last(&target), LossKind::Mse, 1e-6).unwrap();
        assert!((fd.by[0] - g_by).abs() < 1e-9);
        assert!((fd.wy.get(0, 0) - g_wy).abs() < 1e-9);
        assert!((fd.vz.get(0, 0) - g_vz).abs() < 1e-9);
    }

    #[test]
    fn zero_epsilon_is_rejected() {
        let p = LemParams::init(2, 1, 1, 0.5, 0).unwrap();
        let inputs = seq(3, 1, 0);
        assert!(finite_difference_gradient(&p, &inputs, SequenceTarget::Last(&[0.0]), LossKind::Mse, 0.0).is_err());
    }

    /// Jacobian of one step by perturbing each interleaved state entry.
    fn fd_step_jacobian(p: &LemParams, prev: &LemState, u: &[f64]) -> Matrix {
        let x0 = prev.interleaved();
        let n = x0.len();
        let mut j = Matrix::zeros(n, n);
        for c in 0..n {
            let h = 1e-6;
            let mut xp = x0.clone();
            xp[c] += h;
            let mut xm = x0.clone();
            xm[c] -= h;
            let fp = forward_step(p, &LemState::from_interleaved(&xp), u).unwrap().0.interleaved();
            let fm = forward_step(p, &LemState::from_interleaved(&xm), u).unwrap().0.interleaved();
            for r in 0..n {
                j.set(r, c, (fp[r] - fm[r]) / (2.0 * h));
            }
        }
        j
    }

    #[test]
    fn state_jacobian_matches_finite_differences() {
        for seed in 0..5 {
            let p = LemParams::init(3, 2, 1, 0.7, 40 + seed).unwrap();
            let inputs = seq(5, 2, 50 + seed);
            let (_, caches) = forward_sequence(&p, &inputs, &LemState::zeros(3)).unwrap();
            for c in &caches {
                let analytic = state_jacobian(&p, c);
                let fd = fd_step_jacobian(&p, &c.prev_state, &c.u);
                for (a, b) in analytic.as_slice().iter().zip(fd.as_slice()) {
                    assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn e_and_f_norm_bounds() {
        for seed in 0..20 {
            let d = 2 + (seed as usize % 6);
            let p = LemParams::init(d, 2, 1, 0.5, 100 + seed).unwrap();
            let eta = p.eta();
            let (_, caches) = forward_sequence(&p, &seq(30, 2, seed), &LemState::zeros(d)).unwrap();
            for c in &caches {
                let (e, f) = jacobian_parts(&p, c);
                assert!(e.norm_inf() <= 1.0 + 3.0 * eta + 1e-12);
                assert!(f.norm_inf() <= eta + 3.0 * eta * eta + 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_products_match_finite_differences() {
        let p = LemParams::init(3, 2, 1, 0.5, 77).unwrap();
        let inputs = seq(12, 2, 78);
        let (_, caches) = forward_sequence(&p, &inputs, &LemState::zeros(3)).unwrap();
        for k in [2usize, 4, 6] {
            let n = k + 5;
            let prod = jacobian_product(&p, &caches, n, k).unwrap();
            let x_k = caches[k - 1].next_state.interleaved();
            for col in 0..6 {
                let h = 1e-6;
                let run = |delta: f64| {
                    let mut x = x_k.clone();
                    x[col] += delta;
                    let mut s = LemState::from_interleaved(&x);
                    for step in k..n {
                        s = forward_step(&p, &s, &inputs[step]).unwrap().0;
                    }
                    s.interleaved()
                };
                let (fp, fm) = (run(h), run(-h));
                for row in 0..6 {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    assert!((prod.get(row, col) - fd).abs() <= 1e-5 * fd.abs().max(1e-3));
                }
            }
        }
    }

    fn single_step_loss_grads(p: &LemParams, inputs: &[Vec<f64>], targets: &[Vec<f64>], n: usize) -> crate::lem::LemGrads {
        let (_, caches) = forward_sequence(p, inputs, &LemState::zeros(p.hidden())).unwrap();
        let d = p.hidden();
        let mut g = vec![vec![0.0; d]; inputs.len()];
        for i in 0..d {
            g[n - 1][i] = caches[n - 1].next_state.y[i] - targets[n - 1][i];
        }
        backward(p, &caches, &g).unwrap()
    }

    #[test]
    fn contributions_sum_to_backward() {
        let d = 4;
        let mut p = LemParams::init(d, 2, d, 0.3, 5).unwrap();
        p.w_out = Matrix::identity(d);
        let inputs = seq(15, 2, 6);
        let targets = seq(15, d, 7);
        let (_, caches) = forward_sequence(&p, &inputs, &LemState::zeros(d)).unwrap();
        for n in [1usize, 7, 15] {
            let g = single_step_loss_grads(&p, &inputs, &targets, n);
            for (alpha, beta) in [(0, 0), (1, 3), (3, 2)] {
                for theta in [ThetaEntry::Wz { alpha, beta }, ThetaEntry::Wy { alpha, beta }] {
                    let parts = gradient_contributions(&p, &caches, &targets[n - 1], n, theta).unwrap();
                    let total: f64 = parts.iter().sum();
                    let expected = match theta {
                        ThetaEntry::Wz { .. } => g.wz.get(alpha, beta),
                        ThetaEntry::Wy { .. } => g.wy.get(alpha, beta),
                    };
                    assert!((total - expected).abs() <= 1e-8 * expected.abs().max(1.0), "{theta:?} n={n}");
                    // the single-k entry point agrees with the batched one
                    let k = n.div_ceil(2);
                    let single = gradient_contribution(&p, &caches, &targets[n - 1], n, k, theta).unwrap();
                    assert!((single - parts[k - 1]).abs() <= 1e-14 * single.abs().max(1e-300) + 1e-18);
                }
            }
        }
    }

    #[test]
    fn contribution_bound_holds_at_small_step() {
        for seed in 0..10u64 {
            let d = 3 + (seed as usize % 4);
            let dt = 0.01;
            let n = 10;
            let mut p = LemParams::init(d, 2, d, dt, 300 + seed).unwrap();
            p.w_out = Matrix::identity(d);
            let inputs = seq(n, 2, 400 + seed);
            let targets = seq(n, d, 500 + seed);
            let x_hat = targets.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let (_, caches) = forward_sequence(&p, &inputs, &LemState::zeros(d)).unwrap();
            let eta = p.eta();
            for alpha in 0..d {
                for beta in 0..d {
                    let theta = ThetaEntry::Wy { alpha, beta };
                    let parts = gradient_contributions(&p, &caches, &targets[n - 1], n, theta).unwrap();
                    for (k0, c) in parts.iter().enumerate() {
                        assert!(c.abs() <= contribution_bound(dt, n, k0 + 1, x_hat, eta));
                    }
                }
            }
        }
    }

    #[test]
    fn contribution_vanishes_for_zero_model_and_target() {
        let d = 3;
        let mut p = LemParams::zeros(d, 1, d, 0.5).unwrap();
        p.w_out = Matrix::identity(d);
        let inputs = seq(4, 1, 1);
        let (_, caches) = forward_sequence(&p, &inputs, &LemState::zeros(d)).unwrap();
        let c = gradient_contribution(&p, &caches, &[0.0; 3], 4, 4, ThetaEntry::Wz { alpha: 0, beta: 1 }).unwrap();
        assert_eq!(c, 0.0);
        assert!(gradient_contribution(&p, &caches, &[0.0; 3], 4, 5, ThetaEntry::Wz { alpha: 0, beta: 1 }).is_err());
        assert!(gradient_contribution(&p, &caches, &[0.0; 3], 4, 0, ThetaEntry::Wz { alpha: 0, beta: 1 }).is_err());
        assert!(gradient_contribution(&p, &caches, &[0.0; 3], 4, 1, ThetaEntry::Wz { alpha: 3, beta: 1 }).is_err());
    }

    #[test]
    fn bound_formula_values() {
        let b = bounds_from(0.0, 0.0);
        assert_eq!(b.small_dt, 9.0);
        assert!((b.unconditional - 3.0 * (1.0 + 1f64.exp())).abs() < 1e-12);
        let b = bounds_from(1.0, 1.0);
        assert!((b.small_dt - (3.0 + 3f64.sqrt()) * 9.0).abs() < 1e-12);
        assert!((b.small_dt - 42.588).abs() < 1e-3);
        for (e, x) in [(0.0, 0.0), (0.5, 0.2), (1.0, 1.0), (2.0, 3.0)] {
            let base = bounds_from(e, x);
            let up_e = bounds_from(e + 0.1, x);
            let up_x = bounds_from(e, x + 0.1);
            assert!(up_e.small_dt > base.small_dt && up_e.unconditional > base.unconditional);
            assert!(up_x.small_dt > base.small_dt && up_x.unconditional > base.unconditional);
        }
    }

    #[test]
    fn report_holds_unconditional_bound() {
        for seed in 0..10u64 {
            let d = 2 + (seed as usize % 7);
            let dt: f64 = [0.01, 0.05, 0.1][seed as usize % 3];
            let n = (1.0 / dt).round() as usize;
            let mut p = LemParams::init(d, 2, d, dt, 900 + seed).unwrap();
            p.w_out = Matrix::identity(d);
            let r = gradient_report(&p, &seq(n, 2, seed), &seq(n, d, seed + 1)).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.x_hat <= 1.0);
        }
    }

    #[test]
    fn report_requires_identity_readout() {
        let p = LemParams::init(2, 1, 2, 0.5, 0).unwrap();
        assert!(gradient_report(&p, &seq(2, 1, 0), &seq(2, 2, 1)).is_err());
    }
}
