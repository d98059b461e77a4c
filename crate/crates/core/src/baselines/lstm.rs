use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::lem::check_dims;
use crate::numerics::{axpy, rng_from_seed, sigma_hat, uniform_from, Matrix, TensorSet};

/// LSTM weights with the same `(d, m, o)` layout as a LEM cell: `W, V, b`
/// feed the candidate, the `f`, `i`, `o` triples feed the gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub w: Matrix,
    pub wf: Matrix,
    pub wi: Matrix,
    pub wo: Matrix,
    pub v: Matrix,
    pub vf: Matrix,
    pub vi: Matrix,
    pub vo: Matrix,
    pub b: Vec<f64>,
    pub bf: Vec<f64>,
    pub bi: Vec<f64>,
    pub bo: Vec<f64>,
    pub w_out: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmGrads {
    pub w: Matrix,
    pub wf: Matrix,
    pub wi: Matrix,
    pub wo: Matrix,
    pub v: Matrix,
    pub vf: Matrix,
    pub vi: Matrix,
    pub vo: Matrix,
    pub b: Vec<f64>,
    pub bf: Vec<f64>,
    pub bi: Vec<f64>,
    pub bo: Vec<f64>,
    pub w_out: Matrix,
}

pub const LSTM_TENSOR_NAMES: [&str; 13] = [
    "W", "Wf", "Wi", "Wo", "V", "Vf", "Vi", "Vo", "b", "bf", "bi", "bo", "Wout",
];

macro_rules! lstm_tensor_views {
    ($t:ty) => {
        impl $t {
            pub fn tensors(&self) -> [&[f64]; 13] {
                [
                    self.w.as_slice(),
                    self.wf.as_slice(),
                    self.wi.as_slice(),
                    self.wo.as_slice(),
                    self.v.as_slice(),
                    self.vf.as_slice(),
                    self.vi.as_slice(),
                    self.vo.as_slice(),
                    &self.b,
                    &self.bf,
                    &self.bi,
                    &self.bo,
                    self.w_out.as_slice(),
                ]
            }

            pub fn tensors_mut(&mut self) -> [&mut [f64]; 13] {
                [
                    self.w.as_mut_slice(),
                    self.wf.as_mut_slice(),
                    self.wi.as_mut_slice(),
                    self.wo.as_mut_slice(),
                    self.v.as_mut_slice(),
                    self.vf.as_mut_slice(),
                    self.vi.as_mut_slice(),
                    self.vo.as_mut_slice(),
                    &mut self.b,
                    &mut self.bf,
                    &mut self.bi,
                    &mut self.bo,
                    self.w_out.as_mut_slice(),
                ]
            }
        }

        impl TensorSet for $t {
            fn tensor_slices(&self) -> Vec<&[f64]> {
                self.tensors().to_vec()
            }
            fn tensor_slices_mut(&mut self) -> Vec<&mut [f64]> {
                self.tensors_mut().into_iter().collect()
            }
        }
    };
}

lstm_tensor_views!(LstmParams);
lstm_tensor_views!(LstmGrads);

impl LstmParams {
    pub fn zeros(d: usize, m: usize, o: usize) -> Result<Self> {
        check_dims(d, m, o)?;
        let sq = || Matrix::zeros(d, d);
        let inp = || Matrix::zeros(d, m);
        Ok(Self {
            w: sq(),
            wf: sq(),
            wi: sq(),
            wo: sq(),
            v: inp(),
            vf: inp(),
            vi: inp(),
            vo: inp(),
            b: vec![0.0; d],
            bf: vec![0.0; d],
            bi: vec![0.0; d],
            bo: vec![0.0; d],
            w_out: Matrix::zeros(o, d),
        })
    }

    /// `U(-1/√d, 1/√d)` for every entry, drawn in declaration order.
    pub fn init(d: usize, m: usize, o: usize, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(d, m, o)?;
        let bound = 1.0 / (d as f64).sqrt();
        let mut rng = rng_from_seed(seed);
        for t in p.tensors_mut() {
            t.copy_from_slice(&uniform_from(&mut rng, -bound, bound, t.len()));
        }
        Ok(p)
    }

    pub fn hidden(&self) -> usize {
        self.w.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.v.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w_out.rows()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.hidden(), self.input_dim(), self.output_dim())
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn zero_grads(&self) -> LstmGrads {
        let z = Self::zeros(self.hidden(), self.input_dim(), self.output_dim())
            .expect("dimensions already validated");
        LstmGrads {
            w: z.w,
            wf: z.wf,
            wi: z.wi,
            wo: z.wo,
            v: z.v,
            vf: z.vf,
            vi: z.vi,
            vo: z.vo,
            b: z.b,
            bf: z.bf,
            bi: z.bi,
            bo: z.bo,
            w_out: z.w_out,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (d, m, o) = self.dims();
        check_dims(d, m, o)?;
        let ok = [&self.w, &self.wf, &self.wi, &self.wo].iter().all(|w| w.shape() == (d, d))
            && [&self.v, &self.vf, &self.vi, &self.vo].iter().all(|v| v.shape() == (d, m))
            && [&self.b, &self.bf, &self.bi, &self.bo].iter().all(|b| b.len() == d)
            && self.w_out.shape() == (o, d);
        if !ok {
            return Err(Error::Shape(format!(
                "LSTM parameters inconsistent with (d, m, o) = ({d}, {m}, {o})"
            )));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("LSTM parameters".into()));
        }
        Ok(())
    }
}

impl LstmGrads {
    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(d: usize) -> Self {
        Self {
            h: vec![0.0; d],
            c: vec![0.0; d],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub u: Vec<f64>,
    pub prev_state: LstmState,
    pub next_state: LstmState,
}

fn affine(w: &Matrix, x: &[f64], v: &Matrix, u: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = b.to_vec();
    w.matvec_acc(x, &mut out);
    v.matvec_acc(u, &mut out);
    out
}

/// `f, i, o = σ̂(·)`, `c_n = f ⊙ c + i ⊙ tanh(W h + V u + b)`,
/// `h_n = o ⊙ tanh(c_n)`.
pub fn lstm_forward_step(params: &LstmParams, state: &LstmState, u: &[f64]) -> Result<(LstmState, LstmCache)> {
    let (d, m, _) = params.dims();
    if u.len() != m || state.h.len() != d || state.c.len() != d {
        return Err(Error::Shape(format!(
            "lstm_forward_step: expected input {m} and state {d}, got input {} and state ({}, {})",
            u.len(),
            state.h.len(),
            state.c.len()
        )));
    }
    ensure_finite(u, "LSTM input")?;
    ensure_finite(&state.h, "LSTM state h")?;
    ensure_finite(&state.c, "LSTM state c")?;
    let h = &state.h;
    let gate = |w: &Matrix, v: &Matrix, b: &[f64]| -> Vec<f64> {
        affine(w, h, v, u, b).into_iter().map(sigma_hat).collect()
    };
    let f = gate(&params.wf, &params.vf, &params.bf);
    let i = gate(&params.wi, &params.vi, &params.bi);
    let o = gate(&params.wo, &params.vo, &params.bo);
    let g: Vec<f64> = affine(&params.w, h, &params.v, u, &params.b)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let c: Vec<f64> = (0..d).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|x| x.tanh()).collect();
    let h_new: Vec<f64> = (0..d).map(|k| o[k] * tanh_c[k]).collect();
    let next = LstmState { h: h_new, c };
    ensure_finite(&next.c, "LSTM state c")?;
    let cache = LstmCache {
        f,
        i,
        o,
        g,
        tanh_c,
        u: u.to_vec(),
        prev_state: state.clone(),
        next_state: next.clone(),
    };
    Ok((next, cache))
}

/// Readouts `W_out h_n` and caches over a whole sequence.
pub fn lstm_forward_sequence(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    init: &LstmState,
) -> Result<(Vec<Vec<f64>>, Vec<LstmCache>)> {
    if inputs.is_empty() {
        return Err(Error::Shape("lstm_forward_sequence: empty input sequence".into()));
    }
    let mut state = init.clone();
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut caches = Vec::with_capacity(inputs.len());
    for u in inputs {
        let (next, cache) = lstm_forward_step(params, &state, u)?;
        outputs.push(params.w_out.matvec(&next.h)?);
        caches.push(cache);
        state = next;
    }
    Ok((outputs, caches))
}

pub fn lstm_backward(params: &LstmParams, caches: &[LstmCache], target_grads: &[Vec<f64>]) -> Result<LstmGrads> {
    if caches.len() != target_grads.len() {
        return Err(Error::Shape(format!(
            "lstm_backward: {} caches but {} output gradients",
            caches.len(),
            target_grads.len()
        )));
    }
    let (d, _, o_dim) = params.dims();
    if let Some(g) = target_grads.iter().find(|g| g.len() != o_dim) {
        return Err(Error::Shape(format!(
            "lstm_backward: output gradient of width {} for {o_dim} outputs",
            g.len()
        )));
    }
    let mut grads = params.zero_grads();
    let mut gh = vec![0.0; d];
    let mut gc = vec![0.0; d];
    let (mut af, mut ai, mut ao, mut ag) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);

    for (cache, g_out) in caches.iter().zip(target_grads).rev() {
        let h_prev = &cache.prev_state.h;
        let c_prev = &cache.prev_state.c;
        let u = &cache.u;
        if g_out.iter().any(|&v| v != 0.0) {
            params.w_out.matvec_t_acc(g_out, &mut gh);
            grads.w_out.add_outer(g_out, &cache.next_state.h);
        }
        for k in 0..d {
            let (f, i, o, g, tc) = (cache.f[k], cache.i[k], cache.o[k], cache.g[k], cache.tanh_c[k]);
            gc[k] += gh[k] * o * (1.0 - tc * tc);
            ao[k] = gh[k] * tc * o * (1.0 - o);
            af[k] = gc[k] * c_prev[k] * f * (1.0 - f);
            ai[k] = gc[k] * g * i * (1.0 - i);
            ag[k] = gc[k] * i * (1.0 - g * g);
            gc[k] *= f;
        }
        let mut gh_prev = vec![0.0; d];
        for (w, b, a, gw, gv) in [
            (&params.w, &mut grads.b, &ag, &mut grads.w, &mut grads.v),
            (&params.wf, &mut grads.bf, &af, &mut grads.wf, &mut grads.vf),
            (&params.wi, &mut grads.bi, &ai, &mut grads.wi, &mut grads.vi),
            (&params.wo, &mut grads.bo, &ao, &mut grads.wo, &mut grads.vo),
        ] {
            w.matvec_t_acc(a, &mut gh_prev);
            gw.add_outer(a, h_prev);
            gv.add_outer(a, u);
            axpy(1.0, a, b);
        }
        gh = gh_prev;
    }
    Ok(grads)
}

/// `∂(h_n, c_n)/∂(h_{n-1}, c_{n-1})` in the stacked layout `[h, c]`.
pub fn lstm_step_jacobian(params: &LstmParams, cache: &LstmCache) -> Matrix {
    let d = params.hidden();
    let mut j = Matrix::zeros(2 * d, 2 * d);
    let c_prev = &cache.prev_state.c;
    for k in 0..d {
        let (f, i, o, g, tc) = (cache.f[k], cache.i[k], cache.o[k], cache.g[k], cache.tanh_c[k]);
        let dh_dc = o * (1.0 - tc * tc);
        for l in 0..d {
            let dc = c_prev[k] * f * (1.0 - f) * params.wf.get(k, l)
                + g * i * (1.0 - i) * params.wi.get(k, l)
                + i * (1.0 - g * g) * params.w.get(k, l);
            j.set(d + k, l, dc);
            j.set(k, l, tc * o * (1.0 - o) * params.wo.get(k, l) + dh_dc * dc);
        }
        j.set(d + k, d + k, f);
        j.set(k, d + k, dh_dc * f);
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradients::central_differences;
    use crate::lem::param_count;
    use crate::numerics::{max_relative_error, seeded_uniform};
    use crate::training::loss::{sequence_loss, LossKind, SequenceTarget};

    fn seq(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
        seeded_uniform(-1.0, 1.0, n * m, seed)
            .unwrap()
            .chunks(m)
            .map(<[f64]>::to_vec)
            .collect()
    }

    fn loss(p: &LstmParams, inputs: &[Vec<f64>], t: SequenceTarget<'_>, kind: LossKind) -> Result<f64> {
        let (out, _) = lstm_forward_sequence(p, inputs, &LstmState::zeros(p.hidden()))?;
        Ok(sequence_loss(kind, &out, t)?.0)
    }

    fn analytic(p: &LstmParams, inputs: &[Vec<f64>], t: SequenceTarget<'_>, kind: LossKind) -> LstmGrads {
        let (out, caches) = lstm_forward_sequence(p, inputs, &LstmState::zeros(p.hidden())).unwrap();
        let (_, g) = sequence_loss(kind, &out, t).unwrap();
        lstm_backward(p, &caches, &g).unwrap()
    }

    #[test]
    fn zero_model_stays_at_rest() {
        let p = LstmParams::zeros(3, 2, 1).unwrap();
        let (s, _) = lstm_forward_step(&p, &LstmState::zeros(3), &[0.0, 0.0]).unwrap();
        assert_eq!(s, LstmState::zeros(3));
    }

    #[test]
    fn saturated_forget_gate_keeps_cell() {
        let mut p = LstmParams::init(3, 2, 1, 4).unwrap();
        p.wf = Matrix::zeros(3, 3);
        p.vf = Matrix::zeros(3, 2);
        p.wi = Matrix::zeros(3, 3);
        p.vi = Matrix::zeros(3, 2);
        p.bf = vec![20.0; 3];
        p.bi = vec![-20.0; 3];
        let c0 = vec![0.3, -0.5, 0.9];
        let mut s = LstmState { h: vec![0.0; 3], c: c0.clone() };
        for u in seq(50, 2, 5) {
            s = lstm_forward_step(&p, &s, &u).unwrap().0;
            for (a, b) in s.c.iter().zip(&c0) {
                assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
            }
        }
        // per-step leakage is e^{-20}; after 50 steps still within 1e-6
        let one = lstm_forward_step(&p, &LstmState { h: vec![0.0; 3], c: c0.clone() }, &[0.1, 0.2]).unwrap().0;
        for (a, b) in one.c.iter().zip(&c0) {
            assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn step_jacobian_matches_finite_differences() {
        let p = LstmParams::init(3, 2, 1, 9).unwrap();
        let s = LstmState {
            h: vec![0.2, -0.4, 0.1],
            c: vec![0.5, 0.3, -0.7],
        };
        let u = [0.3, -0.8];
        let (_, cache) = lstm_forward_step(&p, &s, &u).unwrap();
        let jac = lstm_step_jacobian(&p, &cache);
        let flat = |s: &LstmState| [s.h.clone(), s.c.clone()].concat();
        let x0 = flat(&s);
        for col in 0..6 {
            let eval = |delta: f64| {
                let mut x = x0.clone();
                x[col] += delta;
                let st = LstmState { h: x[..3].to_vec(), c: x[3..].to_vec() };
                flat(&lstm_forward_step(&p, &st, &u).unwrap().0)
            };
            let h = 1e-6;
            let (fp, fm) = (eval(h), eval(-h));
            for row in 0..6 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!((jac.get(row, col) - fd).abs() <= 1e-6 * fd.abs().max(1e-3), "({row},{col})");
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..6u64 {
            let d = 2 + seed as usize;
            let m = 1 + seed as usize % 3;
            let p = LstmParams::init(d, m, 3, seed).unwrap();
            let inputs = seq(8 + seed as usize, m, 100 + seed);
            let targets = seq(inputs.len(), 3, 200 + seed);
            for (t, kind) in [
                (SequenceTarget::PerStep(&targets), LossKind::Mse),
                (SequenceTarget::Class(seed as usize % 3), LossKind::CrossEntropy),
            ] {
                let a = analytic(&p, &inputs, t, kind);
                let fd = central_differences(&p, p.zero_grads(), crate::gradients::DEFAULT_FD_EPSILON, |q| {
                    loss(q, &inputs, t, kind)
                })
                .unwrap();
                let err = max_relative_error(&a, &fd, 1e-8);
                assert!(err <= 1e-6, "seed {seed} {kind:?}: {err:e}");
            }
        }
    }

    #[test]
    fn zero_output_gradients_give_zero() {
        let p = LstmParams::init(3, 2, 2, 1).unwrap();
        let (_, caches) = lstm_forward_sequence(&p, &seq(5, 2, 1), &LstmState::zeros(3)).unwrap();
        let g = lstm_backward(&p, &caches, &vec![vec![0.0; 2]; 5]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn gradient_descent_reduces_loss() {
        let mut p = LstmParams::init(4, 1, 1, 3).unwrap();
        let inputs = seq(10, 1, 4);
        let targets: Vec<Vec<f64>> = inputs.iter().map(|u| vec![0.5 * u[0]]).collect();
        let t = SequenceTarget::PerStep(&targets);
        let start = loss(&p, &inputs, t, LossKind::Mse).unwrap();
        for _ in 0..50 {
            let g = analytic(&p, &inputs, t, LossKind::Mse);
            for (w, gw) in p.tensors_mut().into_iter().zip(g.tensors()) {
                axpy(-0.5, gw, w);
            }
        }
        let end = loss(&p, &inputs, t, LossKind::Mse).unwrap();
        assert!(end < 0.8 * start, "{start} -> {end}");
    }

    #[test]
    fn parameter_count_matches_lem() {
        for d in [1, 3, 8, 32] {
            for m in [1, 2, 96] {
                for o in [1, 10] {
                    assert_eq!(LstmParams::zeros(d, m, o).unwrap().param_count(), param_count(d, m, o));
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        let p = LstmParams::init(3, 2, 1, 0).unwrap();
        assert!(matches!(
            lstm_forward_step(&p, &LstmState::zeros(3), &[1.0]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            lstm_forward_step(&p, &LstmState::zeros(3), &[f64::NAN, 0.0]),
            Err(Error::NonFinite(_))
        ));
    }
}
