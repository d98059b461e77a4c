use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::TensorSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

/// Optimizer state over a flattened parameter vector. SGD keeps only the
/// step counter; Adam keeps first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, scalar_count: usize) -> Self {
        let moments = if kind == OptimizerKind::Adam { scalar_count } else { 0 };
        Self {
            kind,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; moments],
            v: vec![0.0; moments],
        }
    }

    pub fn for_params<P: TensorSet>(kind: OptimizerKind, params: &P) -> Self {
        Self::new(kind, params.scalar_count())
    }

    /// One in-place update with learning rate `lr`.
    pub fn apply<P: TensorSet, G: TensorSet>(&mut self, params: &mut P, grads: &G, lr: f64) -> Result<()> {
        let g_slices = grads.tensor_slices();
        let mut p_slices = params.tensor_slices_mut();
        if p_slices.len() != g_slices.len() || p_slices.iter().zip(&g_slices).any(|(p, g)| p.len() != g.len()) {
            return Err(Error::Shape("optimizer: gradients do not mirror parameters".into()));
        }
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in p_slices.iter_mut().zip(&g_slices) {
                    for (w, d) in p.iter_mut().zip(g.iter()) {
                        *w -= lr * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                let total: usize = g_slices.iter().map(|g| g.len()).sum();
                if self.m.len() != total {
                    return Err(Error::Shape(format!(
                        "optimizer state holds {} moments for {total} parameters",
                        self.m.len()
                    )));
                }
                let t = self.step as i32;
                let c1 = 1.0 - self.beta1.powi(t);
                let c2 = 1.0 - self.beta2.powi(t);
                let mut k = 0;
                for (p, g) in p_slices.iter_mut().zip(&g_slices) {
                    for (w, &d) in p.iter_mut().zip(g.iter()) {
                        self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * d;
                        self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * d * d;
                        let m_hat = self.m[k] / c1;
                        let v_hat = self.v[k] / c2;
                        *w -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
                        k += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_global_norm<G: TensorSet>(grads: &mut G, max_norm: f64) -> f64 {
    let norm = grads
        .tensor_slices()
        .iter()
        .flat_map(|t| t.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for t in grads.tensor_slices_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}
