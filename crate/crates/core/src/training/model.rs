use serde::{Deserialize, Serialize};

use super::loss::{sequence_loss, LossKind, SequenceTarget};
use crate::baselines::{lstm_backward, lstm_forward_sequence, LstmGrads, LstmParams, LstmState};
use crate::error::Result;
use crate::gradients::backward;
use crate::lem::{forward_sequence, LemGrads, LemParams, LemState};
use crate::numerics::TensorSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Lem,
    Lstm,
}

/// Either recurrent model behind one training interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Lem(LemParams),
    Lstm(LstmParams),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelGrads {
    Lem(LemGrads),
    Lstm(LstmGrads),
}

impl Model {
    pub fn init(kind: ModelKind, d: usize, m: usize, o: usize, delta_t: f64, seed: u64) -> Result<Self> {
        Ok(match kind {
            ModelKind::Lem => Model::Lem(LemParams::init(d, m, o, delta_t, seed)?),
            ModelKind::Lstm => Model::Lstm(LstmParams::init(d, m, o, seed)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lem(_) => ModelKind::Lem,
            Model::Lstm(_) => ModelKind::Lstm,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            Model::Lem(p) => p.dims(),
            Model::Lstm(p) => p.dims(),
        }
    }

    pub fn zero_grads(&self) -> ModelGrads {
        match self {
            Model::Lem(p) => ModelGrads::Lem(p.zero_grads()),
            Model::Lstm(p) => ModelGrads::Lstm(p.zero_grads()),
        }
    }

    /// Readouts for every step from the zero state.
    pub fn forward(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        Ok(match self {
            Model::Lem(p) => forward_sequence(p, inputs, &LemState::zeros(p.hidden()))?.0,
            Model::Lstm(p) => lstm_forward_sequence(p, inputs, &LstmState::zeros(p.hidden()))?.0,
        })
    }

    /// Loss, readouts and parameter gradients of one sequence.
    pub fn loss_and_grads(
        &self,
        inputs: &[Vec<f64>],
        target: SequenceTarget<'_>,
        kind: LossKind,
    ) -> Result<(f64, Vec<Vec<f64>>, ModelGrads)> {
        match self {
            Model::Lem(p) => {
                let (out, caches) = forward_sequence(p, inputs, &LemState::zeros(p.hidden()))?;
                let (loss, g) = sequence_loss(kind, &out, target)?;
                let grads = backward(p, &caches, &g)?;
                Ok((loss, out, ModelGrads::Lem(grads)))
            }
            Model::Lstm(p) => {
                let (out, caches) = lstm_forward_sequence(p, inputs, &LstmState::zeros(p.hidden()))?;
                let (loss, g) = sequence_loss(kind, &out, target)?;
                let grads = lstm_backward(p, &caches, &g)?;
                Ok((loss, out, ModelGrads::Lstm(grads)))
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.scalar_count()
    }
}

impl TensorSet for Model {
    fn tensor_slices(&self) -> Vec<&[f64]> {
        match self {
            Model::Lem(p) => p.tensor_slices(),
            Model::Lstm(p) => p.tensor_slices(),
        }
    }
    fn tensor_slices_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Model::Lem(p) => p.tensor_slices_mut(),
            Model::Lstm(p) => p.tensor_slices_mut(),
        }
    }
}

impl TensorSet for ModelGrads {
    fn tensor_slices(&self) -> Vec<&[f64]> {
        match self {
            ModelGrads::Lem(g) => g.tensor_slices(),
            ModelGrads::Lstm(g) => g.tensor_slices(),
        }
    }
    fn tensor_slices_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            ModelGrads::Lem(g) => g.tensor_slices_mut(),
            ModelGrads::Lstm(g) => g.tensor_slices_mut(),
        }
    }
}

impl ModelGrads {
    /// `self += scale · other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelGrads, scale: f64) {
        for (a, b) in self.tensor_slices_mut().into_iter().zip(other.tensor_slices()) {
            crate::numerics::axpy(scale, b, a);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensor_slices().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}
