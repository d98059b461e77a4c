use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::loss::SequenceTarget;

/// Ground truth for every sequence of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Targets {
    /// One vector per sequence, scored against the last readout.
    Values(Vec<Vec<f64>>),
    /// One vector per step per sequence.
    PerStep(Vec<Vec<Vec<f64>>>),
    /// One class id per sequence.
    Classes(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Values(v) => v.len(),
            Targets::PerStep(v) => v.len(),
            Targets::Classes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Width of one target vector (`n_classes` is not recoverable from ids, so
    /// classes report 1).
    pub fn width(&self) -> usize {
        match self {
            Targets::Values(v) => v.first().map_or(0, Vec::len),
            Targets::PerStep(v) => v.first().and_then(|s| s.first()).map_or(0, Vec::len),
            Targets::Classes(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMeta {
    pub task: String,
    pub n_steps: usize,
    pub seed: u64,
    /// Task-specific generator settings.
    #[serde(default)]
    pub config: serde_json::Value,
}

/// Inputs `[sequence][step][feature]` with matching targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceBatch {
    pub inputs: Vec<Vec<Vec<f64>>>,
    pub targets: Targets,
    pub meta: BatchMeta,
}

impl SequenceBatch {
    /// Builds a batch after checking that every sequence has the same length
    /// and width, all inputs are finite and targets line up.
    pub fn new(inputs: Vec<Vec<Vec<f64>>>, targets: Targets, meta: BatchMeta) -> Result<Self> {
        let b = Self { inputs, targets, meta };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.targets.len() {
            return Err(Error::Shape(format!(
                "{} sequences but {} targets",
                self.inputs.len(),
                self.targets.len()
            )));
        }
        let (n, m) = (self.n_steps(), self.feature_dim());
        for (i, s) in self.inputs.iter().enumerate() {
            if s.len() != n || s.iter().any(|u| u.len() != m) {
                return Err(Error::Shape(format!("sequence {i} is not {n} x {m}")));
            }
            if s.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("inputs of sequence {i}")));
            }
        }
        match &self.targets {
            Targets::PerStep(t) => {
                let w = self.targets.width();
                if t.iter().any(|s| s.len() != n || s.iter().any(|v| v.len() != w)) {
                    return Err(Error::Shape("per-step targets do not match the inputs".into()));
                }
            }
            Targets::Values(t) => {
                let w = self.targets.width();
                if t.iter().any(|v| v.len() != w) {
                    return Err(Error::Shape("target vectors differ in width".into()));
                }
            }
            Targets::Classes(_) => {}
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_steps(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn feature_dim(&self) -> usize {
        self.inputs.first().and_then(|s| s.first()).map_or(0, Vec::len)
    }

    pub fn target(&self, i: usize) -> SequenceTarget<'_> {
        match &self.targets {
            Targets::Values(v) => SequenceTarget::Last(&v[i]),
            Targets::PerStep(v) => SequenceTarget::PerStep(&v[i]),
            Targets::Classes(v) => SequenceTarget::Class(v[i]),
        }
    }

    /// The sequences at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Index(format!("sequence {i} of {}", self.len())));
        }
        let inputs = indices.iter().map(|&i| self.inputs[i].clone()).collect();
        let targets = match &self.targets {
            Targets::Values(v) => Targets::Values(indices.iter().map(|&i| v[i].clone()).collect()),
            Targets::PerStep(v) => Targets::PerStep(indices.iter().map(|&i| v[i].clone()).collect()),
            Targets::Classes(v) => Targets::Classes(indices.iter().map(|&i| v[i]).collect()),
        };
        Ok(Self {
            inputs,
            targets,
            meta: self.meta.clone(),
        })
    }
}
