//! Loss heads with analytic gradients with respect to the readouts `ω_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    CrossEntropy,
}

/// What a sequence is scored against.
#[derive(Debug, Clone, Copy)]
pub enum SequenceTarget<'a> {
    /// One target vector per step (per-step readout).
    PerStep(&'a [Vec<f64>]),
    /// A single target vector compared with the last readout.
    Last(&'a [f64]),
    /// A class id scored against the last readout's logits.
    Class(usize),
}

/// Per-step MSE: `(1/N) Σ_n ½‖ω_n − ȳ_n‖²` and its gradients.
pub fn mse_loss(outputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    if outputs.len() != targets.len() || outputs.is_empty() {
        return Err(Error::Shape(format!(
            "mse_loss: {} outputs vs {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    let inv_n = 1.0 / outputs.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(outputs.len());
    for (o, t) in outputs.iter().zip(targets) {
        if o.len() != t.len() {
            return Err(Error::Shape(format!(
                "mse_loss: output width {} vs target width {}",
                o.len(),
                t.len()
            )));
        }
        let mut g = Vec::with_capacity(o.len());
        for (a, b) in o.iter().zip(t) {
            let r = a - b;
            loss += 0.5 * r * r;
            g.push(r * inv_n);
        }
        grads.push(g);
    }
    Ok((loss * inv_n, grads))
}

/// Last-step MSE: `½‖ω_N − ȳ‖²`; gradients vanish before the last step.
pub fn mse_last_loss(outputs: &[Vec<f64>], target: &[f64]) -> Result<(f64, Vec<Vec<f64>>)> {
    let last = outputs
        .last()
        .ok_or_else(|| Error::Shape("mse_last_loss: no outputs".into()))?;
    if last.len() != target.len() {
        return Err(Error::Shape(format!(
            "mse_last_loss: output width {} vs target width {}",
            last.len(),
            target.len()
        )));
    }
    let mut grads: Vec<Vec<f64>> = outputs.iter().map(|o| vec![0.0; o.len()]).collect();
    let mut loss = 0.0;
    for (i, (a, b)) in last.iter().zip(target).enumerate() {
        let r = a - b;
        loss += 0.5 * r * r;
        grads[outputs.len() - 1][i] = r;
    }
    Ok((loss, grads))
}

/// Softmax cross-entropy of one logit vector, stabilised by log-sum-exp.
pub fn cross_entropy_loss(logits: &[f64], class: usize) -> Result<(f64, Vec<f64>)> {
    if class >= logits.len() {
        return Err(Error::Domain(format!(
            "class id {class} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
    let lse = max + sum.ln();
    let grads = logits
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - lse).exp() - if i == class { 1.0 } else { 0.0 })
        .collect();
    Ok((lse - logits[class], grads))
}

/// Loss and per-step readout gradients for one sequence.
pub fn sequence_loss(
    kind: LossKind,
    outputs: &[Vec<f64>],
    target: SequenceTarget<'_>,
) -> Result<(f64, Vec<Vec<f64>>)> {
    match (kind, target) {
        (LossKind::Mse, SequenceTarget::PerStep(t)) => mse_loss(outputs, t),
        (LossKind::Mse, SequenceTarget::Last(t)) => mse_last_loss(outputs, t),
        (LossKind::CrossEntropy, SequenceTarget::Class(c)) => {
            let last = outputs
                .last()
                .ok_or_else(|| Error::Shape("cross-entropy: no outputs".into()))?;
            let (loss, g) = cross_entropy_loss(last, c)?;
            let mut grads: Vec<Vec<f64>> = outputs.iter().map(|o| vec![0.0; o.len()]).collect();
            *grads.last_mut().expect("nonempty") = g;
            Ok((loss, grads))
        }
        (k, _) => Err(Error::Config(format!(
            "loss {k:?} is incompatible with the supplied target kind"
        ))),
    }
}

/// Index of the largest logit.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| {
            if x > bv {
                (i, x)
            } else {
                (bi, bv)
            }
        })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let o = vec![vec![0.3, -1.0], vec![2.0, 0.5]];
        let (l, g) = mse_loss(&o, &o).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_hand_case() {
        let (l, g) = mse_loss(&[vec![1.0]], &[vec![0.0]]).unwrap();
        assert_eq!(l, 0.5);
        assert_eq!(g, vec![vec![1.0]]);
        let (l, g) = mse_last_loss(&[vec![5.0], vec![1.0]], &[0.0]).unwrap();
        assert_eq!(l, 0.5);
        assert_eq!(g, vec![vec![0.0], vec![1.0]]);
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let o = vec![vec![0.3, -1.2], vec![0.7, 0.1], vec![-0.4, 2.0]];
        let t = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]];
        let (_, g) = mse_loss(&o, &t).unwrap();
        let h = 1e-6;
        for n in 0..3 {
            for i in 0..2 {
                let mut p = o.clone();
                p[n][i] += h;
                let mut m = o.clone();
                m[n][i] -= h;
                let fd = (mse_loss(&p, &t).unwrap().0 - mse_loss(&m, &t).unwrap().0) / (2.0 * h);
                assert!((fd - g[n][i]).abs() <= 1e-9 * g[n][i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn uniform_logits_give_log_classes() {
        let (l, g) = cross_entropy_loss(&[0.7; 10], 3).unwrap();
        assert!((l - 10f64.ln()).abs() < 1e-14);
        assert!((g.iter().sum::<f64>()).abs() < 1e-14);
    }

    #[test]
    fn confident_correct_logit_has_near_zero_loss() {
        let mut logits = vec![0.0; 5];
        logits[2] = 800.0;
        let (l, _) = cross_entropy_loss(&logits, 2).unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let logits = vec![0.2, -1.3, 2.2, 0.0];
        let (_, g) = cross_entropy_loss(&logits, 1).unwrap();
        let h = 1e-5;
        for i in 0..4 {
            let mut p = logits.clone();
            p[i] += h;
            let mut m = logits.clone();
            m[i] -= h;
            let fd = (cross_entropy_loss(&p, 1).unwrap().0 - cross_entropy_loss(&m, 1).unwrap().0)
                / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-8 * g[i].abs().max(1e-8) + 1e-10, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn invalid_class_is_rejected() {
        assert!(matches!(cross_entropy_loss(&[0.0, 1.0], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        assert!(mse_loss(&[vec![1.0]], &[vec![1.0, 2.0]]).is_err());
        assert!(mse_loss(&[vec![1.0]], &[]).is_err());
        assert!(sequence_loss(LossKind::CrossEntropy, &[vec![1.0]], SequenceTarget::Last(&[1.0])).is_err());
    }
}
