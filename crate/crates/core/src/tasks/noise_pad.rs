use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::batch::{BatchMeta, SequenceBatch, Targets};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, rng_from_seed, uniform_from};

/// Stream id used to draw the class templates from the generator seed.
const TEMPLATE_STREAM: u64 = 0x7e3a;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePadConfig {
    pub signal_len: usize,
    pub pad_to: usize,
    pub feature_dim: usize,
    pub n_classes: usize,
    pub noise_std: f64,
}

impl NoisePadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pad_to <= self.signal_len {
            return Err(Error::Config(format!(
                "pad_to ({}) must exceed signal_len ({})",
                self.pad_to, self.signal_len
            )));
        }
        if self.signal_len == 0 || self.feature_dim == 0 || self.n_classes < 2 {
            return Err(Error::Config(
                "noise-padded classification needs signal_len, feature_dim >= 1 and n_classes >= 2".into(),
            ));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Config("noise_std must be non-negative".into()));
        }
        Ok(())
    }

    /// Class templates `[class][step][feature]`, `U(-1, 1)` per entry.
    pub fn templates(&self, seed: u64) -> Vec<Vec<Vec<f64>>> {
        let mut rng = rng_from_seed(derive_seed(seed, TEMPLATE_STREAM));
        (0..self.n_classes)
            .map(|_| {
                (0..self.signal_len)
                    .map(|_| uniform_from(&mut rng, -1.0, 1.0, self.feature_dim))
                    .collect()
            })
            .collect()
    }
}

/// Class-template signal plus Gaussian noise for the first `signal_len`
/// steps, then `U(0, 1)` padding up to `pad_to`. Templates come from a stream
/// derived from `seed`; sequence `i` uses seed `seed + i`.
pub fn noise_padded_classification(
    signal_len: usize,
    pad_to: usize,
    feature_dim: usize,
    n_classes: usize,
    count: usize,
    seed: u64,
) -> Result<SequenceBatch> {
    noise_padded_with(
        &NoisePadConfig {
            signal_len,
            pad_to,
            feature_dim,
            n_classes,
            noise_std: 0.1,
        },
        count,
        seed,
    )
}

pub fn noise_padded_with(config: &NoisePadConfig, count: usize, seed: u64) -> Result<SequenceBatch> {
    config.validate()?;
    let templates = config.templates(seed);
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let (inputs, labels): (Vec<_>, Vec<_>) = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(seed.wrapping_add(i));
            let class = rng.random_range(0..config.n_classes);
            let mut seq = Vec::with_capacity(config.pad_to);
            for step in &templates[class] {
                seq.push(step.iter().map(|v| v + noise.sample(&mut rng)).collect());
            }
            for _ in config.signal_len..config.pad_to {
                seq.push(uniform_from(&mut rng, 0.0, 1.0, config.feature_dim));
            }
            (seq, class)
        })
        .unzip();
    SequenceBatch::new(
        inputs,
        Targets::Classes(labels),
        BatchMeta {
            task: "noisepad".into(),
            n_steps: config.pad_to,
            seed,
            config: serde_json::to_value(config)?,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefix(seq: &[Vec<f64>], len: usize) -> Vec<f64> {
        seq[..len].concat()
    }

    fn nearest_centroid_accuracy(train: &SequenceBatch, test: &SequenceBatch, len: usize, k: usize) -> f64 {
        let Targets::Classes(tl) = &train.targets else { panic!() };
        let dim = len * train.feature_dim();
        let mut cent = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (s, &c) in train.inputs.iter().zip(tl) {
            for (a, b) in cent[c].iter_mut().zip(prefix(s, len)) {
                *a += b;
            }
            counts[c] += 1;
        }
        for (c, n) in cent.iter_mut().zip(&counts) {
            c.iter_mut().for_each(|v| *v /= (*n).max(1) as f64);
        }
        let Targets::Classes(vl) = &test.targets else { panic!() };
        let hits = test
            .inputs
            .iter()
            .zip(vl)
            .filter(|(s, &c)| {
                let p = prefix(s, len);
                let dist = |q: &Vec<f64>| p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                (0..k).min_by(|&a, &b| dist(&cent[a]).total_cmp(&dist(&cent[b]))).unwrap() == c
            })
            .count();
        hits as f64 / test.len() as f64
    }

    #[test]
    fn prefix_separates_classes() {
        let train = noise_padded_classification(8, 40, 3, 2, 200, 1).unwrap();
        // same templates (same seed), fresh samples via a shifted index range
        let all = noise_padded_classification(8, 40, 3, 2, 1200, 1).unwrap();
        let test = all.subset(&(200..1200).collect::<Vec<_>>()).unwrap();
        assert!(nearest_centroid_accuracy(&train, &test, 8, 2) >= 0.99);
    }

    #[test]
    fn shuffled_labels_give_chance() {
        // labels drawn independently of the inputs carry no recoverable signal
        let relabel = |b: &SequenceBatch, seed: u64| {
            let mut out = b.clone();
            if let Targets::Classes(l) = &mut out.targets {
                let mut rng = rng_from_seed(seed);
                l.iter_mut().for_each(|x| *x = rng.random_range(0..2));
            }
            out
        };
        let train = relabel(&noise_padded_classification(8, 40, 3, 2, 400, 4).unwrap(), 99);
        let test = relabel(&noise_padded_classification(8, 40, 3, 2, 2000, 5).unwrap(), 98);
        let acc = nearest_centroid_accuracy(&train, &test, 8, 2);
        assert!((acc - 0.5).abs() < 0.05, "{acc}");
    }

    #[test]
    fn padding_is_unit_uniform() {
        let b = noise_padded_classification(4, 30, 2, 3, 50, 2).unwrap();
        for s in &b.inputs {
            assert!(s[4..].iter().flatten().all(|v| (0.0..1.0).contains(v)));
        }
        assert_eq!(b.n_steps(), 30);
    }

    #[test]
    fn pad_must_exceed_signal() {
        assert!(noise_padded_classification(8, 8, 1, 2, 10, 0).is_err());
    }
}
