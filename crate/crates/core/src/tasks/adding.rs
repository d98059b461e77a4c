use rand::Rng;
use rayon::prelude::*;

use super::batch::{BatchMeta, SequenceBatch, Targets};
use crate::error::{Error, Result};
use crate::numerics::rng_from_seed;

/// MSE of always predicting 1 when the target is a sum of two `U(0, 1)`
/// draws: the variance `1/6`.
pub const ADDING_BASELINE_MSE: f64 = 1.0 / 6.0;

/// One adding-problem sequence: values `U(0, 1)` in channel 0, a single
/// marker `1` in channel 1 in each half, target the sum of the two marked
/// values.
pub fn adding_sequence(n: usize, seed: u64) -> (Vec<Vec<f64>>, f64) {
    let mut rng = rng_from_seed(seed);
    let half = n / 2;
    let mut seq: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), 0.0]).collect();
    let first = rng.random_range(0..half);
    let second = half + rng.random_range(0..n - half);
    seq[first][1] = 1.0;
    seq[second][1] = 1.0;
    let target = seq[first][0] + seq[second][0];
    (seq, target)
}

/// `count` sequences of length `n`; sequence `i` is drawn from seed
/// `seed + i`, so serial and parallel generation agree.
pub fn adding_problem(n: usize, count: usize, seed: u64) -> Result<SequenceBatch> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!("adding problem needs an even N >= 2, got {n}")));
    }
    if count == 0 {
        return Err(Error::Config("adding problem needs count >= 1".into()));
    }
    let (inputs, targets): (Vec<_>, Vec<_>) = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let (s, t) = adding_sequence(n, seed.wrapping_add(i));
            (s, vec![t])
        })
        .unzip();
    SequenceBatch::new(
        inputs,
        Targets::Values(targets),
        BatchMeta {
            task: "adding".into(),
            n_steps: n,
            seed,
            config: serde_json::json!({ "n": n, "count": count }),
        },
    )
}
