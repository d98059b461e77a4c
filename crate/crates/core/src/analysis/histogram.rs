//! Distribution of the learned per-neuron time steps `𝚫t_n = Δt σ̂(A)` and
//! `𝚫t̄_n = Δt σ̂(B)` over a set of input sequences.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lem::{forward_sequence, LemParams, LemState};
use crate::numerics::{fit_power_law_with, DEFAULT_BINS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `log10(max / min)`.
    pub orders_of_magnitude: f64,
    /// `None` when the values are too concentrated to fit.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateHistogram {
    /// Every `𝚫t_n` entry, sequence-major then step then neuron.
    #[serde(skip)]
    pub dt: Vec<f64>,
    #[serde(skip)]
    pub dt_bar: Vec<f64>,
    pub dt_stats: GateStats,
    pub dt_bar_stats: GateStats,
    /// Span of both families together.
    pub orders_of_magnitude: f64,
}

fn stats(values: &[f64]) -> GateStats {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    GateStats {
        count: values.len(),
        min,
        max,
        mean: values.iter().sum::<f64>() / values.len() as f64,
        orders_of_magnitude: (max / min).log10(),
        exponent: fit_power_law_with(values, DEFAULT_BINS).ok().map(|f| f.exponent),
    }
}

/// Runs every sequence from the zero state and collects both gate vectors at
/// every step. Collects exactly `2 · d · N · sequences` values.
pub fn delta_t_histogram(params: &LemParams, sequences: &[Vec<Vec<f64>>]) -> Result<GateHistogram> {
    if sequences.is_empty() {
        return Err(Error::Shape("gate histogram needs at least one sequence".into()));
    }
    let d = params.hidden();
    let per: Vec<(Vec<f64>, Vec<f64>)> = sequences
        .par_iter()
        .map(|s| {
            let (_, caches) = forward_sequence(params, s, &LemState::zeros(d))?;
            let dt = caches.iter().flat_map(|c| c.gate_dt.iter().copied()).collect();
            let dt_bar = caches.iter().flat_map(|c| c.gate_dt_bar.iter().copied()).collect();
            Ok((dt, dt_bar))
        })
        .collect::<Result<_>>()?;
    let (dt, dt_bar): (Vec<Vec<f64>>, Vec<Vec<f64>>) = per.into_iter().unzip();
    let dt: Vec<f64> = dt.concat();
    let dt_bar: Vec<f64> = dt_bar.concat();
    let (a, b) = (stats(&dt), stats(&dt_bar));
    let orders = (a.max.max(b.max) / a.min.min(b.min)).log10();
    Ok(GateHistogram {
        dt,
        dt_bar,
        dt_stats: a,
        dt_bar_stats: b,
        orders_of_magnitude: orders,
    })
}

/// Raw values as `family,value` rows.
pub fn write_gate_csv(path: &Path, hist: &GateHistogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["family", "value"])?;
    for (name, vals) in [("dt", &hist.dt), ("dt_bar", &hist.dt_bar)] {
        for v in vals {
            w.write_record([name, &format!("{v:e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}
