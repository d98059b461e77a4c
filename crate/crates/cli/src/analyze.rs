use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use lem_core::analysis::{delta_t_histogram, write_gate_csv};
use lem_core::tasks::load_dataset;
use lem_core::training::load_lem;

use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// LEM checkpoint (LSTM checkpoints carry no gates and are rejected).
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
    /// Use at most this many sequences of the split.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
}

pub fn run(args: AnalyzeArgs, seed: u64) -> Result<()> {
    let params = load_lem(&args.checkpoint).with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let ds = load_dataset(&args.data).with_context(|| format!("loading dataset from {}", args.data.display()))?;
    let batch = match args.split {
        Split::Train => &ds.train,
        Split::Val => &ds.val,
        Split::Test => &ds.test,
    };
    let take = args.limit.unwrap_or(batch.len()).min(batch.len());
    let hist = delta_t_histogram(&params, &batch.inputs[..take])?;

    std::fs::create_dir_all(&args.out)?;
    let csv = args.out.join("gates.csv");
    let json = args.out.join("gates.json");
    write_gate_csv(&csv, &hist)?;
    std::fs::write(&json, serde_json::to_string_pretty(&hist)? + "\n")?;
    println!(
        "𝚫t: [{:.3e}, {:.3e}] ({:.2} decades, exponent {:?})",
        hist.dt_stats.min, hist.dt_stats.max, hist.dt_stats.orders_of_magnitude, hist.dt_stats.exponent
    );
    println!(
        "𝚫t̄: [{:.3e}, {:.3e}] ({:.2} decades, exponent {:?})",
        hist.dt_bar_stats.min, hist.dt_bar_stats.max, hist.dt_bar_stats.orders_of_magnitude, hist.dt_bar_stats.exponent
    );
    println!("combined span {:.2} decades", hist.orders_of_magnitude);

    let config = serde_json::json!({
        "checkpoint": args.checkpoint, "data": args.data,
        "split": format!("{:?}", args.split).to_lowercase(), "sequences": take,
    });
    let mut m = RunManifest::new("analyze", seed, config);
    m.output(csv);
    m.output(json);
    m.write(&args.out)?;
    Ok(())
}
