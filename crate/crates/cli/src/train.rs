use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use lem_core::tasks::{load_dataset, Targets};
use lem_core::training::{
    load_checkpoint, save_checkpoint, write_metrics_csv, write_summary_json, Checkpoint, EpochMetrics, LossKind,
    ModelKind, Readout, TrainConfig, Trainer,
};
use lem_core::Error;

use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON training config; omitted fields fall back to the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory written by `lem generate`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub delta_t: Option<f64>,
    /// Continue the run stored in `--out` (last.ckpt, best.ckpt, history.json).
    #[arg(long)]
    pub resume: bool,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    match s {
        "lem" => Ok(ModelKind::Lem),
        "lstm" => Ok(ModelKind::Lstm),
        _ => Err(format!("unknown model `{s}` (expected lem or lstm)")),
    }
}

fn base_config(args: &TrainArgs, targets: &Targets) -> Result<serde_json::Value> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<serde_json::Value>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => serde_json::json!({}),
    };
    let obj = cfg
        .as_object_mut()
        .ok_or_else(|| Error::Config("training config must be a JSON object".into()))?;
    let (loss, readout) = match targets {
        Targets::Classes(_) => (LossKind::CrossEntropy, Readout::Last),
        Targets::Values(_) => (LossKind::Mse, Readout::Last),
        Targets::PerStep(_) => (LossKind::Mse, Readout::PerStep),
    };
    let defaults = [
        ("hidden", serde_json::json!(32)),
        ("learning_rate", serde_json::json!(1e-3)),
        ("batch_size", serde_json::json!(32)),
        ("epochs", serde_json::json!(10)),
        ("loss", serde_json::to_value(loss)?),
        ("readout", serde_json::to_value(readout)?),
    ];
    for (k, v) in defaults {
        obj.entry(k).or_insert(v);
    }
    let overrides = [
        ("model", args.model.map(serde_json::to_value).transpose()?),
        ("hidden", args.hidden.map(Into::into)),
        ("epochs", args.epochs.map(Into::into)),
        ("learning_rate", args.lr.map(Into::into)),
        ("batch_size", args.batch_size.map(Into::into)),
        ("delta_t", args.delta_t.map(Into::into)),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            obj.insert(k.into(), v);
        }
    }
    Ok(cfg)
}

fn resume_trainer(out: &Path, config: TrainConfig) -> Result<Trainer> {
    let current = load_checkpoint(&out.join("last.ckpt")).context("loading last.ckpt")?;
    let best = load_checkpoint(&out.join("best.ckpt")).context("loading best.ckpt")?.model;
    let text = std::fs::read_to_string(out.join("history.json")).context("reading history.json")?;
    let history: Vec<EpochMetrics> =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("history.json: {e}")))?;
    Ok(Trainer::resume(config, current, best, history)?)
}

fn write_state(out: &Path, trainer: &Trainer) -> Result<()> {
    save_checkpoint(&out.join("last.ckpt"), &trainer.checkpoint())?;
    save_checkpoint(
        &out.join("best.ckpt"),
        &Checkpoint {
            model: trainer.best.clone(),
            trailer: None,
        },
    )?;
    std::fs::write(out.join("history.json"), serde_json::to_string_pretty(&trainer.history)? + "\n")?;
    write_metrics_csv(&out.join("metrics.csv"), &trainer.history)?;
    Ok(())
}

pub fn run(args: TrainArgs, seed: Option<u64>, deterministic: bool) -> Result<()> {
    let ds = load_dataset(&args.data).with_context(|| format!("loading dataset from {}", args.data.display()))?;
    let mut value = base_config(&args, &ds.train.targets)?;
    if let Some(s) = seed {
        value["seed"] = s.into();
    }
    if deterministic {
        value["deterministic"] = true.into();
    }
    let config: TrainConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut trainer = if args.resume {
        resume_trainer(&args.out, config.clone())?
    } else {
        Trainer::new(config.clone(), &ds.train)?
    };
    println!(
        "{:?} d={} params={} on {} ({} train / {} val / {} test)",
        config.model,
        config.hidden,
        trainer.model.param_count(),
        ds.train.meta.task,
        ds.train.len(),
        ds.val.len(),
        ds.test.len()
    );
    while !trainer.is_finished() {
        let row = *trainer.run_epoch(&ds.train, &ds.val, &ds.test)?;
        println!(
            "epoch {:>4}  lr {:.2e}  train {:.5e}  val {:.5e}  test {:.5e}",
            row.epoch, row.learning_rate, row.train_loss, row.val_metric, row.test_metric
        );
        write_state(&args.out, &trainer)?;
    }
    let summary = trainer.summary(&ds.test)?;
    write_summary_json(&args.out.join("summary.json"), &summary)?;
    println!(
        "best epoch {}: val {:.5e}, test {:.5e}",
        summary.best_epoch, summary.best_val.metric, summary.test.metric
    );

    let mut m = RunManifest::new("train", config.seed, serde_json::to_value(&config)?);
    for name in ["best.ckpt", "last.ckpt", "metrics.csv", "history.json", "summary.json"] {
        m.output(args.out.join(name));
    }
    m.write(&args.out)?;
    Ok(())
}
