//! On-disk datasets: one little-endian `f64` binary per split plus a JSON
//! sidecar describing shapes and the generator settings.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::batch::{BatchMeta, SequenceBatch, Targets};
use crate::error::{Error, Result};

pub const SIDECAR_NAME: &str = "dataset.json";
pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: SequenceBatch,
    pub val: SequenceBatch,
    pub test: SequenceBatch,
}

impl Dataset {
    /// Splits one batch into consecutive train/val/test blocks.
    pub fn split(batch: &SequenceBatch, n_train: usize, n_val: usize, n_test: usize) -> Result<Self> {
        if n_train + n_val + n_test > batch.len() || n_train == 0 || n_val == 0 || n_test == 0 {
            return Err(Error::Config(format!(
                "cannot split {} sequences into {n_train}/{n_val}/{n_test}",
                batch.len()
            )));
        }
        let range = |a: usize, b: usize| (a..b).collect::<Vec<_>>();
        Ok(Self {
            train: batch.subset(&range(0, n_train))?,
            val: batch.subset(&range(n_train, n_train + n_val))?,
            test: batch.subset(&range(n_train + n_val, n_train + n_val + n_test))?,
        })
    }

    pub fn splits(&self) -> [(&'static str, &SequenceBatch); 3] {
        [("train", &self.train), ("val", &self.val), ("test", &self.test)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Values,
    PerStep,
    Classes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub file: String,
    pub count: usize,
    pub n_steps: usize,
    pub feature_dim: usize,
    pub target_kind: TargetKind,
    pub target_width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub format: String,
    pub meta: BatchMeta,
    pub train: SplitInfo,
    pub val: SplitInfo,
    pub test: SplitInfo,
}

const FORMAT: &str = "lem-dataset-v1";

fn write_f64s<W: Write>(w: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_split(path: &Path, batch: &SequenceBatch) -> Result<SplitInfo> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_f64s(&mut w, batch.inputs.iter().flatten().flatten().copied())?;
    let (kind, width) = match &batch.targets {
        Targets::Values(v) => {
            write_f64s(&mut w, v.iter().flatten().copied())?;
            (TargetKind::Values, batch.targets.width())
        }
        Targets::PerStep(v) => {
            write_f64s(&mut w, v.iter().flatten().flatten().copied())?;
            (TargetKind::PerStep, batch.targets.width())
        }
        Targets::Classes(v) => {
            for &c in v {
                w.write_all(&(c as u64).to_le_bytes())?;
            }
            (TargetKind::Classes, 1)
        }
    };
    w.flush()?;
    Ok(SplitInfo {
        file: path.file_name().unwrap().to_string_lossy().into_owned(),
        count: batch.len(),
        n_steps: batch.n_steps(),
        feature_dim: batch.feature_dim(),
        target_kind: kind,
        target_width: width,
    })
}

fn read_split(dir: &Path, info: &SplitInfo, meta: &BatchMeta) -> Result<SequenceBatch> {
    let mut bytes = Vec::new();
    fs::File::open(dir.join(&info.file))?.read_to_end(&mut bytes)?;
    let n_in = info.count * info.n_steps * info.feature_dim;
    let n_tg = match info.target_kind {
        TargetKind::Values => info.count * info.target_width,
        TargetKind::PerStep => info.count * info.n_steps * info.target_width,
        TargetKind::Classes => info.count,
    };
    if bytes.len() != 8 * (n_in + n_tg) {
        return Err(Error::Format(format!(
            "{}: expected {} bytes, found {}",
            info.file,
            8 * (n_in + n_tg),
            bytes.len()
        )));
    }
    let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().unwrap() };
    let f = |k: usize| f64::from_le_bytes(word(k));
    let (n, m, w) = (info.n_steps, info.feature_dim, info.target_width);
    let inputs = (0..info.count)
        .map(|i| {
            (0..n)
                .map(|s| (0..m).map(|j| f((i * n + s) * m + j)).collect())
                .collect()
        })
        .collect();
    let targets = match info.target_kind {
        TargetKind::Values => {
            Targets::Values((0..info.count).map(|i| (0..w).map(|j| f(n_in + i * w + j)).collect()).collect())
        }
        TargetKind::PerStep => Targets::PerStep(
            (0..info.count)
                .map(|i| {
                    (0..n)
                        .map(|s| (0..w).map(|j| f(n_in + (i * n + s) * w + j)).collect())
                        .collect()
                })
                .collect(),
        ),
        TargetKind::Classes => Targets::Classes(
            (0..info.count)
                .map(|i| u64::from_le_bytes(word(n_in + i)) as usize)
                .collect(),
        ),
    };
    SequenceBatch::new(inputs, targets, meta.clone())
}

pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<DatasetSidecar> {
    fs::create_dir_all(dir)?;
    let mut infos = Vec::new();
    for (name, batch) in dataset.splits() {
        infos.push(write_split(&dir.join(format!("{name}.bin")), batch)?);
    }
    let mut it = infos.into_iter();
    let sidecar = DatasetSidecar {
        format: FORMAT.into(),
        meta: dataset.train.meta.clone(),
        train: it.next().unwrap(),
        val: it.next().unwrap(),
        test: it.next().unwrap(),
    };
    fs::write(dir.join(SIDECAR_NAME), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(dir.join(SIDECAR_NAME))?;
    let sidecar: DatasetSidecar = serde_json::from_str(&text)?;
    if sidecar.format != FORMAT {
        return Err(Error::Format(format!(
            "unsupported dataset format {:?}, expected {FORMAT:?}",
            sidecar.format
        )));
    }
    Ok(Dataset {
        train: read_split(dir, &sidecar.train, &sidecar.meta)?,
        val: read_split(dir, &sidecar.val, &sidecar.meta)?,
        test: read_split(dir, &sidecar.test, &sidecar.meta)?,
    })
}

/// Long-format CSV: `sequence, step, u0.., t0..` (targets only on rows where
/// they apply; class ids and final-value targets sit on the last step).
pub fn export_csv(path: &Path, batch: &SequenceBatch) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let m = batch.feature_dim();
    let tw = batch.targets.width();
    let mut header = vec!["sequence".to_string(), "step".to_string()];
    header.extend((0..m).map(|j| format!("u{j}")));
    header.extend((0..tw).map(|j| format!("target{j}")));
    w.write_record(&header)?;
    let n = batch.n_steps();
    for (i, seq) in batch.inputs.iter().enumerate() {
        for (s, u) in seq.iter().enumerate() {
            let mut row = vec![i.to_string(), s.to_string()];
            row.extend(u.iter().map(|v| v.to_string()));
            let target: Vec<String> = match &batch.targets {
                Targets::PerStep(t) => t[i][s].iter().map(|v| v.to_string()).collect(),
                Targets::Values(t) if s + 1 == n => t[i].iter().map(|v| v.to_string()).collect(),
                Targets::Classes(t) if s + 1 == n => vec![t[i].to_string()],
                _ => vec![String::new(); tw],
            };
            row.extend(target);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
