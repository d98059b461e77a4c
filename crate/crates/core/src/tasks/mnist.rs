//! IDX ingestion for MNIST, flattened row by row into 1-feature sequences.

use std::path::Path;

use rand::seq::SliceRandom;

use super::batch::{BatchMeta, SequenceBatch, Targets};
use crate::error::{Error, Result};
use crate::numerics::rng_from_seed;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("{what}: truncated header")))
}

/// Parsed image file: `count` images of `rows × cols` bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<Vec<u8>>,
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0, "IDX images")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "IDX images: bad magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4, "IDX images")? as usize;
    let rows = be_u32(bytes, 8, "IDX images")? as usize;
    let cols = be_u32(bytes, 12, "IDX images")? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * size {
        return Err(Error::Format(format!(
            "IDX images: expected {} pixel bytes for {count} images of {rows}x{cols}, found {}",
            count * size,
            body.len()
        )));
    }
    let pixels = if size == 0 {
        vec![Vec::new(); count]
    } else {
        body.chunks(size).map(<[u8]>::to_vec).collect()
    };
    Ok(IdxImages { rows, cols, pixels })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, "IDX labels")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "IDX labels: bad magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4, "IDX labels")? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Format(format!(
            "IDX labels: header says {count} labels, found {}",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

/// The fixed pixel permutation used for the permuted variant.
pub fn pixel_permutation(len: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    perm
}

/// Sequences of `rows·cols` steps with one feature in `[0, 1]`, optionally
/// with one fixed pixel permutation applied to every image.
pub fn mnist_from_bytes(images: &[u8], labels: &[u8], permutation_seed: Option<u64>) -> Result<SequenceBatch> {
    let imgs = parse_idx_images(images)?;
    let labels = parse_idx_labels(labels)?;
    if imgs.pixels.len() != labels.len() {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            imgs.pixels.len(),
            labels.len()
        )));
    }
    let len = imgs.rows * imgs.cols;
    let perm = permutation_seed.map(|s| pixel_permutation(len, s));
    let inputs = imgs
        .pixels
        .iter()
        .map(|px| {
            (0..len)
                .map(|k| {
                    let src = perm.as_ref().map_or(k, |p| p[k]);
                    vec![f64::from(px[src]) / 255.0]
                })
                .collect()
        })
        .collect();
    let task = if permutation_seed.is_some() { "psmnist" } else { "smnist" };
    SequenceBatch::new(
        inputs,
        Targets::Classes(labels.into_iter().map(usize::from).collect()),
        BatchMeta {
            task: task.into(),
            n_steps: len,
            seed: permutation_seed.unwrap_or(0),
            config: serde_json::json!({ "rows": imgs.rows, "cols": imgs.cols, "permutation_seed": permutation_seed }),
        },
    )
}

pub fn mnist_load_idx(images_path: &Path, labels_path: &Path, permutation_seed: Option<u64>) -> Result<SequenceBatch> {
    let images = std::fs::read(images_path)?;
    let labels = std::fs::read(labels_path)?;
    mnist_from_bytes(&images, &labels, permutation_seed)
}

/// Serialises images and labels in IDX layout; used to build fixtures.
pub fn write_idx(images: &[Vec<u8>], rows: usize, cols: usize, labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let mut im = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IDX_IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        im.extend_from_slice(&v.to_be_bytes());
    }
    for px in images {
        im.extend_from_slice(px);
    }
    let mut lb = Vec::with_capacity(8 + labels.len());
    for v in [IDX_LABELS_MAGIC, labels.len() as u32] {
        lb.extend_from_slice(&v.to_be_bytes());
    }
    lb.extend_from_slice(labels);
    (im, lb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<u8>, Vec<u8>) {
        let images: Vec<Vec<u8>> = (0..5u8).map(|i| (0..12u8).map(|k| i * 12 + k * 4).collect()).collect();
        write_idx(&images, 3, 4, &[3, 1, 4, 1, 5])
    }

    #[test]
    fn parses_synthetic_file() {
        let (im, lb) = fixture();
        let b = mnist_from_bytes(&im, &lb, None).unwrap();
        assert_eq!((b.len(), b.n_steps(), b.feature_dim()), (5, 12, 1));
        assert_eq!(b.targets, Targets::Classes(vec![3, 1, 4, 1, 5]));
        // row-major flattening
        assert_eq!(b.inputs[1][5][0], f64::from(12u8 + 20) / 255.0);
        assert!(b.inputs.iter().flatten().all(|u| (0.0..=1.0).contains(&u[0])));
    }

    #[test]
    fn permutation_is_fixed_and_shared() {
        let (im, lb) = fixture();
        let a = mnist_from_bytes(&im, &lb, Some(7)).unwrap();
        let b = mnist_from_bytes(&im, &lb, Some(7)).unwrap();
        assert_eq!(a, b);
        let perm = pixel_permutation(12, 7);
        let plain = mnist_from_bytes(&im, &lb, None).unwrap();
        for (p, q) in a.inputs.iter().zip(&plain.inputs) {
            for k in 0..12 {
                assert_eq!(p[k], q[perm[k]]);
            }
        }
    }

    #[test]
    fn format_errors() {
        let (mut im, lb) = fixture();
        assert!(matches!(mnist_from_bytes(&lb, &lb, None), Err(Error::Format(_))));
        assert!(matches!(mnist_from_bytes(&im, &im, None), Err(Error::Format(_))));
        let (_, short_labels) = write_idx(&[], 3, 4, &[1, 2]);
        assert!(matches!(mnist_from_bytes(&im, &short_labels, None), Err(Error::Format(_))));
        im.pop();
        assert!(matches!(mnist_from_bytes(&im, &lb, None), Err(Error::Format(_))));
        assert!(matches!(parse_idx_labels(&[0, 0]), Err(Error::Format(_))));
    }
}
