//! Sequence tasks: the adding problem, FitzHugh–Nagumo trajectories,
//! noise-padded classification and MNIST ingestion, plus ODE integrators and
//! on-disk datasets.

mod adding;
mod batch;
mod dataset;
mod fhn;
mod mnist;
mod noise_pad;
pub mod ode;

pub use adding::{adding_problem, adding_sequence, ADDING_BASELINE_MSE};
pub use batch::{BatchMeta, SequenceBatch, Targets};
pub use dataset::{
    export_csv, load_dataset, save_dataset, Dataset, DatasetSidecar, SplitInfo, TargetKind, SIDECAR_NAME,
    SPLIT_NAMES,
};
pub use fhn::{fhn_generate, FhnConfig};
pub use mnist::{
    mnist_from_bytes, mnist_load_idx, parse_idx_images, parse_idx_labels, pixel_permutation, write_idx, IdxImages,
    IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use noise_pad::{noise_padded_classification, noise_padded_with, NoisePadConfig};
pub use ode::{linspace, rk45_integrate, rk4_integrate, OdeSolution};
