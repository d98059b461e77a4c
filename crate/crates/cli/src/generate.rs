use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use lem_core::solvers::{hmm_solve, reference_stiff_solve_with, FastSlowSystem, HmmSettings, Scheme};
use lem_core::tasks::{
    adding_problem, fhn_generate, mnist_load_idx, noise_padded_with, save_dataset, Dataset, FhnConfig,
    NoisePadConfig, SequenceBatch,
};

use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Adding,
    Fhn,
    Noisepad,
    MnistSeq,
    Fastslow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FastSlowSolver {
    Hmm,
    Euler,
    Rk4,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub task: Task,
    /// Output directory (created if missing).
    #[arg(long, default_value = "data")]
    pub out: PathBuf,
    /// Sequence length (adding).
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Total number of sequences; defaults depend on the task.
    #[arg(long)]
    pub count: Option<usize>,
    /// Train/val/test counts, e.g. `800,100,100`; defaults to 80/10/10 of
    /// `--count` (128/128/1024 for fhn).
    #[arg(long, value_delimiter = ',', num_args = 1..=3)]
    pub split: Option<Vec<usize>>,

    /// FitzHugh-Nagumo time-scale parameter.
    #[arg(long, default_value_t = 0.02)]
    pub fhn_tau: f64,
    #[arg(long, default_value_t = 0.5)]
    pub i_ext: f64,
    #[arg(long, default_value_t = 0.7)]
    pub a: f64,
    #[arg(long, default_value_t = 0.8)]
    pub b: f64,
    #[arg(long, default_value_t = 400.0)]
    pub t_end: f64,
    /// Samples per FHN trajectory.
    #[arg(long, default_value_t = 1000)]
    pub n_points: usize,

    #[arg(long, default_value_t = 32)]
    pub signal_len: usize,
    #[arg(long, default_value_t = 1000)]
    pub pad_to: usize,
    #[arg(long, default_value_t = 8)]
    pub features: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise_std: f64,

    /// MNIST IDX image file.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// MNIST IDX label file.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Apply the seeded pixel permutation (psMNIST).
    #[arg(long)]
    pub permute: bool,

    /// Fast-slow scale separation.
    #[arg(long, default_value_t = 1e-3)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = FastSlowSolver::Hmm)]
    pub solver: FastSlowSolver,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.025)]
    pub macro_dt: f64,
    #[arg(long, default_value_t = 0.5)]
    pub micro_dt: f64,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Reference solver step; defaults to τ/10.
    #[arg(long)]
    pub dt_fine: Option<f64>,
}

fn split_counts(args: &GenerateArgs, total: usize, default: Option<[usize; 3]>) -> Result<[usize; 3]> {
    if let Some(s) = &args.split {
        return match s[..] {
            [a, b, c] => Ok([a, b, c]),
            _ => bail!("--split needs three counts, got {}", s.len()),
        };
    }
    if let (Some(d), None) = (default, args.count) {
        return Ok(d);
    }
    let val = total / 10;
    Ok([total - 2 * val, val, val])
}

pub fn run(args: GenerateArgs, seed: u64) -> Result<()> {
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    if args.task == Task::Fastslow {
        return fastslow(&args, seed);
    }
    let (batch, default_split): (SequenceBatch, Option<[usize; 3]>) = match args.task {
        Task::Adding => (adding_problem(args.n, args.count.unwrap_or(1000), seed)?, None),
        Task::Fhn => {
            let cfg = FhnConfig {
                tau: args.fhn_tau,
                i_ext: args.i_ext,
                a: args.a,
                b: args.b,
                t_end: args.t_end,
                n_points: args.n_points,
                ..FhnConfig::default()
            };
            let default = [128, 128, 1024];
            let count = match (&args.split, args.count) {
                (Some(s), _) => s.iter().sum(),
                (None, Some(c)) => c,
                (None, None) => default.iter().sum(),
            };
            (fhn_generate(&cfg, count, seed)?, Some(default))
        }
        Task::Noisepad => {
            let cfg = NoisePadConfig {
                signal_len: args.signal_len,
                pad_to: args.pad_to,
                feature_dim: args.features,
                n_classes: args.classes,
                noise_std: args.noise_std,
            };
            (noise_padded_with(&cfg, args.count.unwrap_or(1000), seed)?, None)
        }
        Task::MnistSeq => {
            let (Some(images), Some(labels)) = (&args.images, &args.labels) else {
                bail!(lem_core::Error::Config("mnist-seq needs --images and --labels".into()));
            };
            let mut b = mnist_load_idx(images, labels, args.permute.then_some(seed))?;
            if let Some(c) = args.count {
                let idx: Vec<usize> = (0..c.min(b.len())).collect();
                b = b.subset(&idx)?;
            }
            (b, None)
        }
        Task::Fastslow => unreachable!(),
    };
    let [a, b, c] = split_counts(&args, batch.len(), default_split)?;
    let ds = Dataset::split(&batch, a, b, c)?;
    let sidecar = save_dataset(&args.out, &ds)?;
    let mut m = RunManifest::new("generate", seed, serde_json::to_value(&sidecar)?);
    for name in ["train.bin", "val.bin", "test.bin", "dataset.json"] {
        m.output(args.out.join(name));
    }
    m.write(&args.out)?;
    println!(
        "{}: {} train / {} val / {} test sequences of length {} written to {}",
        batch.meta.task,
        a,
        b,
        c,
        batch.n_steps(),
        args.out.display()
    );
    Ok(())
}

fn fastslow(args: &GenerateArgs, seed: u64) -> Result<()> {
    let sys = FastSlowSystem::linear(args.tau)?;
    let (psi0, phi0) = ([1.0], [1.0]);
    let (traj, settings) = match args.solver {
        FastSlowSolver::Hmm => {
            let n = (args.horizon / args.macro_dt).round().max(1.0) as usize;
            let s = HmmSettings {
                macro_dt: args.horizon / n as f64,
                micro_dt: args.micro_dt,
                k: args.k,
                n,
            };
            (hmm_solve(&sys, &psi0, &phi0, s)?, serde_json::to_value(s)?)
        }
        FastSlowSolver::Euler | FastSlowSolver::Rk4 => {
            let scheme = if args.solver == FastSlowSolver::Euler {
                Scheme::ForwardEuler
            } else {
                Scheme::Rk4
            };
            let dt = args.dt_fine.unwrap_or(args.tau / 10.0);
            let t = reference_stiff_solve_with(&sys, &psi0, &phi0, args.horizon, dt, scheme)?;
            (t, json!({ "scheme": scheme, "dt_fine": dt, "t_end": args.horizon }))
        }
    };
    let csv = args.out.join("trajectory.csv");
    traj.write_csv(&csv)?;
    let meta = json!({
        "system": "linear", "tau": args.tau, "phi0": phi0, "psi0": psi0,
        "solver": format!("{:?}", args.solver).to_lowercase(),
        "settings": settings,
        "macro_steps": traj.macro_steps,
        "micro_steps": traj.micro_steps_total,
        "evaluations": traj.evaluations,
    });
    let sidecar = args.out.join("trajectory.json");
    std::fs::write(&sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
    let mut m = RunManifest::new("generate", seed, meta);
    m.output(csv);
    m.output(sidecar);
    m.write(&args.out)?;
    println!(
        "fastslow: {} evaluations, final ψ = {:.6}",
        traj.evaluations,
        traj.final_psi()[0]
    );
    Ok(())
}
