use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde_json::json;

use lem_core::analysis::{
    equivalence_suite, gradcheck_suite, hmm_suite, prop1_suite, prop2_suite, prop3_scaling_with, GradcheckSettings,
    VerificationReport, WeightFamily,
};

use crate::manifest::RunManifest;
use crate::VerificationFailed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Prop1,
    Prop2,
    Prop3,
    Gradcheck,
    Equivalence,
    Hmm,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Wz,
    Wy,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: Suite,
    /// Hidden width (gradcheck: largest d drawn; prop3, equivalence: fixed d).
    #[arg(long)]
    pub d: Option<usize>,
    /// Sequence length (gradcheck: longest N drawn; prop1, prop3: fixed N).
    #[arg(long)]
    pub n: Option<usize>,
    /// Trajectory length for the equivalence suite.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Number of random models or instances.
    #[arg(long)]
    pub models: Option<usize>,
    /// Weight family of the scaling study.
    #[arg(long, value_enum, default_value_t = Family::Wz)]
    pub family: Family,
    /// Largest Δt drawn by prop1.
    #[arg(long, default_value_t = 0.5)]
    pub delta_t_max: f64,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
}

const PROP3_LAGS: [usize; 4] = [10, 25, 50, 100];
const PROP3_STEPS: [f64; 5] = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
const PROP3_MODELS: usize = 16;

fn run_suite(suite: Suite, args: &VerifyArgs, seed: u64) -> Result<VerificationReport> {
    Ok(match suite {
        Suite::Prop1 => prop1_suite(args.models.unwrap_or(100), args.n.unwrap_or(200), args.delta_t_max, seed)?,
        Suite::Prop2 => prop2_suite(args.models.unwrap_or(50), seed)?,
        Suite::Prop3 => {
            let family = match args.family {
                Family::Wz => WeightFamily::Wz,
                Family::Wy => WeightFamily::Wy,
            };
            let n = args.n.unwrap_or(200);
            let lags: Vec<usize> = PROP3_LAGS.iter().copied().filter(|&k| k <= n / 2).collect();
            let models = args.models.unwrap_or(PROP3_MODELS);
            let r = prop3_scaling_with(family, args.d.unwrap_or(8), n, &lags, &PROP3_STEPS, models, seed)?;
            let mut report = r.report;
            report.notes.push(format!(
                "pooled slope {:?}, per-lag slopes {:?}",
                r.slope, r.per_k_slopes
            ));
            report
        }
        Suite::Gradcheck => {
            let mut s = GradcheckSettings::default();
            if let Some(d) = args.d {
                s.d_max = d;
                s.d_min = s.d_min.min(d);
            }
            if let Some(n) = args.n {
                s.n_max = n;
                s.n_min = s.n_min.min(n);
            }
            if let Some(m) = args.models {
                s.instances = m;
            }
            gradcheck_suite(s, seed)?
        }
        Suite::Equivalence => equivalence_suite(args.steps, args.d.unwrap_or(4), 2, 1e-9, seed)?,
        Suite::Hmm => hmm_suite()?,
        Suite::All => unreachable!("expanded by the caller"),
    })
}

fn print_report(r: &VerificationReport) {
    let status = if r.pass { "PASS" } else { "FAIL" };
    println!(
        "{status} {}: {} cases, worst margin {:.3e}",
        r.suite, r.cases_run, r.worst_margin
    );
    if let Some(worst) = r.cases.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)) {
        println!("  worst: {} observed {:.6e} bound {:.6e}", worst.label, worst.observed, worst.bound);
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
    for c in r.failures() {
        eprintln!(
            "  failed: {} observed {:.6e} bound {:.6e} {}",
            c.label, c.observed, c.bound, c.extra
        );
    }
}

pub fn run(args: VerifyArgs, seed: u64) -> Result<()> {
    let suites = match args.suite {
        Suite::All => vec![
            Suite::Prop1,
            Suite::Prop2,
            Suite::Prop3,
            Suite::Gradcheck,
            Suite::Equivalence,
            Suite::Hmm,
        ],
        s => vec![s],
    };
    let mut reports = Vec::new();
    for s in suites {
        let r = run_suite(s, &args, seed)?;
        print_report(&r);
        reports.push(r);
    }
    let body = if reports.len() == 1 {
        serde_json::to_value(&reports[0])?
    } else {
        json!({ "pass": reports.iter().all(|r| r.pass), "suites": reports })
    };
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&args.out, serde_json::to_string_pretty(&body)? + "\n")?;

    let config = json!({
        "suite": format!("{:?}", args.suite).to_lowercase(),
        "d": args.d, "n": args.n, "steps": args.steps, "models": args.models,
        "family": format!("{:?}", args.family).to_lowercase(),
        "delta_t_max": args.delta_t_max,
    });
    let mut m = RunManifest::new("verify", seed, config);
    m.output(args.out.clone());
    let dir = args.out.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), PathBuf::from);
    m.write(&dir)?;

    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.suite.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(VerificationFailed(failed.join(", ")).into())
    }
}
