//! The `gmm` subcommand: fit the synthetic mixture benchmark with the
//! standard, sparse, and hard methods (or one of them), then write the
//! metrics CSV, a per-run parameter checkpoint, and a fitted-scatter plot
//! per method.

use anyhow::Context as _;

use fyvi::clustering::{
    aggregate, metrics_csv, run_single, BenchmarkSpec, Method, MetricsReport, RunMetrics,
};
use fyvi::gmm::{write_checkpoint, DEFAULT_MAX_ITER};
use fyvi::svg::write_cluster_scatter;
use fyvi::Regularizer64;

use crate::settings::{entry, write_manifest};
use crate::{usage, Context, GmmArgs};

const KNOWN_KEYS: [&str; 4] = ["method", "rho", "seeds", "max-iter"];

struct Arm {
    label: &'static str,
    rho_column: f64,
    omega: Regularizer64,
}

pub fn run(context: &Context, args: &GmmArgs) -> anyhow::Result<()> {
    context.settings.require_known(&KNOWN_KEYS)?;
    let method: Option<String> = context.settings.resolve_opt(args.method.clone(), "method")?;
    let rho: Option<f64> = context.settings.resolve_opt(args.rho, "rho")?;
    let seed_count: u64 = context.settings.resolve(args.seeds, "seeds", 5)?;
    let max_iter: usize = context
        .settings
        .resolve(args.max_iter, "max-iter", DEFAULT_MAX_ITER)?;
    if seed_count == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let arms = select_arms(method.as_deref(), rho)?;

    write_manifest(
        &context.out,
        "gmm",
        context.config_path.as_deref(),
        &[
            entry("seed", context.seed),
            entry("out", context.out.display()),
            entry("method", method.as_deref().unwrap_or("all")),
            entry(
                "rho",
                rho.map_or_else(|| "default".to_string(), |r| r.to_string()),
            ),
            entry("seeds", seed_count),
            entry("max-iter", max_iter),
        ],
    )?;

    let base = BenchmarkSpec::with_seed(context.seed);
    let seeds: Vec<u64> = (0..seed_count).map(|i| context.seed + i).collect();
    let mut reports: Vec<MetricsReport> = Vec::new();
    for arm in &arms {
        let mut runs: Vec<RunMetrics> = Vec::new();
        for (position, &seed) in seeds.iter().enumerate() {
            let (metrics, data, state, _, _) =
                run_single(&base, seed, arm.label, arm.rho_column, arm.omega, max_iter)
                    .with_context(|| {
                        format!("mixture benchmark failed: method {} seed {seed}", arm.label)
                    })?;
            write_checkpoint(
                &state,
                &context
                    .out
                    .join(format!("checkpoint_{}_seed{seed}.txt", arm.label)),
            )?;
            if position == 0 {
                let labels = data.labels().expect("benchmark is labeled").to_vec();
                write_cluster_scatter(
                    &context.out.join(format!("fit_{}_seed{seed}.svg", arm.label)),
                    &format!("{} fit, seed {seed}", arm.label),
                    &data,
                    &labels,
                    &state,
                )?;
            }
            runs.push(metrics);
        }
        reports.push(aggregate(arm.label, arm.rho_column, runs));
    }

    let csv = metrics_csv(&reports);
    std::fs::write(context.out.join("metrics.csv"), &csv)?;
    for report in &reports {
        println!(
            "{:<7} rho {:<4} ami {:.3} ± {:.3}  ari {:.3} ± {:.3}  silhouette {:.3} ± {:.3}  \
             sparsity {:.3}",
            report.label,
            report.rho,
            report.ami.mean,
            report.ami.std,
            report.ari.mean,
            report.ari.std,
            report.silhouette.mean,
            report.silhouette.std,
            report.sparsity.mean,
        );
    }
    println!("wrote {}", context.out.join("metrics.csv").display());
    Ok(())
}

fn select_arms(method: Option<&str>, rho: Option<f64>) -> anyhow::Result<Vec<Arm>> {
    let standard = |rho: Option<f64>| -> anyhow::Result<Arm> {
        let r = rho.unwrap_or(1.0);
        Ok(Arm {
            label: Method::Standard.label(),
            rho_column: r,
            omega: tsallis(r)?,
        })
    };
    let sparse = |rho: Option<f64>| -> anyhow::Result<Arm> {
        let r = rho.unwrap_or(2.0);
        Ok(Arm {
            label: Method::Sparse.label(),
            rho_column: r,
            omega: tsallis(r)?,
        })
    };
    let hard = |rho: Option<f64>| -> anyhow::Result<Arm> {
        if rho.is_some() {
            return Err(usage("--rho does not apply to the hard method"));
        }
        Ok(Arm {
            label: Method::Hard.label(),
            rho_column: 0.0,
            omega: Regularizer64::Zero,
        })
    };
    match method {
        None if rho.is_some() => Err(usage("--rho requires --method")),
        None => Ok(vec![standard(None)?, sparse(None)?, hard(None)?]),
        Some("std") => Ok(vec![standard(rho)?]),
        Some("sparse") => Ok(vec![sparse(rho)?]),
        Some("hard") => Ok(vec![hard(rho)?]),
        Some(other) => Err(usage(format!(
            "--method must be std, sparse, or hard, got `{other}`"
        ))),
    }
}

fn tsallis(rho: f64) -> anyhow::Result<Regularizer64> {
    Regularizer64::tsallis(rho).map_err(|_| usage(format!("--rho must be > 0, got {rho}")))
}
