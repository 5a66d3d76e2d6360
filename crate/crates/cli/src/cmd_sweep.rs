//! The `sweep` subcommand: run the Tsallis-family benchmark across a grid
//! of entropic indices, write the per-run CSV, and plot mean ± std curves
//! for each quality metric.

use fyvi::clustering::{metrics_csv, run_rho_sweep, BenchmarkSpec, MetricsReport, SWEEP_RHO_GRID};
use fyvi::gmm::DEFAULT_MAX_ITER;
use fyvi::svg::write_line_plot;

use crate::settings::{entry, parse_real_list, write_manifest};
use crate::{usage, Context, SweepArgs};

const KNOWN_KEYS: [&str; 3] = ["rhos", "seeds", "max-iter"];

pub fn run(context: &Context, args: &SweepArgs) -> anyhow::Result<()> {
    context.settings.require_known(&KNOWN_KEYS)?;
    let raw_rhos: Option<String> = context.settings.resolve_opt(args.rhos.clone(), "rhos")?;
    let seed_count: u64 = context.settings.resolve(args.seeds, "seeds", 5)?;
    let max_iter: usize = context
        .settings
        .resolve(args.max_iter, "max-iter", DEFAULT_MAX_ITER)?;
    if seed_count == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let rhos = match raw_rhos {
        Some(raw) => parse_real_list(&raw, "--rhos")?,
        None => SWEEP_RHO_GRID.to_vec(),
    };
    if rhos.iter().any(|&r| !r.is_finite() || r <= 0.0) {
        return Err(usage("--rhos entries must be positive numbers"));
    }

    write_manifest(
        &context.out,
        "sweep",
        context.config_path.as_deref(),
        &[
            entry("seed", context.seed),
            entry("out", context.out.display()),
            entry(
                "rhos",
                rhos.iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            entry("seeds", seed_count),
            entry("max-iter", max_iter),
        ],
    )?;

    let base = BenchmarkSpec::with_seed(context.seed);
    let seeds: Vec<u64> = (0..seed_count).map(|i| context.seed + i).collect();
    let reports = run_rho_sweep(&seeds, &rhos, &base, max_iter)?;

    let csv = metrics_csv(&reports);
    std::fs::write(context.out.join("sweep.csv"), &csv)?;
    println!("rho    ami            ari            silhouette     sparsity");
    for report in &reports {
        println!(
            "{:<6} {:.3} ± {:.3}  {:.3} ± {:.3}  {:.3} ± {:.3}  {:.3} ± {:.3}",
            report.rho,
            report.ami.mean,
            report.ami.std,
            report.ari.mean,
            report.ari.std,
            report.silhouette.mean,
            report.silhouette.std,
            report.sparsity.mean,
            report.sparsity.std,
        );
    }

    if rhos.len() >= 2 {
        let curves: [(&str, fn(&MetricsReport) -> (f64, f64)); 4] = [
            ("ami", |r| (r.ami.mean, r.ami.std)),
            ("ari", |r| (r.ari.mean, r.ari.std)),
            ("silhouette", |r| (r.silhouette.mean, r.silhouette.std)),
            ("sparsity", |r| (r.sparsity.mean, r.sparsity.std)),
        ];
        for (name, pick) in curves {
            let mean: Vec<f64> = reports.iter().map(|r| pick(r).0).collect();
            let std: Vec<f64> = reports.iter().map(|r| pick(r).1).collect();
            write_line_plot(
                &context.out.join(format!("sweep_{name}.svg")),
                &format!("{name} across entropic indices"),
                "rho",
                name,
                &rhos,
                &mean,
                &std,
            )?;
        }
    }
    println!("wrote {}", context.out.join("sweep.csv").display());
    Ok(())
}
