//! The `vae` subcommand: train the toy variational autoencoder on the
//! synthetic glyph corpus (or an IDX image/label pair), write the
//! per-epoch trace CSV and a parameter checkpoint, and report the final
//! loss and reconstruction quality. The learned regularizer term is
//! printed next to the closed-form Gaussian KL; at the fully classical
//! corner (--rho 1 --rho-obs 1) the two agree to high precision.

use std::path::PathBuf;

use anyhow::Context as _;

use fyvi::vae::{
    load_idx, make_synthetic_digits, regularizer_and_gaussian_kl, trace_csv, train,
    write_vae_checkpoint, VaeConfig,
};

use crate::settings::{entry, write_manifest};
use crate::{usage, Context, VaeArgs};

const KNOWN_KEYS: [&str; 8] = [
    "rho",
    "rho-obs",
    "beta",
    "data",
    "images",
    "labels-file",
    "limit",
    "epochs",
];

pub fn run(context: &Context, args: &VaeArgs) -> anyhow::Result<()> {
    context.settings.require_known(&KNOWN_KEYS)?;
    let rho: f64 = context.settings.resolve(args.rho, "rho", 1.0)?;
    let rho_obs: f64 = context.settings.resolve(args.rho_obs, "rho-obs", 1.0)?;
    let beta: Option<f64> = context.settings.resolve_opt(args.beta, "beta")?;
    let data_source: String =
        context
            .settings
            .resolve(args.data.clone(), "data", "synthetic".to_string())?;
    let images: Option<PathBuf> = context.settings.resolve_opt(args.images.clone(), "images")?;
    let labels_file: Option<PathBuf> = context
        .settings
        .resolve_opt(args.labels_file.clone(), "labels-file")?;
    let limit: usize = context.settings.resolve(args.limit, "limit", 512)?;
    let epochs: Option<usize> = context.settings.resolve_opt(args.epochs, "epochs")?;

    let mut config = VaeConfig::toy(rho, rho_obs, context.seed);
    if let Some(beta) = beta {
        config.beta = beta;
    }
    if let Some(epochs) = epochs {
        config.epochs = epochs;
    }
    // Misconfigured indices, weights, or counts are flag mistakes, not
    // runtime failures, so they report as usage errors.
    config.validate().map_err(|e| usage(e.to_string()))?;

    let data = match data_source.as_str() {
        "synthetic" => make_synthetic_digits(limit, context.seed)
            .map_err(|e| usage(format!("--limit rejected: {e}")))?,
        "idx" => {
            let (Some(images), Some(labels_file)) = (&images, &labels_file) else {
                return Err(usage("--data idx requires --images and --labels-file"));
            };
            let (x, _labels) = load_idx(images, labels_file, limit)
                .with_context(|| format!("loading IDX pair {}", images.display()))?;
            x
        }
        other => {
            return Err(usage(format!(
                "--data must be synthetic or idx, got `{other}`"
            )));
        }
    };

    write_manifest(
        &context.out,
        "vae",
        context.config_path.as_deref(),
        &[
            entry("seed", context.seed),
            entry("out", context.out.display()),
            entry("rho", rho),
            entry("rho-obs", rho_obs),
            entry("beta", config.beta),
            entry("data", &data_source),
            entry("limit", data.nrows()),
            entry("epochs", config.epochs),
        ],
    )?;

    let (params, trace) = train(&config, &data)?;
    std::fs::write(context.out.join("trace.csv"), trace_csv(&trace))?;
    write_vae_checkpoint(&params, &config, &context.out.join("checkpoint.txt"))?;

    let last = trace.last().expect("training ran at least one epoch");
    println!("final mean loss {}", last.mean_loss);
    println!("final recon l1 {}", last.recon_l1);
    let (regularizer, gaussian_kl) = regularizer_and_gaussian_kl(&params, &data, &config)?;
    println!("regularizer {regularizer}");
    println!("gaussian_kl {gaussian_kl}");
    println!("wrote {}", context.out.join("trace.csv").display());
    Ok(())
}
