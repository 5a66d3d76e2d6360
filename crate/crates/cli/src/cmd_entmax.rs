//! The `entmax` subcommand: map scores through a regularized prediction
//! map, report the support, optionally score a target distribution, and
//! optionally verify the analytic score gradients by central differences.

use anyhow::Context as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fyvi::simplex::{fy_loss, fy_loss_score_gradient, prediction_map};
use fyvi::{Distribution64, Regularizer64};

use crate::settings::parse_real_list;
use crate::{usage, Context, EntmaxArgs};

const KNOWN_KEYS: [&str; 5] = ["rho", "scores", "random", "target", "check-gradients"];

pub fn run(context: &Context, args: &EntmaxArgs) -> anyhow::Result<()> {
    context.settings.require_known(&KNOWN_KEYS)?;
    let rho_raw: String = context
        .settings
        .resolve_opt(args.rho.clone(), "rho")?
        .ok_or_else(|| usage("entmax needs --rho (a real > 0, or `hard`)"))?;
    let omega = parse_regularizer(&rho_raw)?;
    let scores: Option<String> = context.settings.resolve_opt(args.scores.clone(), "scores")?;
    let random = resolve_random(context, args)?;
    let target: Option<String> = context.settings.resolve_opt(args.target.clone(), "target")?;
    let check_gradients = context
        .settings
        .resolve_switch(args.check_gradients, "check-gradients")?;

    match (scores, random) {
        (Some(raw), None) => {
            let eta = parse_real_list(&raw, "score")?;
            map_one(&eta, &omega, target.as_deref())?;
            if check_gradients {
                let worst = gradient_error(&[eta], &omega, context.seed)?;
                println!("max relative error {worst:.3e}");
            }
            Ok(())
        }
        (None, Some((n, k))) => {
            if n == 0 || k == 0 {
                return Err(usage("--random needs N ≥ 1 vectors of length K ≥ 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(context.seed);
            let batch: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..k).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            if check_gradients {
                let worst = gradient_error(&batch, &omega, context.seed)?;
                println!("checked {n} random vectors of length {k}");
                println!("max relative error {worst:.3e}");
            } else {
                let total: usize = batch
                    .iter()
                    .map(|eta| Ok(prediction_map(eta, &omega)?.support_size()))
                    .sum::<anyhow::Result<usize>>()?;
                println!(
                    "mean support size {:.3} over {n} random vectors of length {k}",
                    total as f64 / n as f64
                );
            }
            Ok(())
        }
        (Some(_), Some(_)) => Err(usage("--scores and --random are mutually exclusive")),
        (None, None) => Err(usage("entmax needs --scores or --random")),
    }
}

fn resolve_random(context: &Context, args: &EntmaxArgs) -> anyhow::Result<Option<(usize, usize)>> {
    if let Some(pair) = &args.random {
        // clap enforces exactly two values.
        return Ok(Some((pair[0], pair[1])));
    }
    let raw: Option<String> = context.settings.resolve_opt(None, "random")?;
    match raw {
        None => Ok(None),
        Some(raw) => {
            let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
            let parsed: Option<(usize, usize)> = match parts.as_slice() {
                [n, k] => n.parse().ok().zip(k.parse().ok()),
                _ => None,
            };
            parsed.map(Some).ok_or_else(|| {
                usage(format!("settings value for `random` must be N,K: `{raw}`"))
            })
        }
    }
}

fn parse_regularizer(raw: &str) -> anyhow::Result<Regularizer64> {
    if raw == "hard" {
        return Ok(Regularizer64::Zero);
    }
    let rho: f64 = raw
        .parse()
        .map_err(|_| usage(format!("--rho must be a real > 0 or `hard`, got `{raw}`")))?;
    Regularizer64::tsallis(rho).map_err(|_| usage(format!("--rho must be > 0, got `{raw}`")))
}

fn map_one(eta: &[f64], omega: &Regularizer64, target: Option<&str>) -> anyhow::Result<()> {
    if eta.is_empty() {
        return Err(usage("--scores needs at least one entry"));
    }
    let q = prediction_map(eta, omega).context("prediction map failed")?;
    let rendered: Vec<String> = (0..eta.len()).map(|i| trim_number(q.prob(i))).collect();
    println!("{}", rendered.join(","));
    let support: Vec<String> = q.support().iter().map(|i| (i + 1).to_string()).collect();
    println!("support {{{}}} of {}", support.join(","), eta.len());
    if let Some(raw) = target {
        let probs = parse_real_list(raw, "target")?;
        let target = Distribution64::new(probs)
            .map_err(|e| usage(format!("--target is not a distribution: {e}")))?;
        let loss = fy_loss(eta, &target, omega).context("loss evaluation failed")?;
        println!("loss {loss:.12}");
    }
    Ok(())
}

/// Worst relative disagreement between the analytic score gradient and
/// central differences, over every vector and coordinate. Each vector is
/// paired with a generic full-support target drawn from the softmax of an
/// independent score draw.
fn gradient_error(batch: &[Vec<f64>], omega: &Regularizer64, seed: u64) -> anyhow::Result<f64> {
    let soft = Regularizer64::tsallis(1.0).expect("valid index");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for eta in batch {
        let draw: Vec<f64> = eta.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
        let target = prediction_map(&draw, &soft).context("target draw failed")?;
        let grad = fy_loss_score_gradient(eta, &target, omega)?;
        for i in 0..eta.len() {
            let mut plus = eta.clone();
            let mut minus = eta.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (fy_loss(&plus, &target, omega)? - fy_loss(&minus, &target, omega)?)
                / (2.0 * h);
            worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
        }
    }
    Ok(worst)
}

/// Renders a probability with six decimals and no trailing zeros, so exact
/// zeros and clean fractions print the way people write them.
fn trim_number(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}
