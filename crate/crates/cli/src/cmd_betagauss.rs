//! The `betagauss` subcommand: tabulate the density and distribution
//! function of one continuous family member on an even grid spanning its
//! support (a fixed multiple of the scale when the support is unbounded)
//! and write the table as CSV.

use fyvi::betagauss::{cdf, pdf, support_radius, BetaGaussianParams};
use fyvi::EntropicIndex64;

use crate::settings::{entry, write_manifest};
use crate::{usage, Context, BetagaussArgs};

const KNOWN_KEYS: [&str; 4] = ["rho", "loc", "scale", "knots"];

/// Grid half-width in scale units when the member has unbounded support.
const UNBOUNDED_HALF_WIDTH: f64 = 5.0;

pub fn run(context: &Context, args: &BetagaussArgs) -> anyhow::Result<()> {
    context.settings.require_known(&KNOWN_KEYS)?;
    let rho: f64 = context.settings.resolve(args.rho, "rho", 1.5)?;
    let loc: f64 = context.settings.resolve(args.loc, "loc", 0.0)?;
    let scale: f64 = context.settings.resolve(args.scale, "scale", 1.0)?;
    let knots: usize = context.settings.resolve(args.knots, "knots", 129)?;
    if knots < 2 {
        return Err(usage("--knots must be at least 2"));
    }

    // Parameter construction failures are flag mistakes (index outside the
    // family, nonpositive scale), so they report as usage errors.
    let index = EntropicIndex64::new(rho).map_err(|e| usage(e.to_string()))?;
    let params =
        BetaGaussianParams::new(vec![loc], vec![scale], index).map_err(|e| usage(e.to_string()))?;
    let radius = support_radius(&params, 0).map_err(|e| usage(e.to_string()))?;

    write_manifest(
        &context.out,
        "betagauss",
        context.config_path.as_deref(),
        &[
            entry("seed", context.seed),
            entry("out", context.out.display()),
            entry("rho", rho),
            entry("loc", loc),
            entry("scale", scale),
            entry("knots", knots),
        ],
    )?;

    let half_width = if radius.is_finite() {
        radius
    } else {
        UNBOUNDED_HALF_WIDTH * scale
    };
    let mut csv = String::from("z,pdf,cdf\n");
    for i in 0..knots {
        let t = i as f64 / (knots - 1) as f64;
        let z = loc - half_width + 2.0 * half_width * t;
        let density = pdf(&params, &[z])?;
        let mass = cdf(&params, 0, z)?;
        csv.push_str(&format!("{z},{density},{mass}\n"));
    }
    let path = context.out.join("betagauss.csv");
    std::fs::write(&path, &csv)?;

    if radius.is_finite() {
        println!("support [{}, {}]", loc - radius, loc + radius);
    } else {
        println!("support unbounded");
    }
    println!("wrote {}", path.display());
    Ok(())
}
