//! Minimal SVG writers for the sweep line plots (mean curve with a ±1
//! standard-deviation band) and the benchmark scatter with component
//! level-curve ellipses. Pure string construction, deterministic output.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gmm::{Dataset, GmmState};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 25.0;
const MARGIN_TOP: f64 = 45.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 6] = ["#3366cc", "#dc3912", "#ff9900", "#109618", "#990099", "#0099c6"];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    plot_w: f64,
    plot_h: f64,
}

impl Frame {
    fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Frame {
        Frame {
            x_min,
            x_max,
            y_min,
            y_max,
            plot_w: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            plot_h: HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * self.plot_w
    }

    fn sy(&self, y: f64) -> f64 {
        MARGIN_TOP + (self.y_max - y) / (self.y_max - self.y_min) * self.plot_h
    }
}

fn open_svg(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        WIDTH / 2.0
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP;
    let x1 = MARGIN_LEFT + frame.plot_w;
    let y1 = MARGIN_TOP + frame.plot_h;
    let _ = write!(
        out,
        "<line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        let xp = frame.sx(xv);
        let yp = frame.sy(yv);
        let _ = write!(
            out,
            "<line x1=\"{xp:.2}\" y1=\"{y1}\" x2=\"{xp:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n\
             <text x=\"{xp:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
            y1 + 5.0,
            y1 + 20.0,
            trim_tick(xv)
        );
        let _ = write!(
            out,
            "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{x0}\" y2=\"{yp:.2}\" stroke=\"black\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"12\">{}</text>\n",
            x0 - 5.0,
            x0 - 9.0,
            yp + 4.0,
            trim_tick(yv)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{x_label}</text>\n\
         <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 18 {:.1})\">{y_label}</text>\n",
        MARGIN_LEFT + frame.plot_w / 2.0,
        HEIGHT - 12.0,
        MARGIN_TOP + frame.plot_h / 2.0,
        MARGIN_TOP + frame.plot_h / 2.0
    );
}

fn trim_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// A mean curve over `x` with a shaded ±1 standard-deviation band,
/// rendered to `path`.
pub fn write_line_plot(
    path: &std::path::Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    x: &[f64],
    mean: &[f64],
    std: &[f64],
) -> Result<()> {
    if x.len() != mean.len() || x.len() != std.len() || x.len() < 2 {
        return Err(Error::invalid("line plot needs ≥ 2 aligned (x, mean, std) triples"));
    }
    if x.iter().chain(mean).chain(std).any(|v| !v.is_finite()) {
        return Err(Error::invalid("plot values must be finite"));
    }
    let lo = mean
        .iter()
        .zip(std)
        .map(|(m, s)| m - s)
        .fold(f64::INFINITY, f64::min);
    let hi = mean
        .iter()
        .zip(std)
        .map(|(m, s)| m + s)
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-9);
    let frame = Frame::new(x[0], *x.last().unwrap(), lo - pad, hi + pad);

    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, x_label, y_label);

    let mut band = String::new();
    for (xi, (m, s)) in x.iter().zip(mean.iter().zip(std)) {
        let _ = write!(band, "{:.2},{:.2} ", frame.sx(*xi), frame.sy(m + s));
    }
    for (xi, (m, s)) in x.iter().zip(mean.iter().zip(std)).rev() {
        let _ = write!(band, "{:.2},{:.2} ", frame.sx(*xi), frame.sy(m - s));
    }
    let _ = write!(
        out,
        "<polygon points=\"{}\" fill=\"#7799dd\" fill-opacity=\"0.3\" stroke=\"none\"/>\n",
        band.trim_end()
    );

    let mut line = String::new();
    for (xi, m) in x.iter().zip(mean) {
        let _ = write!(line, "{:.2},{:.2} ", frame.sx(*xi), frame.sy(*m));
    }
    let _ = write!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#2244cc\" stroke-width=\"2\"/>\n",
        line.trim_end()
    );
    for (xi, m) in x.iter().zip(mean) {
        let _ = write!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#2244cc\"/>\n",
            frame.sx(*xi),
            frame.sy(*m)
        );
    }
    out.push_str("</svg>\n");
    std::fs::write(path, out)?;
    Ok(())
}

/// The benchmark scatter: points colored by reference label, outliers as
/// crosses, and 2σ level-curve ellipses of each fitted component.
pub fn write_cluster_scatter(
    path: &std::path::Path,
    title: &str,
    data: &Dataset,
    labels: &[i32],
    state: &GmmState,
) -> Result<()> {
    if data.dim() != 2 || state.dim() != 2 {
        return Err(Error::invalid("scatter plot is two-dimensional"));
    }
    if labels.len() != data.n() {
        return Err(Error::invalid("label count does not match data rows"));
    }
    let frame = Frame::new(-3.5, 3.5, -3.5, 3.5);
    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, "x", "y");

    for i in 0..data.n() {
        let (px, py) = (frame.sx(data.x()[(i, 0)]), frame.sy(data.x()[(i, 1)]));
        if labels[i] < 0 {
            let _ = write!(
                out,
                "<path d=\"M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}\" \
                 stroke=\"#555555\" stroke-width=\"1\"/>\n",
                px - 3.0,
                py - 3.0,
                px + 3.0,
                py + 3.0,
                px - 3.0,
                py + 3.0,
                px + 3.0,
                py - 3.0
            );
        } else {
            let color = PALETTE[(labels[i] as usize) % PALETTE.len()];
            let _ = write!(
                out,
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2\" fill=\"{color}\" fill-opacity=\"0.7\"/>\n"
            );
        }
    }

    let scale = frame.plot_w / (frame.x_max - frame.x_min);
    for j in 0..state.k() {
        let cov: &DMatrix<f64> = &state.covariances()[j];
        let eig = nalgebra::SymmetricEigen::new(cov.clone());
        let (l0, l1) = (eig.eigenvalues[0].max(0.0), eig.eigenvalues[1].max(0.0));
        let v0 = eig.eigenvectors.column(0);
        let angle_deg = v0[1].atan2(v0[0]).to_degrees();
        let cx = frame.sx(state.means()[j][0]);
        let cy = frame.sy(state.means()[j][1]);
        let _ = write!(
            out,
            "<ellipse cx=\"{cx:.2}\" cy=\"{cy:.2}\" rx=\"{:.2}\" ry=\"{:.2}\" \
             transform=\"rotate({:.2} {cx:.2} {cy:.2})\" fill=\"none\" stroke=\"black\" \
             stroke-width=\"1.5\"/>\n",
            2.0 * l0.sqrt() * scale,
            2.0 * l1.sqrt() * scale,
            // Screen y points down, so the rotation flips sign.
            -angle_deg
        );
    }
    out.push_str("</svg>\n");
    std::fs::write(path, out)?;
    Ok(())
}
