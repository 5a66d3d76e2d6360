//! Alternating minimization of the Fenchel-Young variational free energy
//! for Gaussian mixtures, with standard (ρ = 1), sparse (ρ > 1), and hard
//! (zero regularizer) E-steps.
//!
//! The objective over responsibilities q = (q_1, …, q_N) and model
//! parameters (θ, η) is
//!
//! ```text
//! F(θ, η, q) = Σ_i E_{q_i}[−log 𝒩(x_i; μ_Z, Σ_Z)] + L_Ω(s(η); q_i)
//! ```
//!
//! where s(η) is the prior-score vector. The E-step sets each row to
//! Π_Ω(s + log-density row), the exact minimizer of F in q; the M-step
//! performs weighted maximum likelihood in (μ, Σ) and re-solves the prior
//! scores from the mean responsibilities q̄ via Π_Ω(η̂) = q̄.
//!
//! Prior-score conventions (self-consistent round trip, tested below):
//! for ρ = 1 and for the hard map the scores are η itself (log-priors);
//! for Tsallis ρ ≠ 1 they are π_k^{ρ−1}/(ρ−1) with π the mixing
//! proportions Π_Ω(η), and the M-step representative η̂_k = q̄_k^{ρ−1}/(ρ−1)
//! makes the two coincide.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simplex::{conjugate, prediction_map, Distribution, Regularizer};

/// Ridge added to every M-step covariance to keep factorizations stable
/// when sparse responsibilities starve a component.
pub const COVARIANCE_JITTER: f64 = 1e-6;

/// Column-mass threshold below which a component keeps its previous
/// parameters instead of refitting on (numerically) no data.
pub const EMPTY_COMPONENT_MASS: f64 = 1e-10;

/// Default iteration cap for [`fit`].
pub const DEFAULT_MAX_ITER: usize = 200;

/// Default convergence tolerance on the change of the objective.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Observed data: an N × D matrix plus optional reference labels
/// (evaluation only; never touched by the fitting path).
#[derive(Clone, Debug)]
pub struct Dataset {
    x: DMatrix<f64>,
    labels: Option<Vec<i32>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, labels: Option<Vec<i32>>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::invalid("data matrix must be nonempty"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("data entries must be finite"));
        }
        if let Some(ref l) = labels {
            if l.len() != x.nrows() {
                return Err(Error::invalid(format!(
                    "label count {} does not match row count {}",
                    l.len(),
                    x.nrows()
                )));
            }
        }
        Ok(Dataset { x, labels })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> Option<&[i32]> {
        self.labels.as_deref()
    }
}

/// Mixture parameters: prior scores η, component means and covariances,
/// and the regularizer that defines the E-step geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmState {
    eta: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
    omega: Regularizer<f64>,
}

impl GmmState {
    pub fn new(
        eta: Vec<f64>,
        means: Vec<DVector<f64>>,
        covariances: Vec<DMatrix<f64>>,
        omega: Regularizer<f64>,
    ) -> Result<Self> {
        let k = eta.len();
        if k == 0 {
            return Err(Error::invalid("state must have at least one component"));
        }
        if means.len() != k || covariances.len() != k {
            return Err(Error::invalid(format!(
                "component counts disagree: {} scores, {} means, {} covariances",
                k,
                means.len(),
                covariances.len()
            )));
        }
        if eta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("prior scores must be finite"));
        }
        let d = means[0].len();
        for (j, m) in means.iter().enumerate() {
            if m.len() != d || m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("mean {j} has bad shape or entries")));
            }
        }
        for (j, c) in covariances.iter().enumerate() {
            if c.nrows() != d || c.ncols() != d || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("covariance {j} has bad shape or entries")));
            }
            let asym = (c - c.transpose()).norm();
            if asym > 1e-9 * c.norm().max(1.0) {
                return Err(Error::invalid(format!("covariance {j} is not symmetric")));
            }
            if Cholesky::new(c.clone()).is_none() {
                return Err(Error::CovarianceConditioning { component: j });
            }
        }
        Ok(GmmState {
            eta,
            means,
            covariances,
            omega,
        })
    }

    pub fn k(&self) -> usize {
        self.eta.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    pub fn omega(&self) -> Regularizer<f64> {
        self.omega
    }
}

/// Per-sample variational distributions over components; rows may have
/// sparse support under ρ > 1 or the hard map.
#[derive(Clone, Debug)]
pub struct Responsibilities {
    rows: Vec<Distribution<f64>>,
}

impl Responsibilities {
    pub fn new(rows: Vec<Distribution<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("responsibilities need at least one row"));
        }
        let k = rows[0].len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("responsibility rows have inconsistent widths"));
        }
        Ok(Responsibilities { rows })
    }

    pub fn rows(&self) -> &[Distribution<f64>] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows[0].len()
    }
}

/// How [`fit`] produces its starting point.
#[derive(Clone, Debug)]
pub enum InitSpec {
    /// Means i.i.d. uniform on [0, 0.1]^D, identity covariances, zero
    /// prior scores (uniform proportions under every map). Deterministic
    /// per seed.
    Seeded(u64),
    /// Start from an explicit state (shared-initialization comparisons).
    State(GmmState),
}

/// Mixing proportions π = Π_Ω(η).
pub fn mixing_proportions(state: &GmmState) -> Result<Distribution<f64>> {
    prediction_map(&state.eta, &state.omega)
}

/// The score contribution of the priors, by map family: η itself for the
/// classical and hard maps, π^{ρ−1}/(ρ−1) for Tsallis ρ ≠ 1.
fn prior_scores(state: &GmmState) -> Result<Vec<f64>> {
    match state.omega {
        Regularizer::Zero => Ok(state.eta.clone()),
        Regularizer::Tsallis(index) => {
            if index.is_classical() {
                return Ok(state.eta.clone());
            }
            let rho = index.get();
            let pi = mixing_proportions(state)?;
            Ok((0..state.k())
                .map(|j| {
                    // Floor keeps the score finite for ρ < 1 if a
                    // proportion ever underflows to zero.
                    let p = pi.prob(j).max(f64::MIN_POSITIVE);
                    p.powf(rho - 1.0) / (rho - 1.0)
                })
                .collect())
        }
    }
}

struct ComponentDensity {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    ln_norm: f64,
}

impl ComponentDensity {
    fn log_density(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let z = self.chol.l().solve_lower_triangular(&diff).expect("nonsingular factor");
        self.ln_norm - 0.5 * z.norm_squared()
    }
}

fn component_densities(state: &GmmState) -> Result<Vec<ComponentDensity>> {
    let d = state.dim() as f64;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    state
        .covariances
        .iter()
        .enumerate()
        .map(|(j, cov)| {
            let chol = Cholesky::new(cov.clone())
                .ok_or(Error::CovarianceConditioning { component: j })?;
            let ln_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            Ok(ComponentDensity {
                mean: state.means[j].clone(),
                chol,
                ln_norm: -0.5 * (d * ln_2pi + ln_det),
            })
        })
        .collect()
}

/// E-step: row i = Π_Ω(prior score + log-density row). Rows are
/// independent and computed in parallel; each row is deterministic.
pub fn e_step(state: &GmmState, data: &Dataset) -> Result<Responsibilities> {
    if data.dim() != state.dim() {
        return Err(Error::invalid(format!(
            "data dimension {} does not match state dimension {}",
            data.dim(),
            state.dim()
        )));
    }
    let prior = prior_scores(state)?;
    let densities = component_densities(state)?;
    let rows: Result<Vec<Distribution<f64>>> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let x = data.x.row(i).transpose();
            let scores: Vec<f64> = densities
                .iter()
                .zip(&prior)
                .map(|(cd, p)| p + cd.log_density(&x))
                .collect();
            prediction_map(&scores, &state.omega)
        })
        .collect();
    Responsibilities::new(rows?)
}

/// M-step: weighted maximum likelihood for (μ_k, Σ_k) with a constant
/// ridge, then the prior-score update Π_Ω(η̂) = q̄ from the column means
/// q̄ of the responsibilities.
///
/// A component whose column mass falls below [`EMPTY_COMPONENT_MASS`]
/// keeps its previous parameters (hence the previous state argument), and
/// its q̄ entry is floored at 1e−10 before the score update so the scores
/// stay finite. Reductions run in a fixed order, so results are
/// bit-stable across thread counts.
pub fn m_step(data: &Dataset, resp: &Responsibilities, prev: &GmmState) -> Result<GmmState> {
    let (n, d, k) = (data.n(), data.dim(), prev.k());
    if resp.n() != n || resp.k() != k || prev.dim() != d {
        return Err(Error::invalid("data, responsibilities, and state shapes disagree"));
    }

    let mut mass = vec![0.0f64; k];
    for row in &resp.rows {
        for &j in row.support() {
            mass[j] += row.prob(j);
        }
    }

    let mut means = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    for j in 0..k {
        if mass[j] < EMPTY_COMPONENT_MASS {
            means.push(prev.means[j].clone());
            covariances.push(prev.covariances[j].clone());
            continue;
        }
        let mut mu = DVector::zeros(d);
        for (i, row) in resp.rows.iter().enumerate() {
            let w = row.prob(j);
            if w > 0.0 {
                mu += w * data.x.row(i).transpose();
            }
        }
        mu /= mass[j];
        let mut cov = DMatrix::zeros(d, d);
        for (i, row) in resp.rows.iter().enumerate() {
            let w = row.prob(j);
            if w > 0.0 {
                let diff = data.x.row(i).transpose() - &mu;
                cov += w * &diff * diff.transpose();
            }
        }
        cov /= mass[j];
        for t in 0..d {
            cov[(t, t)] += COVARIANCE_JITTER;
        }
        means.push(mu);
        covariances.push(cov);
    }

    // Prior-score update. With the zero regularizer the update equation
    // Π_Ω(η̂) = q̄ has no solution for interior q̄ (the argmax map only
    // reaches vertices), and the free-energy term Σ_i (max_j η_j − ⟨q_i, η⟩)
    // is already at its minimum of zero for any constant score vector, so
    // the scores are left untouched. That keeps the hard variant an exact
    // block-coordinate descent on the objective.
    let eta: Vec<f64> = match prev.omega {
        Regularizer::Zero => prev.eta().to_vec(),
        Regularizer::Tsallis(index) => mass
            .iter()
            .map(|&m| {
                let mean_resp = (m / n as f64).max(EMPTY_COMPONENT_MASS);
                if index.is_classical() {
                    mean_resp.ln()
                } else {
                    let rho = index.get();
                    mean_resp.powf(rho - 1.0) / (rho - 1.0)
                }
            })
            .collect(),
    };

    GmmState::new(eta, means, covariances, prev.omega)
}

/// The Fenchel-Young variational free energy
/// Σ_i E_{q_i}[−log 𝒩(x_i; μ_Z, Σ_Z)] + L_Ω(s; q_i), with s the prior
/// scores. Expectations are support-restricted, so zero-probability
/// components contribute exactly zero even at distant points.
pub fn fyvfe(state: &GmmState, data: &Dataset, resp: &Responsibilities) -> Result<f64> {
    if resp.n() != data.n() || resp.k() != state.k() || data.dim() != state.dim() {
        return Err(Error::invalid("data, responsibilities, and state shapes disagree"));
    }
    let prior = prior_scores(state)?;
    let densities = component_densities(state)?;
    let prior_conjugate = conjugate(&prior, &state.omega)?;
    let mut total = 0.0;
    for (i, row) in resp.rows.iter().enumerate() {
        let x = data.x.row(i).transpose();
        let mut expected_nll = 0.0;
        for &j in row.support() {
            expected_nll -= row.prob(j) * densities[j].log_density(&x);
        }
        let fy = prior_conjugate - row.support_dot(&prior) + state.omega.omega(row);
        total += expected_nll + fy;
    }
    Ok(total)
}

/// Alternating minimization: E-step, M-step, record the objective, stop
/// when it moves by less than `tol` or after `max_iter` iterations.
/// Returns the final state, final responsibilities, and the per-iteration
/// objective trace (recorded after each M-step).
pub fn fit(
    data: &Dataset,
    k: usize,
    omega: Regularizer<f64>,
    init: InitSpec,
    max_iter: usize,
    tol: f64,
) -> Result<(GmmState, Responsibilities, Vec<f64>)> {
    use rand::{Rng, SeedableRng};
    if k == 0 || max_iter == 0 {
        return Err(Error::invalid("component count and iteration cap must be at least 1"));
    }
    if data.n() < k {
        return Err(Error::invalid(format!(
            "need at least as many samples ({}) as components ({k})",
            data.n()
        )));
    }
    let d = data.dim();
    let mut state = match init {
        InitSpec::Seeded(seed) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let means = (0..k)
                .map(|_| DVector::from_fn(d, |_, _| rng.random::<f64>() * 0.1))
                .collect();
            // Identity starting covariances: small random spreads make one
            // component swallow the whole dataset on the first hard or sparse
            // assignment, after which the starved components never recover.
            GmmState::new(
                vec![0.0; k],
                means,
                vec![DMatrix::identity(d, d); k],
                omega,
            )?
        }
        InitSpec::State(s) => {
            if s.k() != k || s.dim() != d || s.omega() != omega {
                return Err(Error::invalid("initial state does not match the requested fit"));
            }
            s
        }
    };

    let mut trace = Vec::new();
    let mut resp = e_step(&state, data)?;
    for _ in 0..max_iter {
        state = m_step(data, &resp, &state)?;
        let objective = fyvfe(&state, data, &resp)?;
        let converged = trace
            .last()
            .is_some_and(|prev: &f64| (prev - objective).abs() < tol);
        trace.push(objective);
        // Refresh before a possible break so the returned responsibilities
        // always describe the returned state.
        resp = e_step(&state, data)?;
        if converged {
            break;
        }
    }
    Ok((state, resp, trace))
}

/// Mean number of components assigned exactly zero probability per row.
pub fn e_step_sparsity(resp: &Responsibilities) -> f64 {
    let k = resp.k();
    let dropped: usize = resp.rows.iter().map(|r| k - r.support_size()).sum();
    dropped as f64 / resp.n() as f64
}

/// Writes a state as self-describing structured text (dimensions first,
/// then scores, means, and row-major covariances; shortest round-trip
/// float formatting).
pub fn write_checkpoint(state: &GmmState, path: &Path) -> Result<()> {
    let mut out = String::from("fyem-gmm-checkpoint v1\n");
    match state.omega {
        Regularizer::Zero => out.push_str("regularizer zero\n"),
        Regularizer::Tsallis(index) => {
            let _ = writeln!(out, "regularizer tsallis {}", index.get());
        }
    }
    let _ = writeln!(out, "components {}", state.k());
    let _ = writeln!(out, "dim {}", state.dim());
    out.push_str("eta");
    for v in &state.eta {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    for (j, m) in state.means.iter().enumerate() {
        let _ = write!(out, "mean {j}");
        for v in m.iter() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for (j, c) in state.covariances.iter().enumerate() {
        let _ = write!(out, "cov {j}");
        for r in 0..state.dim() {
            for col in 0..state.dim() {
                let _ = write!(out, " {}", c[(r, col)]);
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a checkpoint produced by [`write_checkpoint`]; malformed files
/// report the 1-based line number.
pub fn read_checkpoint(path: &Path) -> Result<GmmState> {
    let text = std::fs::read_to_string(path)?;
    let bad = |line: usize, message: &str| Error::Checkpoint {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let mut next = |expect: &'static str| -> Result<(usize, Vec<String>)> {
        let (i, raw) = lines
            .next()
            .ok_or_else(|| bad(0, &format!("missing `{expect}` line")))?;
        let fields: Vec<String> = raw.split_whitespace().map(str::to_string).collect();
        if fields.first().map(String::as_str) != Some(expect) {
            return Err(bad(i + 1, &format!("expected a `{expect}` line")));
        }
        Ok((i + 1, fields))
    };

    let (line, header) = next("fyem-gmm-checkpoint")?;
    if header.get(1).map(String::as_str) != Some("v1") {
        return Err(bad(line, "unsupported checkpoint version"));
    }
    let (line, reg) = next("regularizer")?;
    let omega = match reg.get(1).map(String::as_str) {
        Some("zero") => Regularizer::Zero,
        Some("tsallis") => {
            let rho: f64 = reg
                .get(2)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(line, "bad entropic index"))?;
            Regularizer::tsallis(rho).map_err(|_| bad(line, "bad entropic index"))?
        }
        _ => return Err(bad(line, "unknown regularizer kind")),
    };
    let parse_count = |(line, fields): (usize, Vec<String>)| -> Result<usize> {
        fields
            .get(1)
            .and_then(|s| s.parse().ok())
            .filter(|&v: &usize| v > 0)
            .ok_or_else(|| bad(line, "bad count"))
    };
    let k = parse_count(next("components")?)?;
    let d = parse_count(next("dim")?)?;

    let parse_floats = |line: usize, fields: &[String], skip: usize, want: usize| -> Result<Vec<f64>> {
        let vals: Vec<f64> = fields[skip..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(line, "unparseable number"))?;
        if vals.len() != want {
            return Err(bad(line, &format!("expected {want} values, got {}", vals.len())));
        }
        Ok(vals)
    };

    let (line, fields) = next("eta")?;
    let eta = parse_floats(line, &fields, 1, k)?;
    let mut means = Vec::with_capacity(k);
    for j in 0..k {
        let (line, fields) = next("mean")?;
        if fields.get(1).and_then(|s| s.parse::<usize>().ok()) != Some(j) {
            return Err(bad(line, "mean lines out of order"));
        }
        means.push(DVector::from_vec(parse_floats(line, &fields, 2, d)?));
    }
    let mut covariances = Vec::with_capacity(k);
    for j in 0..k {
        let (line, fields) = next("cov")?;
        if fields.get(1).and_then(|s| s.parse::<usize>().ok()) != Some(j) {
            return Err(bad(line, "covariance lines out of order"));
        }
        let vals = parse_floats(line, &fields, 2, d * d)?;
        covariances.push(DMatrix::from_row_slice(d, d, &vals));
    }
    GmmState::new(eta, means, covariances, omega)
}
