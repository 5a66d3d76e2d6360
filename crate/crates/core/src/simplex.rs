//! Regularized prediction maps over the probability simplex and the
//! Fenchel-Young losses built on them.
//!
//! For a score vector η ∈ R^K and a convex regularizer Ω the prediction map
//! and loss are
//!
//! ```text
//! Π_Ω(η)       = argmax_{q ∈ Δ} ⟨q, η⟩ − Ω(q)
//! L_Ω(η; q)    = Ω*(η) − ⟨q, η⟩ + Ω(q)      (≥ 0, zero iff q = Π_Ω(η))
//! ```
//!
//! The Tsallis negentropy family `Ω_ρ(q) = (Σ_k q_k^ρ − 1)/(ρ(ρ−1))`
//! interpolates the classical cases: ρ = 1 gives Σ q log q and Π is softmax,
//! ρ = 2 gives the Euclidean case and Π is sparsemax (projection onto the
//! simplex), and Ω = 0 gives the argmax map of hard assignment. For other ρ
//! the map solves a one-dimensional normalization by bisection; its entries
//! have the deformed-exponential form `exp_{2−ρ}(η_k − τ)`.
//!
//! Scores enter the map unscaled. That convention is forced by requiring the
//! general solver to agree exactly with softmax as ρ → 1 and with the
//! Euclidean projection at ρ = 2, and is pinned by tests against both closed
//! forms.

use crate::deformed::{exp_dual, log_rho, EntropicIndex};
use crate::error::{Error, Result};
use crate::real::Real;

/// Entries of a solved sparse map below this threshold are snapped to exact
/// zero and the rest renormalized, so downstream consumers can skip
/// zero-probability work outright.
pub const SUPPORT_TRUNCATION: f64 = 1e-12;

/// Residual tolerance of the bisection normalization solve.
pub const BISECTION_TOLERANCE: f64 = 1e-10;

/// Iteration cap of the bisection normalization solve.
pub const BISECTION_MAX_ITER: usize = 200;

/// A point of the probability simplex with its support set made explicit.
///
/// `probs` is dense; `support` lists exactly the indices with strictly
/// positive mass, in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<F: Real> {
    probs: Vec<F>,
    support: Vec<usize>,
}

impl<F: Real> Distribution<F> {
    /// Validates and wraps a dense probability vector: entries finite and
    /// ≥ 0, total mass 1 within 1e−9.
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution needs at least one entry"));
        }
        let mut sum = F::zero();
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < F::zero() {
                return Err(Error::invalid(format!(
                    "probability {p} at index {i} is not a finite nonnegative value"
                )));
            }
            sum += p;
        }
        if (sum - F::one()).abs() > F::of(1e-9) {
            return Err(Error::invalid(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        let support = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > F::zero())
            .map(|(i, _)| i)
            .collect();
        Ok(Distribution { probs, support })
    }

    /// Uniform distribution over `k` outcomes.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("distribution needs at least one entry"));
        }
        let w = F::of(1.0 / k as f64);
        Ok(Distribution {
            probs: vec![w; k],
            support: (0..k).collect(),
        })
    }

    /// Point mass on outcome `hot` out of `k`.
    pub fn one_hot(k: usize, hot: usize) -> Result<Self> {
        if k == 0 || hot >= k {
            return Err(Error::invalid(format!(
                "one-hot index {hot} out of range for {k} outcomes"
            )));
        }
        let mut probs = vec![F::zero(); k];
        probs[hot] = F::one();
        Ok(Distribution {
            probs,
            support: vec![hot],
        })
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn prob(&self, i: usize) -> F {
        self.probs[i]
    }

    pub fn into_probs(self) -> Vec<F> {
        self.probs
    }

    /// ⟨q, v⟩ accumulated over the support only, so zero-probability
    /// entries contribute exactly zero regardless of `v`.
    pub fn support_dot(&self, v: &[F]) -> F {
        self.support.iter().map(|&i| self.probs[i] * v[i]).sum()
    }

    /// Wraps solver output: snaps sub-threshold entries to zero,
    /// renormalizes the survivors, and derives the support.
    fn from_solver(mut probs: Vec<F>) -> Self {
        let cut = F::of(SUPPORT_TRUNCATION);
        let mut sum = F::zero();
        for p in probs.iter_mut() {
            if *p < cut {
                *p = F::zero();
            } else {
                sum += *p;
            }
        }
        let mut support = Vec::new();
        for (i, p) in probs.iter_mut().enumerate() {
            if *p > F::zero() {
                *p /= sum;
                support.push(i);
            }
        }
        Distribution { probs, support }
    }

    /// Wraps solver output for maps whose solution has full support by
    /// construction (ρ ≤ 1: exponential or power-law tails): no truncation;
    /// entries are renormalized and floored at the smallest positive value so
    /// underflow cannot silently shrink the support.
    fn from_dense_solver(mut probs: Vec<F>) -> Self {
        let sum: F = probs.iter().copied().sum();
        let support = (0..probs.len()).collect();
        for p in probs.iter_mut() {
            *p = (*p / sum).max(F::min_positive_value());
        }
        Distribution { probs, support }
    }
}

/// The regularizer Ω defining a prediction map: a Tsallis negentropy with
/// entropic index ρ > 0, or identically zero (hard assignment).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularizer<F: Real> {
    Tsallis(EntropicIndex<F>),
    Zero,
}

impl<F: Real> Regularizer<F> {
    /// Convenience constructor from a raw ρ value.
    pub fn tsallis(rho: F) -> Result<Self> {
        Ok(Regularizer::Tsallis(EntropicIndex::new(rho)?))
    }

    /// Ω(q): the Tsallis negentropy, or 0 for the zero regularizer.
    pub fn omega(&self, q: &Distribution<F>) -> F {
        match self {
            Regularizer::Tsallis(rho) => tsallis_negentropy(q, *rho),
            Regularizer::Zero => F::zero(),
        }
    }
}

impl<F: Real> core::fmt::Display for Regularizer<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Regularizer::Tsallis(rho) => write!(f, "tsallis({rho})"),
            Regularizer::Zero => write!(f, "zero"),
        }
    }
}

/// Tsallis negentropy `Ω_ρ(q) = Σ_k q_k (q_k^{ρ−1} − 1)/(ρ(ρ−1))` for
/// ρ ≠ 1, and the Shannon form `Σ_k q_k log q_k` at ρ = 1 with 0·log 0 = 0.
///
/// Always ≤ 0, minimized at the uniform distribution, zero on point masses.
pub fn tsallis_negentropy<F: Real>(q: &Distribution<F>, rho: EntropicIndex<F>) -> F {
    if rho.is_classical() {
        return q.support().iter().map(|&i| q.prob(i) * q.prob(i).ln()).sum();
    }
    let r = rho.get();
    let power_sum: F = q.support().iter().map(|&i| q.prob(i).powf(r)).sum();
    (power_sum - F::one()) / (r * (r - F::one()))
}

fn validate_scores<F: Real>(eta: &[F]) -> Result<()> {
    if eta.is_empty() {
        return Err(Error::invalid("score vector needs at least one entry"));
    }
    for (i, &s) in eta.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::invalid(format!(
                "score {s} at index {i} is not finite"
            )));
        }
    }
    Ok(())
}

fn max_score<F: Real>(eta: &[F]) -> F {
    eta.iter().copied().fold(F::neg_infinity(), F::max)
}

/// Softmax closed form (full support by construction).
///
/// Softmax probabilities are strictly positive for every finite score, so
/// entries whose exponential underflows are floored at the smallest positive
/// normal value rather than collapsing to an exact zero. An exact zero would
/// silently move the index out of the support, which only the truncating maps
/// are allowed to do.
fn softmax<F: Real>(eta: &[F]) -> Distribution<F> {
    let m = max_score(eta);
    let mut probs: Vec<F> = eta.iter().map(|&s| (s - m).exp()).collect();
    let sum: F = probs.iter().copied().sum();
    let support = (0..probs.len()).collect();
    for p in probs.iter_mut() {
        *p = (*p / sum).max(F::min_positive_value());
    }
    Distribution { probs, support }
}

/// Sort-based Euclidean projection onto the simplex (sparsemax).
fn sparsemax<F: Real>(eta: &[F]) -> Distribution<F> {
    let m = max_score(eta);
    let shifted: Vec<F> = eta.iter().map(|&s| s - m).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite scores"));
    let mut cumsum = F::zero();
    let mut threshold = F::zero();
    for (j, &z) in sorted.iter().enumerate() {
        let jf = F::of((j + 1) as f64);
        cumsum += z;
        // z_(j) still clears the running threshold, so index j is active.
        let candidate = (cumsum - F::one()) / jf;
        if z > candidate {
            threshold = candidate;
        }
    }
    let probs = shifted
        .iter()
        .map(|&z| (z - threshold).max(F::zero()))
        .collect();
    Distribution::from_solver(probs)
}

/// Argmax map: 1/m on each of the m maximizers (exact float equality).
fn hard_max<F: Real>(eta: &[F]) -> Distribution<F> {
    let m = max_score(eta);
    let winners: Vec<usize> = eta
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == m)
        .map(|(i, _)| i)
        .collect();
    let w = F::of(1.0 / winners.len() as f64);
    let mut probs = vec![F::zero(); eta.len()];
    for &i in &winners {
        probs[i] = w;
    }
    Distribution {
        probs,
        support: winners,
    }
}

/// General ρ-entmax via bisection on the normalization threshold.
///
/// The optimality conditions give entries `q_k = exp_{2−ρ}(η_k − τ)` with τ
/// chosen so the entries sum to one. After shifting scores so max η = 0 the
/// residual `R(τ) = Σ_k exp_{2−ρ}(η_k − τ) − 1` is nonincreasing in τ with
/// `R(0) ≥ 0` and `R(log_ρ K) ≤ 0` (at the upper endpoint every term is at
/// most 1/K), so [0, log_ρ K] brackets the root for every ρ > 0.
///
/// Also usable at ρ inside the classical band (plain softmax normalization)
/// and at ρ = 2 (sparsemax); the closed forms are preferred by
/// [`prediction_map`], and agreement between the paths is tested.
pub fn entmax_bisect<F: Real>(eta: &[F], rho: EntropicIndex<F>) -> Result<Distribution<F>> {
    validate_scores(eta)?;
    let m = max_score(eta);
    let shifted: Vec<F> = eta.iter().map(|&s| s - m).collect();
    let k = F::of(eta.len() as f64);
    let residual_at = |tau: F| -> F {
        let sum: F = shifted.iter().map(|&s| exp_dual(s - tau, rho)).sum();
        sum - F::one()
    };
    let mut lo = F::zero();
    let mut hi = log_rho(k, rho).expect("k >= 1");
    let tol = F::of(BISECTION_TOLERANCE);
    // Indices within ~1e-6 of the classical point evaluate exp_{2−ρ}
    // through (1 + (ρ−1)u)^{1/(ρ−1)}, whose rounding noise is amplified by
    // 1/(ρ−1); the residual then bottoms out slightly above the tolerance
    // no matter how tight the bracket gets. A bracket at floating-point
    // resolution is therefore also success (the leftover residual is noise
    // that the final normalization removes); divergence is only reported
    // when the bracket is still wide and the residual still large.
    let resolution = F::of(f64::EPSILON) * (F::one() + hi.abs());
    let mut tau = F::zero();
    let mut residual = residual_at(tau);
    if residual.abs() > tol {
        for _ in 0..BISECTION_MAX_ITER {
            tau = (lo + hi) * F::of(0.5);
            residual = residual_at(tau);
            if residual.abs() <= tol || hi - lo <= resolution {
                break;
            }
            if residual > F::zero() {
                lo = tau;
            } else {
                hi = tau;
            }
        }
        if residual.abs() > tol && hi - lo > resolution {
            return Err(Error::BisectionDiverged {
                iterations: BISECTION_MAX_ITER,
                residual: residual.as_f64(),
            });
        }
    }
    let probs = shifted.iter().map(|&s| exp_dual(s - tau, rho)).collect();
    // Only indices above one can produce genuinely sparse solutions; at or
    // below one (and across the classical band) the map keeps full support,
    // so truncation there would fabricate zeros the mathematics forbids.
    if rho.is_classical() || rho.get() < F::one() {
        Ok(Distribution::from_dense_solver(probs))
    } else {
        Ok(Distribution::from_solver(probs))
    }
}

/// The Ω-regularized prediction map `Π_Ω(η) = argmax_{q ∈ Δ} ⟨q,η⟩ − Ω(q)`.
///
/// Dispatch: Tsallis with ρ in the classical band uses softmax, ρ = 2 the
/// sort-based sparsemax, any other ρ the bisection solver; the zero
/// regularizer uses the argmax map with ties split 1/m.
pub fn prediction_map<F: Real>(eta: &[F], omega: &Regularizer<F>) -> Result<Distribution<F>> {
    validate_scores(eta)?;
    match omega {
        Regularizer::Zero => Ok(hard_max(eta)),
        Regularizer::Tsallis(rho) => {
            if rho.is_classical() {
                Ok(softmax(eta))
            } else if rho.get() == F::of(2.0) {
                Ok(sparsemax(eta))
            } else {
                entmax_bisect(eta, *rho)
            }
        }
    }
}

/// Convex conjugate `Ω*(η) = ⟨q*, η⟩ − Ω(q*)` evaluated at `q* = Π_Ω(η)`.
pub fn conjugate<F: Real>(eta: &[F], omega: &Regularizer<F>) -> Result<F> {
    let q = prediction_map(eta, omega)?;
    Ok(q.support_dot(eta) - omega.omega(&q))
}

/// Fenchel-Young loss `L_Ω(η; q) = Ω*(η) − ⟨q, η⟩ + Ω(q)`.
///
/// Nonnegative; zero exactly when `q = Π_Ω(η)`.
pub fn fy_loss<F: Real>(eta: &[F], q: &Distribution<F>, omega: &Regularizer<F>) -> Result<F> {
    if q.len() != eta.len() {
        return Err(Error::invalid(format!(
            "score length {} does not match distribution length {}",
            eta.len(),
            q.len()
        )));
    }
    Ok(conjugate(eta, omega)? - q.support_dot(eta) + omega.omega(q))
}

/// Gradient of [`fy_loss`] in the scores: `∇_η L_Ω(η; q) = Π_Ω(η) − q`.
pub fn fy_loss_score_gradient<F: Real>(
    eta: &[F],
    q: &Distribution<F>,
    omega: &Regularizer<F>,
) -> Result<Vec<F>> {
    if q.len() != eta.len() {
        return Err(Error::invalid(format!(
            "score length {} does not match distribution length {}",
            eta.len(),
            q.len()
        )));
    }
    let p = prediction_map(eta, omega)?;
    Ok(p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| a - b)
        .collect())
}

/// Variational posterior over a finite latent domain: the minimizer of
/// `E_q[loss] + L_Ω(η; q)` over the simplex, which is `Π_Ω(η − loss)`.
pub fn fyvi_solve<F: Real>(
    eta: &[F],
    loss: &[F],
    omega: &Regularizer<F>,
) -> Result<Distribution<F>> {
    if eta.len() != loss.len() {
        return Err(Error::invalid(format!(
            "score length {} does not match loss length {}",
            eta.len(),
            loss.len()
        )));
    }
    let scores: Vec<F> = eta.iter().zip(loss).map(|(&e, &l)| e - l).collect();
    prediction_map(&scores, omega)
}
