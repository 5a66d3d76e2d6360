//! Scalar ρ-deformed logarithm and exponential functions.
//!
//! For an entropic index ρ > 0 the deformed pair is
//!
//! ```text
//! log_ρ(x) = (x^{1−ρ} − 1)/(1−ρ)          x > 0
//! exp_ρ(u) = [1 + (1−ρ)u]_+^{1/(1−ρ)}
//! ```
//!
//! with the classical `ln`/`exp` recovered as ρ → 1. The conjugate-index
//! functions `log_{2−ρ}` and `exp_{2−ρ}` show up throughout the sparse
//! prediction maps and are exposed here as [`log_dual`] and [`exp_dual`] so
//! callers never have to build an index at 2−ρ (which falls outside the
//! ρ > 0 domain once ρ ≥ 2).
//!
//! Near ρ = 1 the closed forms divide vanishing quantities by vanishing
//! quantities; inside a narrow band around 1 we switch to the classical
//! branch instead of evaluating the cancellation-prone formula.

use crate::error::{Error, Result};
use crate::real::Real;

/// Width of the band around ρ = 1 treated as the classical branch.
///
/// 1e−8 keeps the deformed formulas out of the region where computing
/// (x^{1−ρ} − 1)/(1−ρ) loses most of its significant digits.
pub const CLASSICAL_BRANCH_WIDTH: f64 = 1e-8;

/// Validated entropic index ρ > 0.
///
/// ρ = 1 (more precisely |ρ − 1| below [`CLASSICAL_BRANCH_WIDTH`]) selects
/// the classical logarithm/exponential limit branch everywhere.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct EntropicIndex<F: Real>(F);

impl<F: Real> EntropicIndex<F> {
    /// Builds an index, rejecting non-finite or non-positive values.
    pub fn new(rho: F) -> Result<Self> {
        if !rho.is_finite() || rho <= F::zero() {
            return Err(Error::invalid(format!(
                "entropic index must be finite and > 0, got {rho}"
            )));
        }
        Ok(EntropicIndex(rho))
    }

    /// The index ρ = 1 (classical Shannon / log / exp branch).
    pub fn shannon() -> Self {
        EntropicIndex(F::one())
    }

    pub fn get(self) -> F {
        self.0
    }

    /// True when this index lies in the classical branch band around 1.
    pub fn is_classical(self) -> bool {
        (self.0 - F::one()).abs() < F::of(CLASSICAL_BRANCH_WIDTH)
    }
}

impl<F: Real> core::fmt::Display for EntropicIndex<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `base^exponent` with the bracket clamp: nonpositive bases map to 0 when
/// the exponent is positive and diverge to +∞ when it is negative. Never
/// returns NaN for finite inputs.
fn clamped_power<F: Real>(base: F, exponent: F) -> F {
    if base <= F::zero() {
        if exponent > F::zero() {
            F::zero()
        } else {
            F::infinity()
        }
    } else {
        base.powf(exponent)
    }
}

/// Deformed logarithm `log_ρ(x) = (x^{1−ρ} − 1)/(1−ρ)`, `ln x` at ρ = 1.
///
/// Errors on x ≤ 0 (or NaN); the deformed logarithm is only defined for
/// positive arguments.
pub fn log_rho<F: Real>(x: F, rho: EntropicIndex<F>) -> Result<F> {
    if !(x > F::zero()) {
        return Err(Error::invalid(format!(
            "deformed logarithm requires x > 0, got {x}"
        )));
    }
    if rho.is_classical() {
        return Ok(x.ln());
    }
    let one_minus = F::one() - rho.get();
    Ok((x.powf(one_minus) - F::one()) / one_minus)
}

/// Deformed exponential `exp_ρ(u) = [1 + (1−ρ)u]_+^{1/(1−ρ)}`, `e^u` at ρ = 1.
///
/// Total on the reals: a nonpositive bracket gives 0 for ρ < 1 and +∞ for
/// ρ > 1 (the function diverges as the bracket closes), never NaN.
pub fn exp_rho<F: Real>(u: F, rho: EntropicIndex<F>) -> F {
    if rho.is_classical() {
        return u.exp();
    }
    let one_minus = F::one() - rho.get();
    clamped_power(F::one() + one_minus * u, one_minus.recip())
}

/// Conjugate-index logarithm `log_{2−ρ}(x) = (x^{ρ−1} − 1)/(ρ−1)`.
///
/// Same branch rules as [`log_rho`]; the index argument is still ρ, the
/// function evaluates the deformed logarithm at 2−ρ.
pub fn log_dual<F: Real>(x: F, rho: EntropicIndex<F>) -> Result<F> {
    if !(x > F::zero()) {
        return Err(Error::invalid(format!(
            "deformed logarithm requires x > 0, got {x}"
        )));
    }
    if rho.is_classical() {
        return Ok(x.ln());
    }
    let rho_minus = rho.get() - F::one();
    Ok((x.powf(rho_minus) - F::one()) / rho_minus)
}

/// Conjugate-index exponential `exp_{2−ρ}(u) = [1 + (ρ−1)u]_+^{1/(ρ−1)}`.
///
/// This is the functional form of sparse prediction-map entries: for ρ = 2
/// it is the ReLU `[1 + u]_+`, for ρ → 1 the ordinary exponential.
pub fn exp_dual<F: Real>(u: F, rho: EntropicIndex<F>) -> F {
    if rho.is_classical() {
        return u.exp();
    }
    let rho_minus = rho.get() - F::one();
    clamped_power(F::one() + rho_minus * u, rho_minus.recip())
}
