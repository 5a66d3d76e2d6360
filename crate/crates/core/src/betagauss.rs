//! The (2−ρ)-Gaussian ("truncated parabola") continuous family: the image
//! of a Gaussian scoring function under the Tsallis-regularized prediction
//! map over densities.
//!
//! The standard member at entropic index ρ ∈ (1, 2] is
//!
//! ```text
//! q₀(ε) = exp_{2−ρ}(−ε²/2 − A_ρ) = [a_ρ − (ρ−1)ε²/2]_+^{1/(ρ−1)}
//! ```
//!
//! with A_ρ the normalization constant and a_ρ = 1 − (ρ−1)A_ρ. The support
//! is the bounded interval [−r₀, r₀], r₀ = √(2a_ρ/(ρ−1)); ρ = 3/2 gives
//! the Biweight shape, ρ = 2 the Epanechnikov parabola, and ρ → 1 the
//! standard normal (unbounded). General members are location-scale:
//! z = μ + σε per dimension, densities multiply across dimensions.
//!
//! The normalizer has the closed form (with m = 1/(ρ−1))
//!
//! ```text
//! ∫ [a(1 − t²)]^m a^{1/2} √(2/(ρ−1)) dt = 1
//! ⇒  a_ρ = [√((ρ−1)/2) / I_ρ]^{1/(m + 1/2)},   I_ρ = √π Γ(m+1)/Γ(m+3/2)
//! ```
//!
//! evaluated through log-gamma so it stays accurate arbitrarily close to
//! ρ = 1 (where m explodes but a_ρ → 1). Moments and entropies are
//! Gauss–Legendre integrals over the bounded support; both routes are
//! cross-checked in tests.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::deformed::{exp_dual, EntropicIndex};
use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, DEFAULT_ORDER};

/// Number of intervals in the tabulated standard-member CDF.
const CDF_KNOTS: usize = 4096;

/// Inverse-CDF solve tolerance in the uniform variable.
const INVERSE_CDF_TOLERANCE: f64 = 1e-10;

/// Integration/tabulation halfwidth cap: near ρ = 1 the formal support
/// radius diverges while the density is already below 1e−300 at |ε| = 40,
/// so integrals are taken over [−min(r₀, 40), min(r₀, 40)].
const HALFWIDTH_CAP: f64 = 40.0;

/// Marker for the standard-normal scoring function η(z) = −½‖z‖².
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StandardNormalScore;

/// Location-scale parameters of a diagonal (2−ρ)-Gaussian.
///
/// The index is restricted to ρ = 1 (diagonal Gaussian) or ρ ∈ (1, 2]
/// (bounded-support members up to the Epanechnikov).
#[derive(Clone, Debug, PartialEq)]
pub struct BetaGaussianParams {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    rho: EntropicIndex<f64>,
}

impl BetaGaussianParams {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, rho: EntropicIndex<f64>) -> Result<Self> {
        if mu.len() != sigma.len() || mu.is_empty() {
            return Err(Error::invalid(format!(
                "location ({}) and scale ({}) dimensions must match and be nonzero",
                mu.len(),
                sigma.len()
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("location entries must be finite"));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::invalid("scale entries must be finite and > 0"));
        }
        validate_family_index(rho)?;
        Ok(BetaGaussianParams { mu, sigma, rho })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn rho(&self) -> EntropicIndex<f64> {
        self.rho
    }
}

pub(crate) fn validate_family_index(rho: EntropicIndex<f64>) -> Result<()> {
    let r = rho.get();
    if rho.is_classical() || (r > 1.0 && r <= 2.0) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "continuous-family index must be 1 or in (1, 2], got {r}"
        )))
    }
}

/// Precomputed constants and CDF table of the standard member at one ρ.
///
/// Built once per ρ and shared behind an `Arc`; the cache is read-only
/// after construction.
#[derive(Debug)]
pub struct StandardMember {
    rho: EntropicIndex<f64>,
    classical: bool,
    /// Bracket peak a_ρ (NaN for the classical member).
    bracket_peak: f64,
    /// Normalization constant A_ρ in exp_{2−ρ}(−ε²/2 − A_ρ).
    normalizer: f64,
    /// Support half-width r₀ (+∞ for the classical member).
    radius: f64,
    /// Integration/tabulation half-width min(r₀, cap).
    halfwidth: f64,
    /// Variance of the standard member.
    variance: f64,
    /// Power mass J = ∫ q₀^ρ (1 for the classical member by convention).
    power_mass: f64,
    /// Tsallis negentropy Ω_ρ(q₀).
    negentropy: f64,
    /// Conjugate value Ω*_ρ(η) at the standard score.
    conjugate: f64,
    /// CDF values at 4097 equispaced knots on [−halfwidth, halfwidth].
    cdf_knots: Vec<f64>,
    knot_step: f64,
    local_rule: GaussLegendre,
}

impl StandardMember {
    fn build(rho: EntropicIndex<f64>) -> Self {
        let local_rule = GaussLegendre::new(8);
        if rho.is_classical() {
            let two_pi = 2.0 * std::f64::consts::PI;
            return StandardMember {
                rho,
                classical: true,
                bracket_peak: f64::NAN,
                normalizer: 0.5 * two_pi.ln(),
                radius: f64::INFINITY,
                halfwidth: HALFWIDTH_CAP,
                variance: 1.0,
                power_mass: 1.0,
                negentropy: -0.5 * (two_pi.ln() + 1.0),
                conjugate: 0.5 * two_pi.ln(),
                cdf_knots: Vec::new(),
                knot_step: 0.0,
                local_rule,
            };
        }
        let r = rho.get();
        let m = 1.0 / (r - 1.0);
        // I_ρ = ∫_{−1}^{1} (1−t²)^m dt through log-gamma: the difference of
        // log-gammas keeps relative accuracy even for m ~ 1e8.
        let ln_parabola_integral =
            0.5 * std::f64::consts::PI.ln() + ln_gamma(m + 1.0) - ln_gamma(m + 1.5);
        let ln_a = (0.5 * ((r - 1.0) / 2.0).ln() - ln_parabola_integral) / (m + 0.5);
        let bracket_peak = ln_a.exp();
        let normalizer = (1.0 - bracket_peak) / (r - 1.0);
        let radius = (2.0 * bracket_peak / (r - 1.0)).sqrt();
        let halfwidth = radius.min(HALFWIDTH_CAP);

        let pdf = |eps: f64| exp_dual(-0.5 * eps * eps - normalizer, rho);
        let rule = GaussLegendre::new(DEFAULT_ORDER);
        let variance = rule.integrate(-halfwidth, halfwidth, |e| e * e * pdf(e));
        let power_mass = rule.integrate(-halfwidth, halfwidth, |e| pdf(e).powf(r));
        let negentropy = (power_mass - 1.0) / (r * (r - 1.0));
        let conjugate = -0.5 * variance - negentropy;

        // Cumulative table: per-interval Gauss–Legendre, renormalized so
        // the last knot is exactly 1.
        let mut cdf_knots = Vec::with_capacity(CDF_KNOTS + 1);
        let knot_step = 2.0 * halfwidth / CDF_KNOTS as f64;
        let mut cum = 0.0;
        cdf_knots.push(0.0);
        for i in 0..CDF_KNOTS {
            let a = -halfwidth + i as f64 * knot_step;
            cum += local_rule.integrate(a, a + knot_step, pdf);
            cdf_knots.push(cum);
        }
        let total = cum;
        for c in cdf_knots.iter_mut() {
            *c /= total;
        }

        StandardMember {
            rho,
            classical: false,
            bracket_peak,
            normalizer,
            radius,
            halfwidth,
            variance,
            power_mass,
            negentropy,
            conjugate,
            cdf_knots,
            knot_step,
            local_rule,
        }
    }

    pub fn rho(&self) -> EntropicIndex<f64> {
        self.rho
    }

    pub fn is_classical(&self) -> bool {
        self.classical
    }

    pub fn bracket_peak(&self) -> f64 {
        self.bracket_peak
    }

    /// Normalization constant A_ρ of the score form exp_{2−ρ}(η − A_ρ).
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// J = ∫ q₀^ρ. Tied to the variance by the exact identity J = ρ·Var.
    pub fn power_mass(&self) -> f64 {
        self.power_mass
    }

    pub fn negentropy(&self) -> f64 {
        self.negentropy
    }

    /// Ω*_ρ(η) at the standard score, equal to E_{q₀}[η] − Ω_ρ(q₀).
    pub fn conjugate(&self) -> f64 {
        self.conjugate
    }

    /// Density of the standard member.
    pub fn pdf(&self, eps: f64) -> f64 {
        if self.classical {
            (-0.5 * eps * eps - self.normalizer).exp()
        } else {
            exp_dual(-0.5 * eps * eps - self.normalizer, self.rho)
        }
    }

    /// CDF of the standard member (tabulated + local quadrature; closed
    /// form for the classical member).
    pub fn cdf(&self, eps: f64) -> f64 {
        if self.classical {
            return normal_cdf(eps);
        }
        if eps <= -self.halfwidth {
            return 0.0;
        }
        if eps >= self.halfwidth {
            return 1.0;
        }
        let pos = (eps + self.halfwidth) / self.knot_step;
        let i = (pos.floor() as usize).min(CDF_KNOTS - 1);
        let a = -self.halfwidth + i as f64 * self.knot_step;
        let local = self.local_rule.integrate(a, eps, |e| self.pdf(e));
        (self.cdf_knots[i] + local).clamp(0.0, 1.0)
    }

    /// Inverse CDF by knot lookup plus bisection, to 1e−10 in the uniform
    /// variable. Only defined for the bounded members; the classical
    /// member samples directly.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if self.classical {
            return Err(Error::invalid(
                "inverse-CDF table is only built for bounded members; sample the normal directly",
            ));
        }
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!("uniform variable {u} outside [0,1]")));
        }
        // First knot with CDF above u brackets the solution.
        let idx = self.cdf_knots.partition_point(|&c| c < u);
        if idx == 0 {
            return Ok(-self.halfwidth);
        }
        if idx > CDF_KNOTS {
            return Ok(self.halfwidth);
        }
        let i = idx - 1;
        let base = self.cdf_knots[i];
        let a = -self.halfwidth + i as f64 * self.knot_step;
        let mut lo = a;
        let mut hi = a + self.knot_step;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let c = base + self.local_rule.integrate(a, mid, |e| self.pdf(e));
            let miss = c - u;
            if miss.abs() <= INVERSE_CDF_TOLERANCE {
                return Ok(mid);
            }
            if miss < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// One standard draw from the given generator: inverse-CDF for the
    /// bounded members, direct normal sampling at ρ = 1.
    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        if self.classical {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        } else {
            let u = rng.random::<f64>();
            self.inverse_cdf(u).expect("u in range for bounded member")
        }
    }
}

fn normal_cdf(x: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::standard().cdf(x)
}

/// Shared standard-member cache, one entry per distinct ρ bit pattern.
pub fn standard_member(rho: EntropicIndex<f64>) -> Result<Arc<StandardMember>> {
    validate_family_index(rho)?;
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<StandardMember>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = rho.get().to_bits();
    let mut map = cache.lock().expect("member cache poisoned");
    Ok(Arc::clone(
        map.entry(key)
            .or_insert_with(|| Arc::new(StandardMember::build(rho))),
    ))
}

/// Joint density at `z` (product of the per-dimension location-scale
/// members); exactly zero outside the bounded support for ρ > 1.
pub fn pdf(params: &BetaGaussianParams, z: &[f64]) -> Result<f64> {
    if z.len() != params.dim() {
        return Err(Error::invalid(format!(
            "point dimension {} does not match parameter dimension {}",
            z.len(),
            params.dim()
        )));
    }
    let member = standard_member(params.rho)?;
    let mut density = 1.0;
    for d in 0..params.dim() {
        let eps = (z[d] - params.mu[d]) / params.sigma[d];
        density *= member.pdf(eps) / params.sigma[d];
    }
    Ok(density)
}

/// Half-width of the support interval in dimension `dim`; +∞ iff ρ = 1.
pub fn support_radius(params: &BetaGaussianParams, dim: usize) -> Result<f64> {
    if dim >= params.dim() {
        return Err(Error::invalid(format!(
            "dimension {dim} out of range for {}-dimensional parameters",
            params.dim()
        )));
    }
    let member = standard_member(params.rho)?;
    Ok(params.sigma[dim] * member.radius())
}

/// CDF of the marginal in dimension `dim` at scalar `z`.
pub fn cdf(params: &BetaGaussianParams, dim: usize, z: f64) -> Result<f64> {
    if dim >= params.dim() {
        return Err(Error::invalid(format!(
            "dimension {dim} out of range for {}-dimensional parameters",
            params.dim()
        )));
    }
    let member = standard_member(params.rho)?;
    Ok(member.cdf((z - params.mu[dim]) / params.sigma[dim]))
}

/// `n` i.i.d. draws, reparametrized as z = μ + σ·ε with ε from the
/// standard member. Deterministic per seed.
pub fn sample(params: &BetaGaussianParams, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    use rand::SeedableRng;
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let member = standard_member(params.rho)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let row = (0..params.dim())
            .map(|d| params.mu[d] + params.sigma[d] * member.draw(&mut rng))
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// Fenchel-Young regularizer L_Ω(η; q) of the parametrized member against
/// the standard-normal score, summed over dimensions.
///
/// Per dimension (writing v₀ and J for the standard member's variance and
/// power mass):
///
/// ```text
/// L(μ, σ) = Ω*_ρ(η) + (μ² + σ²v₀)/2 + (σ^{1−ρ} J − 1)/(ρ(ρ−1))
/// ```
///
/// using E_q[−z²/2] = −(μ² + σ²v₀)/2 and the exact scale law
/// ∫ q_{μ,σ}^ρ = σ^{1−ρ} J. Nonnegative; zero exactly at μ = 0, σ = 1.
/// At ρ = 1 this is the Gaussian KL divergence ½(μ² + σ² − 1 − 2 ln σ).
pub fn fy_regularizer(
    params: &BetaGaussianParams,
    _prior: StandardNormalScore,
    rho_reg: EntropicIndex<f64>,
) -> Result<f64> {
    let member = matching_member(params, rho_reg)?;
    let mut total = 0.0;
    for d in 0..params.dim() {
        total += dimension_regularizer(&member, params.mu[d], params.sigma[d]);
    }
    Ok(total)
}

/// Exact gradient of [`fy_regularizer`] in (μ, σ):
/// ∂/∂μ_d = μ_d and ∂/∂σ_d = σ_d v₀ − σ_d^{−ρ} J/ρ (σ − 1/σ at ρ = 1).
pub fn fy_regularizer_gradient(
    params: &BetaGaussianParams,
    _prior: StandardNormalScore,
    rho_reg: EntropicIndex<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let member = matching_member(params, rho_reg)?;
    let d_mu = params.mu.clone();
    let d_sigma = params
        .sigma
        .iter()
        .map(|&s| {
            if member.is_classical() {
                s - 1.0 / s
            } else {
                let r = member.rho().get();
                s * member.variance() - s.powf(-r) * member.power_mass() / r
            }
        })
        .collect();
    Ok((d_mu, d_sigma))
}

fn matching_member(
    params: &BetaGaussianParams,
    rho_reg: EntropicIndex<f64>,
) -> Result<Arc<StandardMember>> {
    if rho_reg.get() != params.rho.get() {
        return Err(Error::invalid(format!(
            "regularizer index {} must match the family index {} (the family is the map image at that index)",
            rho_reg.get(),
            params.rho.get()
        )));
    }
    standard_member(params.rho)
}

fn dimension_regularizer(member: &StandardMember, mu: f64, sigma: f64) -> f64 {
    if member.is_classical() {
        return 0.5 * (mu * mu + sigma * sigma - 1.0) - sigma.ln();
    }
    let r = member.rho().get();
    let expected_score = 0.5 * (mu * mu + sigma * sigma * member.variance());
    let scaled_negentropy =
        (sigma.powf(1.0 - r) * member.power_mass() - 1.0) / (r * (r - 1.0));
    member.conjugate() + expected_score + scaled_negentropy
}
