//! Independent oracles for the acceptance suite: a from-scratch textbook
//! EM trajectory and a projected-gradient simplex minimizer. Nothing here
//! calls into the library's inference code; only basic linear algebra and
//! the closed-form entropy expressions are shared knowledge.

use nalgebra::{DMatrix, DVector};

/// One textbook-EM iterate: mixing proportions, means, covariances.
#[derive(Clone)]
pub struct EmIterate {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

/// Classical Gaussian-mixture EM, written the way a textbook states it:
/// log-domain posterior responsibilities, then weighted MLE updates
///
/// ```text
/// r_ij ∝ π_j N(x_i; μ_j, Σ_j)
/// π_j = Σ_i r_ij / N,  μ_j = Σ_i r_ij x_i / Σ_i r_ij,
/// Σ_j = Σ_i r_ij (x_i − μ_j)(x_i − μ_j)ᵀ / Σ_i r_ij + jitter·I
/// ```
///
/// `jitter` is the usual diagonal stability floor; pass the same constant
/// the implementation under test documents so trajectories are comparable
/// at tight tolerances.
pub fn textbook_em_trajectory(
    x: &DMatrix<f64>,
    init: &EmIterate,
    iterations: usize,
    jitter: f64,
) -> Vec<EmIterate> {
    let n = x.nrows();
    let d = x.ncols();
    let k = init.weights.len();
    let mut state = init.clone();
    let mut out = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        // E-step in the log domain.
        let mut log_terms = DMatrix::zeros(n, k);
        for j in 0..k {
            let cov = &state.covariances[j];
            let chol = cov.clone().cholesky().expect("positive definite covariance");
            let log_det = 2.0 * (0..d).map(|t| chol.l()[(t, t)].ln()).sum::<f64>();
            let base = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
            for i in 0..n {
                let diff = x.row(i).transpose() - &state.means[j];
                let solved = chol.solve(&diff);
                let maha = diff.dot(&solved);
                log_terms[(i, j)] = state.weights[j].ln() + base - 0.5 * maha;
            }
        }
        let mut resp = DMatrix::zeros(n, k);
        for i in 0..n {
            let row_max = (0..k).fold(f64::NEG_INFINITY, |m, j| m.max(log_terms[(i, j)]));
            let mut denom = 0.0;
            for j in 0..k {
                let e = (log_terms[(i, j)] - row_max).exp();
                resp[(i, j)] = e;
                denom += e;
            }
            for j in 0..k {
                resp[(i, j)] /= denom;
            }
        }

        // M-step.
        let mut next = EmIterate {
            weights: vec![0.0; k],
            means: Vec::with_capacity(k),
            covariances: Vec::with_capacity(k),
        };
        for j in 0..k {
            let mass: f64 = (0..n).map(|i| resp[(i, j)]).sum();
            next.weights[j] = mass / n as f64;
            let mut mu = DVector::zeros(d);
            for i in 0..n {
                mu += resp[(i, j)] * x.row(i).transpose();
            }
            mu /= mass;
            let mut cov = DMatrix::zeros(d, d);
            for i in 0..n {
                let diff = x.row(i).transpose() - &mu;
                cov += resp[(i, j)] * &diff * diff.transpose();
            }
            cov /= mass;
            for t in 0..d {
                cov[(t, t)] += jitter;
            }
            next.means.push(mu);
            next.covariances.push(cov);
        }
        state = next;
        out.push(state.clone());
    }
    out
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u > candidate {
            theta = candidate;
        }
    }
    v.iter().map(|&u| (u - theta).max(0.0)).collect()
}

/// Tsallis negentropy in its direct form, for the oracle objective.
fn negentropy(q: &[f64], rho: f64) -> f64 {
    if (rho - 1.0).abs() < 1e-12 {
        q.iter().map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 }).sum()
    } else {
        let power_sum: f64 = q.iter().map(|&p| p.powf(rho)).sum();
        (power_sum - 1.0) / (rho * (rho - 1.0))
    }
}

/// Minimizes `⟨q, loss⟩ − ⟨q, eta⟩ + Ω_ρ(q)` over the simplex by plain
/// projected gradient descent. This objective differs from
/// `E_q[loss] + L_Ω(eta; q)` only by the constant `Ω*(eta)`, so the two
/// share a minimizer while the oracle stays free of any conjugate code.
///
/// The step size decays in three phases: the entropy gradient's curvature
/// grows like 1/q near the boundary, so a single step either crawls from
/// far away or limit-cycles around small coordinates. The final step is
/// chosen inside the stability region for the smallest probabilities that
/// moderate score gaps (|eta − loss| spans of a dozen nats) can produce.
pub fn pgd_minimize(eta: &[f64], loss: &[f64], rho: f64) -> Vec<f64> {
    let k = eta.len();
    let mut q = vec![1.0 / k as f64; k];
    for &(steps, step) in &[(10_000usize, 1e-2f64), (40_000, 1e-3), (150_000, 2e-4)] {
        for _ in 0..steps {
            let grad: Vec<f64> = (0..k)
                .map(|j| {
                    let p = q[j].max(1e-15);
                    let omega_grad = if (rho - 1.0).abs() < 1e-12 {
                        p.ln() + 1.0
                    } else {
                        p.powf(rho - 1.0) / (rho - 1.0)
                    };
                    loss[j] - eta[j] + omega_grad
                })
                .collect();
            let moved: Vec<f64> = (0..k).map(|j| q[j] - step * grad[j]).collect();
            q = project_to_simplex(&moved);
        }
    }
    q
}

/// Oracle objective value, for verifying the PGD run actually minimized.
pub fn oracle_objective(q: &[f64], eta: &[f64], loss: &[f64], rho: f64) -> f64 {
    let linear: f64 = q.iter().zip(eta).zip(loss).map(|((&p, &e), &l)| p * (l - e)).sum();
    linear + negentropy(q, rho)
}
