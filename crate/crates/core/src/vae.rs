//! Toy variational autoencoder trained on the Fenchel-Young evidence
//! bound: a two-layer encoder producing a diagonal (2−ρ)-Gaussian
//! posterior, a mirrored two-layer decoder producing per-pixel scores,
//! and a per-pixel two-class FY observation loss (Bernoulli cross-entropy
//! at ρ' = 1, sparse two-class projection at ρ' = 2).
//!
//! The per-batch objective is
//!
//! ```text
//! (1/B) Σ_i [ Σ_j L_{Ψ_{ρ'}}((s_ij, 0); (x_ij, 1−x_ij))
//!             + β · L_reg(μ_i, σ_i) ]
//! ```
//!
//! with `s = decoder(z)`, `z = μ + σ ∘ ε`, and `ε` drawn once per datum
//! from the standard (2−ρ) member, so every gradient flows through the
//! reparametrization `z = μ + σ ε`. All gradients are accumulated by
//! hand-written reverse passes over the two rectifier MLPs; there is no
//! autodiff anywhere.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;

use crate::betagauss::{
    fy_regularizer, fy_regularizer_gradient, standard_member, BetaGaussianParams,
    StandardNormalScore,
};
use crate::deformed::EntropicIndex;
use crate::error::{Error, Result};
use crate::simplex::{fy_loss, prediction_map, Distribution, Regularizer};

/// A training step whose batch loss exceeds this aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Architecture and optimization settings.
///
/// `rho_posterior` selects the latent family (1 = Gaussian, up to 2 =
/// bounded-support members); `rho_obs` selects the per-pixel observation
/// loss (1 = Bernoulli cross-entropy, 2 = sparse two-class projection).
#[derive(Debug, Clone, PartialEq)]
pub struct VaeConfig {
    pub input_dim: usize,
    pub hidden_dims: (usize, usize),
    pub latent_dim: usize,
    pub rho_posterior: f64,
    pub rho_obs: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl VaeConfig {
    /// The default desk-scale configuration: 8×8 inputs, (32, 16) hidden
    /// layers, 4 latent dimensions, β = 0.01.
    pub fn toy(rho_posterior: f64, rho_obs: f64, seed: u64) -> Self {
        VaeConfig {
            input_dim: 64,
            hidden_dims: (32, 16),
            latent_dim: 4,
            rho_posterior,
            rho_obs,
            beta: 0.01,
            learning_rate: 0.02,
            batch_size: 64,
            epochs: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.hidden_dims.0 == 0
            || self.hidden_dims.1 == 0
            || self.latent_dim == 0
            || self.batch_size == 0
            || self.epochs == 0
        {
            return Err(Error::invalid("all architecture counts must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta must be positive and finite"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive and finite"));
        }
        if self.rho_obs != 1.0 && self.rho_obs != 2.0 {
            return Err(Error::invalid(
                "observation index must be 1 (cross-entropy) or 2 (sparse)",
            ));
        }
        // The latent family is the same one the continuous module accepts.
        crate::betagauss::validate_family_index(self.posterior_index()?)?;
        Ok(())
    }

    pub fn posterior_index(&self) -> Result<EntropicIndex<f64>> {
        EntropicIndex::new(self.rho_posterior)
    }

    fn observation_regularizer(&self) -> Result<Regularizer<f64>> {
        Regularizer::tsallis(self.rho_obs)
    }
}

/// All weights and biases. Encoder: input → h1 → h2 → (μ head, log σ
/// head). Decoder: latent → h2 → h1 → per-pixel scores. Weight matrices
/// are stored output × input so a forward step is `x · Wᵀ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeParams {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub w_mu: DMatrix<f64>,
    pub b_mu: DVector<f64>,
    pub w_ls: DMatrix<f64>,
    pub b_ls: DVector<f64>,
    pub v1: DMatrix<f64>,
    pub c1: DVector<f64>,
    pub v2: DMatrix<f64>,
    pub c2: DVector<f64>,
    pub v3: DMatrix<f64>,
    pub c3: DVector<f64>,
}

impl VaeParams {
    /// Seeded initialization: weights uniform in ±1/√fan_in, biases zero,
    /// so σ = exp(log σ) starts near 1.
    pub fn seeded(config: &VaeConfig) -> Result<Self> {
        config.validate()?;
        let (h1, h2) = config.hidden_dims;
        let (d, l) = (config.input_dim, config.latent_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layer = |rows: usize, cols: usize| -> DMatrix<f64> {
            let bound = 1.0 / (cols as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * bound)
        };
        Ok(VaeParams {
            w1: layer(h1, d),
            b1: DVector::zeros(h1),
            w2: layer(h2, h1),
            b2: DVector::zeros(h2),
            w_mu: layer(l, h2),
            b_mu: DVector::zeros(l),
            w_ls: layer(l, h2),
            b_ls: DVector::zeros(l),
            v1: layer(h2, l),
            c1: DVector::zeros(h2),
            v2: layer(h1, h2),
            c2: DVector::zeros(h1),
            v3: layer(d, h1),
            c3: DVector::zeros(d),
        })
    }

    fn zeros_like(&self) -> Self {
        let z = |m: &DMatrix<f64>| DMatrix::zeros(m.nrows(), m.ncols());
        let zv = |v: &DVector<f64>| DVector::zeros(v.nrows());
        VaeParams {
            w1: z(&self.w1),
            b1: zv(&self.b1),
            w2: z(&self.w2),
            b2: zv(&self.b2),
            w_mu: z(&self.w_mu),
            b_mu: zv(&self.b_mu),
            w_ls: z(&self.w_ls),
            b_ls: zv(&self.b_ls),
            v1: z(&self.v1),
            c1: zv(&self.c1),
            v2: z(&self.v2),
            c2: zv(&self.c2),
            v3: z(&self.v3),
            c3: zv(&self.c3),
        }
    }

    /// `self += alpha * other`, field by field (the SGD update).
    pub fn scaled_add(&mut self, alpha: f64, other: &Self) {
        self.w1 += alpha * &other.w1;
        self.b1 += alpha * &other.b1;
        self.w2 += alpha * &other.w2;
        self.b2 += alpha * &other.b2;
        self.w_mu += alpha * &other.w_mu;
        self.b_mu += alpha * &other.b_mu;
        self.w_ls += alpha * &other.w_ls;
        self.b_ls += alpha * &other.b_ls;
        self.v1 += alpha * &other.v1;
        self.c1 += alpha * &other.c1;
        self.v2 += alpha * &other.v2;
        self.c2 += alpha * &other.c2;
        self.v3 += alpha * &other.v3;
        self.c3 += alpha * &other.c3;
    }

    /// Fixed-order field list, used by the checkpoint writer and the
    /// finite-difference tests.
    fn fields(&self) -> [(&'static str, &DMatrix<f64>, Option<&DVector<f64>>); 14] {
        [
            ("w1", &self.w1, None),
            ("b1", &self.w1, Some(&self.b1)),
            ("w2", &self.w2, None),
            ("b2", &self.w2, Some(&self.b2)),
            ("w_mu", &self.w_mu, None),
            ("b_mu", &self.w_mu, Some(&self.b_mu)),
            ("w_ls", &self.w_ls, None),
            ("b_ls", &self.w_ls, Some(&self.b_ls)),
            ("v1", &self.v1, None),
            ("c1", &self.v1, Some(&self.c1)),
            ("v2", &self.v2, None),
            ("c2", &self.v2, Some(&self.c2)),
            ("v3", &self.v3, None),
            ("c3", &self.v3, Some(&self.c3)),
        ]
    }

    /// Visits every scalar in the fixed field order.
    pub fn for_each_scalar_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        for m in [
            &mut self.w1,
            &mut self.w2,
            &mut self.w_mu,
            &mut self.w_ls,
            &mut self.v1,
            &mut self.v2,
            &mut self.v3,
        ] {
            for v in m.iter_mut() {
                f(v);
            }
        }
        for b in [
            &mut self.b1,
            &mut self.b2,
            &mut self.b_mu,
            &mut self.b_ls,
            &mut self.c1,
            &mut self.c2,
            &mut self.c3,
        ] {
            for v in b.iter_mut() {
                f(v);
            }
        }
    }
}

fn relu(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| v.max(0.0))
}

/// Derivative mask: 1 where the pre-activation was positive.
fn relu_mask(pre: &DMatrix<f64>, grad: &DMatrix<f64>) -> DMatrix<f64> {
    grad.zip_map(pre, |g, a| if a > 0.0 { g } else { 0.0 })
}

/// Adds the bias to every row of the activation matrix.
fn add_row(m: &mut DMatrix<f64>, b: &DVector<f64>) {
    for mut row in m.row_iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v += b[j];
        }
    }
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    m.row_sum().transpose()
}

struct Forward {
    a1: DMatrix<f64>,
    h1: DMatrix<f64>,
    a2: DMatrix<f64>,
    h2: DMatrix<f64>,
    mu: DMatrix<f64>,
    sigma: DMatrix<f64>,
}

/// Encoder forward pass on a batch (one row per datum).
fn encode(params: &VaeParams, batch: &DMatrix<f64>) -> Forward {
    let mut a1 = batch * params.w1.transpose();
    add_row(&mut a1, &params.b1);
    let h1 = relu(&a1);
    let mut a2 = &h1 * params.w2.transpose();
    add_row(&mut a2, &params.b2);
    let h2 = relu(&a2);
    let mut mu = &h2 * params.w_mu.transpose();
    add_row(&mut mu, &params.b_mu);
    let mut log_sigma = &h2 * params.w_ls.transpose();
    add_row(&mut log_sigma, &params.b_ls);
    let sigma = log_sigma.map(f64::exp);
    Forward { a1, h1, a2, h2, mu, sigma }
}

struct Decoded {
    b1: DMatrix<f64>,
    g1: DMatrix<f64>,
    b2: DMatrix<f64>,
    g2: DMatrix<f64>,
    scores: DMatrix<f64>,
}

/// Decoder forward pass from a batch of latent rows to per-pixel scores.
fn decode(params: &VaeParams, z: &DMatrix<f64>) -> Decoded {
    let mut b1 = z * params.v1.transpose();
    add_row(&mut b1, &params.c1);
    let g1 = relu(&b1);
    let mut b2 = &g1 * params.v2.transpose();
    add_row(&mut b2, &params.c2);
    let g2 = relu(&b2);
    let mut scores = &g2 * params.v3.transpose();
    add_row(&mut scores, &params.c3);
    Decoded { b1, g1, b2, g2, scores }
}

/// Per-pixel "on" probability under the two-class observation model for
/// a score s paired against a fixed zero score.
fn pixel_on_probability(score: f64, omega: &Regularizer<f64>) -> Result<f64> {
    Ok(prediction_map(&[score, 0.0], omega)?.prob(0))
}

fn check_unit_interval(batch: &DMatrix<f64>) -> Result<()> {
    if batch.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::invalid("batch entries must lie in [0, 1]"));
    }
    Ok(())
}

/// One single-sample estimate of the FY evidence objective on a batch,
/// together with exact gradients for every parameter.
///
/// The noise ε is drawn from the standard posterior member using the
/// given seed, independently of the parameters, so repeated calls with
/// the same seed differentiate the same realized objective (which is what
/// the finite-difference tests rely on).
pub fn fyelbo_loss(
    params: &VaeParams,
    batch: &DMatrix<f64>,
    config: &VaeConfig,
    seed: u64,
) -> Result<(f64, VaeParams)> {
    config.validate()?;
    if batch.ncols() != config.input_dim || batch.nrows() == 0 {
        return Err(Error::invalid("batch shape does not match the configuration"));
    }
    check_unit_interval(batch)?;
    let b = batch.nrows();
    let bf = b as f64;
    let l = config.latent_dim;
    let rho_post = config.posterior_index()?;
    let omega_obs = config.observation_regularizer()?;
    let member = standard_member(rho_post)?;

    // Reparametrization: ε first, z = μ + σ ∘ ε.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = DMatrix::from_fn(b, l, |_, _| member.draw(&mut rng));
    let enc = encode(params, batch);
    if enc.mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { term: "posterior location".into() });
    }
    if enc.sigma.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::NonFinite { term: "posterior scale".into() });
    }
    let z = &enc.mu + enc.sigma.component_mul(&eps);
    let dec = decode(params, &z);

    // Reconstruction term and its score gradient.
    let mut recon = 0.0;
    let mut d_scores = DMatrix::zeros(b, config.input_dim);
    for i in 0..b {
        for j in 0..config.input_dim {
            let s = dec.scores[(i, j)];
            let x = batch[(i, j)];
            let target = Distribution::new(vec![x, 1.0 - x])?;
            recon += fy_loss(&[s, 0.0], &target, &omega_obs)?;
            d_scores[(i, j)] = (pixel_on_probability(s, &omega_obs)? - x) / bf;
        }
    }
    if !recon.is_finite() {
        return Err(Error::NonFinite { term: "reconstruction".into() });
    }

    // Regularizer term and its (μ, σ) gradients.
    let mut reg = 0.0;
    let mut d_mu_reg = DMatrix::zeros(b, l);
    let mut d_sigma_reg = DMatrix::zeros(b, l);
    for i in 0..b {
        let mu_row: Vec<f64> = (0..l).map(|d| enc.mu[(i, d)]).collect();
        let sigma_row: Vec<f64> = (0..l).map(|d| enc.sigma[(i, d)]).collect();
        let posterior = BetaGaussianParams::new(mu_row, sigma_row, rho_post)?;
        reg += fy_regularizer(&posterior, StandardNormalScore, rho_post)?;
        let (gm, gs) = fy_regularizer_gradient(&posterior, StandardNormalScore, rho_post)?;
        for d in 0..l {
            d_mu_reg[(i, d)] = gm[d];
            d_sigma_reg[(i, d)] = gs[d];
        }
    }
    if !reg.is_finite() {
        return Err(Error::NonFinite { term: "regularizer".into() });
    }
    let loss = (recon + config.beta * reg) / bf;

    // Reverse pass: decoder.
    let mut grads = params.zeros_like();
    grads.v3 = d_scores.transpose() * &dec.g2;
    grads.c3 = column_sums(&d_scores);
    let d_g2 = &d_scores * &params.v3;
    let d_b2 = relu_mask(&dec.b2, &d_g2);
    grads.v2 = d_b2.transpose() * &dec.g1;
    grads.c2 = column_sums(&d_b2);
    let d_g1 = &d_b2 * &params.v2;
    let d_b1 = relu_mask(&dec.b1, &d_g1);
    grads.v1 = d_b1.transpose() * &z;
    grads.c1 = column_sums(&d_b1);
    let d_z = &d_b1 * &params.v1;

    // Through the reparametrization, plus the regularizer contributions.
    let scale = config.beta / bf;
    let d_mu = &d_z + scale * &d_mu_reg;
    let d_sigma = d_z.component_mul(&eps) + scale * &d_sigma_reg;
    let d_log_sigma = d_sigma.component_mul(&enc.sigma);

    // Reverse pass: encoder heads and trunk.
    grads.w_mu = d_mu.transpose() * &enc.h2;
    grads.b_mu = column_sums(&d_mu);
    grads.w_ls = d_log_sigma.transpose() * &enc.h2;
    grads.b_ls = column_sums(&d_log_sigma);
    let d_h2 = &d_mu * &params.w_mu + &d_log_sigma * &params.w_ls;
    let d_a2 = relu_mask(&enc.a2, &d_h2);
    grads.w2 = d_a2.transpose() * &enc.h1;
    grads.b2 = column_sums(&d_a2);
    let d_h1 = &d_a2 * &params.w2;
    let d_a1 = relu_mask(&enc.a1, &d_h1);
    grads.w1 = d_a1.transpose() * batch;
    grads.b1 = column_sums(&d_a1);

    Ok((loss, grads))
}

/// Mean over images of the ℓ1 distance between the input and its mean
/// reconstruction (decode from z = μ, per-pixel probabilities).
pub fn reconstruction_l1(
    params: &VaeParams,
    data: &DMatrix<f64>,
    config: &VaeConfig,
) -> Result<f64> {
    check_unit_interval(data)?;
    let omega_obs = config.observation_regularizer()?;
    let enc = encode(params, data);
    let dec = decode(params, &enc.mu);
    let mut total = 0.0;
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            let p = pixel_on_probability(dec.scores[(i, j)], &omega_obs)?;
            total += (data[(i, j)] - p).abs();
        }
    }
    Ok(total / data.nrows() as f64)
}

/// Mean regularizer value of the fitted posterior over a dataset, paired
/// with the closed-form Gaussian relative entropy of the same (μ, σ).
///
/// The two agree on the classical posterior index, which makes this the
/// standard consistency diagnostic for the ρ = 1 corner; away from it they
/// differ by design.
pub fn regularizer_and_gaussian_kl(
    params: &VaeParams,
    data: &DMatrix<f64>,
    config: &VaeConfig,
) -> Result<(f64, f64)> {
    config.validate()?;
    if data.ncols() != config.input_dim || data.nrows() == 0 {
        return Err(Error::invalid("data shape does not match the configuration"));
    }
    check_unit_interval(data)?;
    let rho_post = config.posterior_index()?;
    let enc = encode(params, data);
    let l = config.latent_dim;
    let mut reg = 0.0;
    let mut kl = 0.0;
    for i in 0..data.nrows() {
        let mu_row: Vec<f64> = (0..l).map(|d| enc.mu[(i, d)]).collect();
        let sigma_row: Vec<f64> = (0..l).map(|d| enc.sigma[(i, d)]).collect();
        let posterior = BetaGaussianParams::new(mu_row.clone(), sigma_row.clone(), rho_post)?;
        reg += fy_regularizer(&posterior, StandardNormalScore, rho_post)?;
        for d in 0..l {
            let (m, s) = (mu_row[d], sigma_row[d]);
            kl += 0.5 * (m * m + s * s - 1.0 - 2.0 * s.ln());
        }
    }
    let n = data.nrows() as f64;
    Ok((reg / n, kl / n))
}

/// One row of the per-epoch training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub recon_l1: f64,
}

/// Renders the training record as CSV (`epoch,mean_loss,recon_l1`).
pub fn trace_csv(trace: &[EpochStats]) -> String {
    let mut out = String::from("epoch,mean_loss,recon_l1\n");
    for row in trace {
        let _ = writeln!(out, "{},{},{}", row.epoch, row.mean_loss, row.recon_l1);
    }
    out
}

/// Plain SGD over shuffled minibatches. Returns the trained parameters
/// and the per-epoch record (mean per-sample loss and the full-dataset
/// mean reconstruction ℓ1 after each epoch). Fully deterministic for a
/// given (config, dataset).
pub fn train(config: &VaeConfig, data: &DMatrix<f64>) -> Result<(VaeParams, Vec<EpochStats>)> {
    config.validate()?;
    if data.nrows() == 0 || data.ncols() != config.input_dim {
        return Err(Error::invalid("dataset shape does not match the configuration"));
    }
    check_unit_interval(data)?;
    let n = data.nrows();
    let mut params = VaeParams::seeded(config)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = DMatrix::from_fn(chunk.len(), config.input_dim, |r, c| {
                data[(chunk[r], c)]
            });
            let noise_seed = config
                .seed
                .wrapping_add(((epoch as u64) << 24) ^ (step as u64 + 1))
                .wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let (loss, grads) = fyelbo_loss(&params, &batch, config, noise_seed)?;
            if loss > DIVERGENCE_LIMIT {
                return Err(Error::TrainingDiverged {
                    epoch,
                    loss,
                    limit: DIVERGENCE_LIMIT,
                });
            }
            params.scaled_add(-config.learning_rate, &grads);
            epoch_loss += loss * chunk.len() as f64;
        }
        let recon_l1 = reconstruction_l1(&params, data, config)?;
        trace.push(EpochStats {
            epoch,
            mean_loss: epoch_loss / n as f64,
            recon_l1,
        });
    }
    Ok((params, trace))
}

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if end > bytes.len() {
        return Err(Error::IdxFormat {
            offset: bytes.len() as u64,
            message: format!("file truncated; needed 4 bytes at offset {offset}"),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Loads an IDX image/label pair (the classic big-endian digit format),
/// scales pixels to [0, 1], and truncates both to at most `limit` rows.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    limit: usize,
) -> Result<(DMatrix<f64>, Vec<u8>)> {
    let img = std::fs::read(images_path)?;
    let magic = read_be_u32(&img, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::IdxFormat {
            offset: 0,
            message: format!("bad image magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"),
        });
    }
    let n = read_be_u32(&img, 4)? as usize;
    let rows = read_be_u32(&img, 8)? as usize;
    let cols = read_be_u32(&img, 12)? as usize;
    let pixels = rows * cols;
    let need = 16 + n * pixels;
    if img.len() < need {
        return Err(Error::IdxFormat {
            offset: img.len() as u64,
            message: format!("image payload ends early; header declares {need} bytes"),
        });
    }

    let lab = std::fs::read(labels_path)?;
    let magic = read_be_u32(&lab, 0)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::IdxFormat {
            offset: 0,
            message: format!("bad label magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}"),
        });
    }
    let n_lab = read_be_u32(&lab, 4)? as usize;
    if n_lab != n {
        return Err(Error::IdxFormat {
            offset: 4,
            message: format!("label count {n_lab} does not match image count {n}"),
        });
    }
    if lab.len() < 8 + n {
        return Err(Error::IdxFormat {
            offset: lab.len() as u64,
            message: format!("label payload ends early; header declares {} bytes", 8 + n),
        });
    }

    let keep = n.min(limit);
    let data = DMatrix::from_fn(keep, pixels, |r, c| f64::from(img[16 + r * pixels + c]) / 255.0);
    let labels = lab[8..8 + keep].to_vec();
    Ok((data, labels))
}

/// Interior-stroke glyph masks on an 8×8 grid; the one-pixel border is
/// blank in every template so that those pixels are constantly zero
/// across the generated set.
const GLYPHS: [[&str; 8]; 4] = [
    [
        "00000000", "01111110", "01000010", "01000010", "01000010", "01000010", "01111110",
        "00000000",
    ],
    [
        "00000000", "00011000", "00011000", "01111110", "01111110", "00011000", "00011000",
        "00000000",
    ],
    [
        "00000000", "01000010", "00100100", "00011000", "00011000", "00100100", "01000010",
        "00000000",
    ],
    [
        "00000000", "01000000", "01000000", "01000000", "01000000", "01000000", "01111110",
        "00000000",
    ],
];

const FLIP_RATE: f64 = 0.05;

/// Renders `n` 8×8 binary images by cycling through the four glyph
/// templates and flipping each interior pixel with probability 5%.
/// Border pixels are never flipped, so they are 0 across all images.
pub fn make_synthetic_digits(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::invalid("at least one image is required"));
    }
    let masks: Vec<[[u8; 8]; 8]> = GLYPHS
        .iter()
        .map(|g| {
            let mut m = [[0u8; 8]; 8];
            for (r, row) in g.iter().enumerate() {
                for (c, ch) in row.bytes().enumerate() {
                    m[r][c] = (ch == b'1') as u8;
                }
            }
            m
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = DMatrix::zeros(n, 64);
    for i in 0..n {
        let mask = &masks[i % 4];
        for r in 0..8 {
            for c in 0..8 {
                let mut v = mask[r][c];
                let interior = (1..=6).contains(&r) && (1..=6).contains(&c);
                if interior && rng.random::<f64>() < FLIP_RATE {
                    v = 1 - v;
                }
                data[(i, r * 8 + c)] = f64::from(v);
            }
        }
    }
    Ok(data)
}

/// Writes the parameters as structured text: a header, the architecture,
/// then one line per field (`layer <name> <rows> <cols> <row-major
/// values>`), with shortest round-trip float formatting.
pub fn write_vae_checkpoint(
    params: &VaeParams,
    config: &VaeConfig,
    path: &Path,
) -> Result<()> {
    let mut out = String::from("fyvae-checkpoint v1\n");
    let _ = writeln!(
        out,
        "arch input {} hidden {} {} latent {}",
        config.input_dim, config.hidden_dims.0, config.hidden_dims.1, config.latent_dim
    );
    for (name, matrix, bias) in params.fields() {
        match bias {
            None => {
                let _ = write!(out, "layer {} {} {}", name, matrix.nrows(), matrix.ncols());
                for r in 0..matrix.nrows() {
                    for c in 0..matrix.ncols() {
                        let _ = write!(out, " {}", matrix[(r, c)]);
                    }
                }
            }
            Some(b) => {
                let _ = write!(out, "layer {} {} 1", name, b.nrows());
                for v in b.iter() {
                    let _ = write!(out, " {v}");
                }
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a checkpoint written by [`write_vae_checkpoint`] and checks it
/// against the expected configuration.
pub fn read_vae_checkpoint(path: &Path, config: &VaeConfig) -> Result<VaeParams> {
    let text = std::fs::read_to_string(path)?;
    let bad = |line: usize, message: &str| Error::Checkpoint {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    if header.trim() != "fyvae-checkpoint v1" {
        return Err(bad(1, "unrecognized header"));
    }
    let (_, arch) = lines.next().ok_or_else(|| bad(2, "missing architecture line"))?;
    let expected_arch = format!(
        "arch input {} hidden {} {} latent {}",
        config.input_dim, config.hidden_dims.0, config.hidden_dims.1, config.latent_dim
    );
    if arch.trim() != expected_arch {
        return Err(bad(2, "architecture does not match the configuration"));
    }
    let mut params = VaeParams::seeded(config)?;
    let expected: Vec<(String, usize, usize, bool)> = params
        .fields()
        .iter()
        .map(|(name, m, b)| match b {
            None => (name.to_string(), m.nrows(), m.ncols(), false),
            Some(bv) => (name.to_string(), bv.nrows(), 1, true),
        })
        .collect();
    for (idx, (name, rows, cols, is_bias)) in expected.iter().enumerate() {
        let (line_idx, line) = lines
            .next()
            .ok_or_else(|| bad(3 + idx, "missing layer line"))?;
        let line_no = line_idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 + rows * cols
            || fields[0] != "layer"
            || fields[1] != name
            || fields[2] != rows.to_string()
            || fields[3] != cols.to_string()
        {
            return Err(bad(line_no, &format!("malformed layer line for {name}")));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for f in &fields[4..] {
            values.push(
                f.parse::<f64>()
                    .map_err(|_| bad(line_no, &format!("unparseable value in {name}")))?,
            );
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad(line_no, &format!("non-finite value in {name}")));
        }
        let target: &mut DMatrix<f64> = match name.as_str() {
            "w1" => &mut params.w1,
            "w2" => &mut params.w2,
            "w_mu" => &mut params.w_mu,
            "w_ls" => &mut params.w_ls,
            "v1" => &mut params.v1,
            "v2" => &mut params.v2,
            "v3" => &mut params.v3,
            _ => {
                let bias: &mut DVector<f64> = match name.as_str() {
                    "b1" => &mut params.b1,
                    "b2" => &mut params.b2,
                    "b_mu" => &mut params.b_mu,
                    "b_ls" => &mut params.b_ls,
                    "c1" => &mut params.c1,
                    "c2" => &mut params.c2,
                    "c3" => &mut params.c3,
                    _ => return Err(bad(line_no, "unknown layer name")),
                };
                for (i, v) in values.iter().enumerate() {
                    bias[i] = *v;
                }
                continue;
            }
        };
        debug_assert!(!is_bias);
        for r in 0..*rows {
            for c in 0..*cols {
                target[(r, c)] = values[r * cols + c];
            }
        }
    }
    if lines.next().is_some() {
        return Err(bad(3 + expected.len(), "trailing content after layers"));
    }
    Ok(params)
}
