//! Fenchel-Young variational inference toolkit.
//!
//! The crate builds up from scalar deformed-exponential math to full
//! inference algorithms:
//!
//! - [`deformed`]: ρ-deformed logarithms/exponentials and their identities.
//! - [`simplex`]: regularized prediction maps (softmax, sparsemax, ρ-entmax,
//!   argmax), Tsallis negentropies, conjugates, and Fenchel-Young losses.
//! - [`betagauss`]: the deformed-Gaussian location-scale family; densities,
//!   sampling, and the variational regularizer with exact gradients.
//! - [`gmm`]: mixture fitting by regularized EM (standard, sparse, hard)
//!   with a monotone variational free-energy trace.
//! - [`clustering`]: the synthetic benchmark, external quality metrics, and
//!   the method/index sweep runners with CSV output.
//! - [`vae`]: a small variational autoencoder with deformed posteriors and
//!   dense or sparse binary observation models, trained by manual
//!   backpropagation.
//! - [`quadrature`], [`stats`], [`svg`]: supporting numerics and plotting.
//!
//! Generic modules accept any [`Real`] scalar; the crate-root aliases pin
//! the common double-precision instantiations.

pub mod betagauss;
pub mod clustering;
pub mod deformed;
mod error;
pub mod gmm;
pub mod quadrature;
pub mod real;
pub mod simplex;
pub mod stats;
pub mod svg;
pub mod vae;

pub use error::{Error, Result};
pub use real::Real;

pub use deformed::EntropicIndex;
pub use simplex::{Distribution, Regularizer};

/// Double-precision entropic index.
pub type EntropicIndex64 = EntropicIndex<f64>;
/// Double-precision simplex point.
pub type Distribution64 = Distribution<f64>;
/// Double-precision regularizer choice.
pub type Regularizer64 = Regularizer<f64>;
