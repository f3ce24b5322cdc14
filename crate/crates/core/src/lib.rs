//! Sequential approximate message passing (S-AMP) for joint active-user
//! detection and channel estimation in grant-free massive random access.
//!
//! Users follow a two-state Markov activity chain and an AR-1 Rayleigh
//! channel. Every active detection time (ADT) runs a Bernoulli-Gaussian
//! MMSE AMP loop whose per-user prior is the moment-matched posterior of the
//! previous ADT pushed through the temporal model.
//!
//! Module map:
//! - [`scenario`]: ground-truth generation (geometry, pilots, activity, channels).
//! - [`denoiser`]: scalar Bernoulli-Gaussian MMSE kernels.
//! - [`amp`]: the per-ADT AMP loop.
//! - [`sequential`]: moment matching, prior propagation and the S-AMP driver.
//! - [`detection`]: Bayes detector, LLR statistic, NMSE / DEP metrics.
//! - [`state_evolution`]: Monte-Carlo state evolution and its fixpoint.
//! - [`baselines`]: AMP-MMSE, soft-threshold AMP, OMP and oracle least squares.
//! - [`experiments`]: config parsing, seeded sweeps and CSV output.
//! - [`checks`]: the acceptance suite shared by `samp check` and the tests.

pub mod amp;
pub mod baselines;
pub mod checks;
pub mod denoiser;
pub mod detection;
pub mod error;
pub mod experiments;
pub mod scenario;
pub mod sequential;
pub mod state_evolution;
pub mod stream;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
