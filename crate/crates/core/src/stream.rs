//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by
//! `(seed, trial, purpose)`. The key is written directly into the 256-bit
//! ChaCha key, so distinct triples never share a stream and any trial can be
//! regenerated independently of execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::C64;

/// What a stream is used for. Separate purposes keep, e.g., the pilot matrix
/// identical when only the activity parameters change between sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Pilots = 1,
    Profiles = 2,
    Activity = 3,
    Channels = 4,
    Noise = 5,
    Calibration = 6,
    StateEvolution = 7,
    Oracle = 8,
}

/// Trial index reserved for held-out calibration instances.
pub const CALIBRATION_TRIAL: u64 = u64::MAX;

pub fn stream(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[24..].copy_from_slice(b"samp-rng");
    ChaCha8Rng::from_seed(key)
}

/// Circularly-symmetric complex Gaussian CN(0, var): real and imaginary parts
/// are independent N(0, var/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}
