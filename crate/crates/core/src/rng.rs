//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`]. Independent
//! streams are addressed by `(master seed, axis index, trial index)`: the
//! three values are written little-endian into the first 24 bytes of the
//! 32-byte ChaCha key (the last 8 bytes are zero). The mapping does not
//! depend on thread count or execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used for all simulations.
pub type SimRng = ChaCha8Rng;

/// Generator for a single seed, equivalent to `stream(seed, 0, 0)`.
pub fn from_seed(seed: u64) -> SimRng {
    stream(seed, 0, 0)
}

/// Generator for one trial of one sweep point.
pub fn stream(master: u64, axis_index: u64, trial_index: u64) -> SimRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&axis_index.to_le_bytes());
    key[16..24].copy_from_slice(&trial_index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
