//! Seeded random streams.
//!
//! Every stochastic component (lead driver, speed sensor, IDS) owns its own
//! ChaCha stream derived from the scenario seed, so enabling or disabling one
//! component never shifts the draws seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Stream labels for the per-component RNGs of one scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Lead = 1,
    Sensor = 2,
    Ids = 3,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and an index.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index))
}

/// Opens the stream for `stream` under scenario seed `seed`.
pub fn stream(seed: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, stream as u64))
}
