//! Deterministic stream splitting.
//!
//! Every random stream in a run is derived from the master seed through a
//! chain of `(parent, index)` mixes, so results depend only on the position
//! of a sweep point or snapshot and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for the `index`-th substream of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(mix64(index.wrapping_add(1))))
}

pub fn stream(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Named substreams of a snapshot seed. Keeping them separate means that,
/// say, toggling fading normalization does not perturb vehicle placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Positions = 1,
    Kinds = 2,
    Modes = 3,
    Steering = 4,
    Mobility = 5,
    Fading = 6,
    Detection = 7,
}

pub fn substream(seed: u64, which: Substream) -> SimRng {
    stream(derive_seed(seed, which as u64))
}
