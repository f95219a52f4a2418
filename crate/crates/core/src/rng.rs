//! Seed derivation for reproducible, order-independent Monte Carlo streams.
//!
//! Every random stream is keyed by a master seed plus a path of integers
//! (experiment stage, SNR index, frame index, ...). Streams never share state,
//! so frames can be generated in any order or on any thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers used by the simulator. Kept distinct so that, e.g., the
/// fading and the noise of a frame never reuse the same stream.
pub mod stream {
    pub const BITS: u64 = 1;
    pub const FADING: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const CSI_ERROR: u64 = 4;
    pub const TURBO_INTERLEAVER: u64 = 5;
    pub const CHANNEL_INTERLEAVER: u64 = 6;
    pub const PADDING: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a path of stream/index components.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Returns a ChaCha8 generator for the derived seed.
pub fn stream_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
