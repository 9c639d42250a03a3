//! Deterministic random stream derivation.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by the master
//! seed and selected by a tuple of indices (trial, node, block, ...). Work can
//! therefore be split across threads in any way without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Returns the stream for `seed` selected by `path`.
///
/// The key is the master seed; the path is hashed into the ChaCha stream id,
/// so distinct paths never share a keystream.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut id = splitmix64(path.len() as u64);
    for &p in path {
        id = splitmix64(id ^ p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
