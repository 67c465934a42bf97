//! Reproducible random streams.
//!
//! Every replica draws from its own ChaCha8 stream: the 256-bit key is
//! expanded from the experiment seed and the 64-bit stream id is the
//! replica index. Because the stream for replica `i` depends only on
//! `(seed, i)`, results do not depend on how replicas are scheduled
//! across workers. Nested indices (grid node, then replica) are folded
//! into the key with [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream `index` of the family keyed by `seed`.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// splitmix64 finaliser of `seed` combined with `tag`; used to key a
/// sub-family of streams (for example one per time-grid node).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x6a09_e667_f3bc_c909);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform on (0, 1].
#[inline]
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
