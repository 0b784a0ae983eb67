//! Deterministic random streams and order-preserving parallel maps.
//!
//! Every Monte-Carlo unit of work draws from its own generator seeded by
//! mixing `(master, channel, block)`, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One SplitMix64 output step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream for `(channel, block)` under `master`.
pub fn stream_seed(master: u64, channel: u64, block: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ channel) ^ block.rotate_left(32))
}

pub fn stream_rng(master: u64, channel: u64, block: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, channel, block))
}

/// `(0..n).map(f)` evaluated in parallel when the `parallel` feature is on.
/// Output order always matches the index order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
