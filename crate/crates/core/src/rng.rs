//! Seed derivation.
//!
//! Every stochastic stage draws from its own ChaCha stream, derived from the
//! run seed and a stage tag, so any stage can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// FNV-1a, stable across platforms and releases (unlike `DefaultHasher`).
fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives a child seed from a parent seed and a stage tag.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(tag)))
}

/// Derives a child seed from a parent seed, a tag and a replication index.
pub fn derive_indexed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix64(derive_seed(seed, tag) ^ splitmix64(index.wrapping_add(1)))
}

/// Generator for the stream identified by `(seed, tag)`.
pub fn stream(seed: u64, tag: &str) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}
