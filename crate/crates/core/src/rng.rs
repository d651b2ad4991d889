//! Named, seeded random streams.
//!
//! Every random draw in the engine comes from a stream identified by
//! `(seed, label)`. Streams are ChaCha8 keyed by the seed with the
//! label hashed into the stream id, so they are portable across
//! platforms and independent of one another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64, stream_label: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(stream_label.as_bytes()));
    rng
}

/// Stable 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer; used to derive child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a child cell, e.g. one point of a parameter sweep.
pub fn derive_seed(base: u64, key: u64) -> u64 {
    mix64(base ^ mix64(key))
}
