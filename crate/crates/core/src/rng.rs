//! Seeded, counter-based random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from a 64-bit
//! master seed, a purpose id and a list of integer keys. Streams keyed by
//! `(n, run)` rather than loop position keep sweep cells independent of the
//! order in which they are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose ids, used as the ChaCha stream selector.
pub mod purpose {
    pub const SAMPLE: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const EMBED: u64 = 5;
    pub const COVER: u64 = 6;
    pub const CHECK: u64 = 7;
    pub const CELL: u64 = 8;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a seed with a list of keys into a new 64-bit seed.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix(seed), |acc, &k| splitmix(acc ^ splitmix(k)))
}

/// Open the stream for `purpose` under `seed` and `keys`.
pub fn stream(seed: u64, purpose: u64, keys: &[u64]) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, keys));
    rng.set_stream(purpose);
    rng
}
