//! Seeded streams. Every random quantity in the crate is a pure function of
//! a `u64` seed plus a stream tag, so runs are reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep independent consumers of one seed from overlapping.
pub mod stream {
    pub const ELEMENT: u64 = 1;
    pub const PROBE: u64 = 2;
    pub const SCALAR: u64 = 3;
    pub const TUPLE: u64 = 4;
    pub const SELFTEST: u64 = 5;
}

/// `splitmix64` finalizer, used to derive child seeds.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
