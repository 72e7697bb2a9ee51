use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere randomness is needed. ChaCha output is
/// platform independent, which keeps seeded runs reproducible.
pub type Rng = ChaCha8Rng;

/// Seed for the `index`-th task of a batch seeded with `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Decorrelates the seed streams of independent pipeline stages.
pub fn stage_seed(base: u64, stage: &str) -> u64 {
    let mut h = base ^ 0x9E37_79B9_7F4A_7C15;
    for b in stage.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
