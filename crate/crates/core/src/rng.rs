//! Deterministic stream derivation. Every random draw in the pipeline comes
//! from a stream keyed by (master seed, purpose, sweep point, trial), so
//! results are reproducible regardless of worker scheduling.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Purpose tags for independent random streams within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Support,
    Channel,
    Pilot,
    Noise,
    Ric,
    Generic,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Support => 0x5355_5050,
            Purpose::Channel => 0x4348_414e,
            Purpose::Pilot => 0x5049_4c4f,
            Purpose::Noise => 0x4e4f_4953,
            Purpose::Ric => 0x5249_4300,
            Purpose::Generic => 0x47454e,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives an independent RNG stream from the master seed and a key tuple.
pub fn stream(seed: u64, purpose: Purpose, point: u64, trial: u64) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ purpose.tag());
    h = splitmix64(h ^ point);
    h = splitmix64(h ^ trial);
    ChaCha8Rng::seed_from_u64(h)
}
