//! Keyed random streams.
//!
//! Every stochastic quantity is drawn from a ChaCha8 stream addressed by
//! `(seed, domain, index)`. Distinct domains get distinct keys and distinct
//! indices get distinct ChaCha stream ids, so a draw never depends on which
//! worker produced the draws before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    /// The fixed covariate draw of a scenario.
    Covariates,
    /// Unobserved noise vector `z` for a Monte Carlo draw.
    Noise,
    /// Allocation draws for a given design tag.
    Allocations(u32),
    /// Random starts of the greedy search.
    GreedyStart,
    /// Draws from the noncentral chi-square mixture.
    Mixture,
    /// Caller-defined use.
    Custom(u64),
}

impl Domain {
    fn code(self) -> u64 {
        match self {
            Domain::Covariates => 0x01,
            Domain::Noise => 0x02,
            Domain::Allocations(tag) => 0x0300_0000_0000 | u64::from(tag),
            Domain::GreedyStart => 0x04,
            Domain::Mixture => 0x05,
            Domain::Custom(c) => splitmix64(0x06 ^ c.rotate_left(17)),
        }
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The stream for draw `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ splitmix64(domain.code()));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
