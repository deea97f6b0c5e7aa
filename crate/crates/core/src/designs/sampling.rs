use rand::Rng;

use crate::model::{Allocation, PairSet};

/// Uniform over all balanced allocations: a random `n/2`-subset is treated.
///
/// Panics if `n` is odd.
pub fn sample_crfb<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Allocation {
    assert!(n.is_multiple_of(2) && n >= 2, "forced balance needs an even n, got {n}");
    let mut w = vec![-1i8; n];
    for i in rand::seq::index::sample(rng, n, n / 2) {
        w[i] = 1;
    }
    Allocation::from_trusted(w)
}

/// Independent fair coin per pair decides which member is treated.
pub fn sample_pm<R: Rng + ?Sized>(pairs: &PairSet, rng: &mut R) -> Allocation {
    let mut w = vec![0i8; pairs.n()];
    for &(i, j) in pairs.pairs() {
        let s = if rng.random::<bool>() { 1 } else { -1 };
        w[i] = s;
        w[j] = -s;
    }
    Allocation::from_trusted(w)
}
