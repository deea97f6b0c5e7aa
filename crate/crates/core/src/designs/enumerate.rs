use crate::error::{Error, Result};
use crate::model::{check_subject_count, Allocation};

/// `C(n, k)` in exact integer arithmetic.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

fn next_permutation(v: &mut [i8]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Visits every balanced ±1 vector of length `n` in lexicographic order
/// (`-1 < +1`), without materializing the list.
pub fn for_each_balanced<F: FnMut(&[i8])>(n: usize, mut visit: F) -> Result<()> {
    check_subject_count(n)?;
    let mut w: Vec<i8> = (0..n).map(|i| if i < n / 2 { -1 } else { 1 }).collect();
    loop {
        visit(&w);
        if !next_permutation(&mut w) {
            return Ok(());
        }
    }
}

/// All `C(n, n/2)` balanced allocations, lexicographically ordered.
pub fn enumerate_balanced(n: usize, cap: usize) -> Result<Vec<Allocation>> {
    check_subject_count(n)?;
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    let mut out = Vec::with_capacity(binomial(n as u64, n as u64 / 2) as usize);
    for_each_balanced(n, |w| out.push(Allocation::from_trusted(w.to_vec())))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol::MAX_ENUMERATION_N;
    use std::collections::HashSet;

    #[test]
    fn counts_match_binomial() {
        assert_eq!(enumerate_balanced(2, MAX_ENUMERATION_N).unwrap().len(), 2);
        assert_eq!(enumerate_balanced(6, MAX_ENUMERATION_N).unwrap().len(), 20);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(enumerate_balanced(20, MAX_ENUMERATION_N).unwrap().len(), 184_756);
    }

    #[test]
    fn lexicographic_distinct_and_negation_closed() {
        for n in [2usize, 4, 6, 8, 10, 12] {
            let all = enumerate_balanced(n, MAX_ENUMERATION_N).unwrap();
            assert!(all.windows(2).all(|p| p[0] < p[1]), "n = {n}");
            let set: HashSet<_> = all.iter().cloned().collect();
            assert_eq!(set.len(), all.len());
            assert!(all.iter().all(|w| w.is_balanced() && set.contains(&w.negated())));
            assert_eq!(all.len() as u128, binomial(n as u64, n as u64 / 2));
        }
    }

    #[test]
    fn cap_and_parity_are_enforced() {
        let err = enumerate_balanced(26, MAX_ENUMERATION_N).unwrap_err();
        assert!(err.to_string().contains("24"), "{err}");
        assert!(enumerate_balanced(10, 8).is_err());
        assert!(enumerate_balanced(5, MAX_ENUMERATION_N).is_err());
    }
}
