use serde::{Deserialize, Serialize};

use super::{check_len, check_subject_count};
use crate::error::{Error, Result};

/// A ±1 assignment: +1 is treatment, -1 is control.
///
/// Entries are always ±1. Forced balance is a property that consumers check
/// (`is_balanced`), so unbalanced vectors can still be represented and rejected
/// with a useful error.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Allocation(Vec<i8>);

impl Allocation {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("allocation", "empty"));
        }
        if let Some((index, &v)) = entries.iter().enumerate().find(|(_, v)| v.abs() != 1) {
            return Err(Error::InvalidEntry {
                index,
                value: i64::from(v),
            });
        }
        Ok(Self(entries))
    }

    /// Like `new`, additionally requiring `Σ wᵢ = 0`.
    pub fn balanced(entries: Vec<i8>) -> Result<Self> {
        let w = Self::new(entries)?;
        w.require_balanced()?;
        Ok(w)
    }

    pub(crate) fn from_trusted(entries: Vec<i8>) -> Self {
        debug_assert!(entries.iter().all(|v| v.abs() == 1));
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().map(|&v| i64::from(v)).sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.sum() == 0
    }

    pub fn require_balanced(&self) -> Result<()> {
        match self.sum() {
            0 => Ok(()),
            s => Err(Error::Unbalanced(s)),
        }
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }

    /// `wᵀv`.
    pub fn dot(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), v.len());
        self.0
            .iter()
            .zip(v)
            .map(|(&w, &x)| if w > 0 { x } else { -x })
            .sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    /// Indices assigned to treatment.
    pub fn treated(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i)
    }
}

impl TryFrom<Vec<i64>> for Allocation {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        let entries = v
            .into_iter()
            .enumerate()
            .map(|(index, value)| match value {
                1 => Ok(1i8),
                -1 => Ok(-1i8),
                _ => Err(Error::InvalidEntry { index, value }),
            })
            .collect::<Result<Vec<_>>>()?;
        Allocation::new(entries)
    }
}

impl From<Allocation> for Vec<i64> {
    fn from(w: Allocation) -> Self {
        w.0.into_iter().map(i64::from).collect()
    }
}

/// A partition of the subjects into `n/2` disjoint pairs, each stored `(i, j)`
/// with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[usize; 2]>", into = "Vec<[usize; 2]>")]
pub struct PairSet {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairSet {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = 2 * pairs.len();
        check_subject_count(n)?;
        let mut seen = vec![false; n];
        let mut normalized = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            if a == b {
                return Err(Error::InvalidPairing(format!("subject {a} paired with itself")));
            }
            for s in [a, b] {
                if s >= n {
                    return Err(Error::InvalidPairing(format!(
                        "subject {s} out of range for {n} subjects"
                    )));
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::InvalidPairing(format!("subject {s} appears twice")));
                }
            }
            normalized.push((a.min(b), a.max(b)));
        }
        Ok(Self {
            n,
            pairs: normalized,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The allocation that puts the first member of pair `k` on treatment
    /// exactly when bit `k` of `mask` is clear.
    pub fn flip_allocation(&self, mask: u64) -> Allocation {
        let mut w = vec![0i8; self.n];
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let s = if (mask >> k) & 1 == 0 { 1 } else { -1 };
            w[i] = s;
            w[j] = -s;
        }
        Allocation::from_trusted(w)
    }

    pub(crate) fn check_n(&self, n: usize) -> Result<()> {
        check_len("pair set", n, self.n)
    }
}

impl TryFrom<Vec<[usize; 2]>> for PairSet {
    type Error = Error;
    fn try_from(v: Vec<[usize; 2]>) -> Result<Self> {
        PairSet::new(v.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<PairSet> for Vec<[usize; 2]> {
    fn from(p: PairSet) -> Self {
        p.pairs.into_iter().map(|(a, b)| [a, b]).collect()
    }
}
