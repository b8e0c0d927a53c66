use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::guesses::sample_selection;
use super::vectors::SelectionVector;
use crate::{AuditError, Result};

/// `m` pairs of candidate examples; exactly one of each pair enters the
/// dataset, so its size is fixed. Entries are caller-defined example ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanaryPairSet {
    pairs: Vec<(usize, usize)>,
}

impl CanaryPairSet {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(2 * pairs.len());
        for &(a, b) in &pairs {
            if !seen.insert(a) || !seen.insert(b) {
                return Err(AuditError::param("pairs", "example ids must be distinct"));
            }
        }
        Ok(Self { pairs })
    }

    /// Pairs `(2i, 2i+1)` over ids `0..2m`.
    pub fn consecutive(m: usize) -> Self {
        Self {
            pairs: (0..m).map(|i| (2 * i, 2 * i + 1)).collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Second member of pair `i` when `s_i = +1`, first member otherwise.
pub fn replacement_dataset(pairs: &CanaryPairSet, s: &SelectionVector) -> Result<Vec<usize>> {
    if pairs.len() != s.len() {
        return Err(AuditError::LengthMismatch {
            left: "pairs",
            left_len: pairs.len(),
            right: "selection",
            right_len: s.len(),
        });
    }
    Ok(pairs
        .pairs
        .iter()
        .zip(s.as_slice())
        .map(|(&(first, second), &si)| if si == 1 { second } else { first })
        .collect())
}

pub fn replacement_selection<R: Rng + ?Sized>(pairs: &CanaryPairSet, rng: &mut R) -> (SelectionVector, Vec<usize>) {
    let s = sample_selection(pairs.len(), rng);
    let data = replacement_dataset(pairs, &s).expect("lengths agree by construction");
    (s, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn one_based_example() {
        let pairs = CanaryPairSet::new(vec![(1, 2), (3, 4), (5, 6)]).unwrap();
        let s = SelectionVector::new(vec![1, -1, 1]).unwrap();
        assert_eq!(replacement_dataset(&pairs, &s).unwrap(), vec![2, 3, 6]);
        let all = SelectionVector::new(vec![1, 1, 1]).unwrap();
        assert_eq!(replacement_dataset(&pairs, &all).unwrap(), vec![2, 4, 6]);
    }

    #[test]
    fn fixed_size() {
        let pairs = CanaryPairSet::consecutive(50);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (s, data) = replacement_selection(&pairs, &mut rng);
            assert_eq!(data.len(), 50);
            assert_eq!(s.len(), 50);
        }
    }

    #[test]
    fn rejects_duplicates() {
        assert!(CanaryPairSet::new(vec![(1, 2), (2, 3)]).is_err());
        assert!(CanaryPairSet::new(vec![(1, 1)]).is_err());
    }
}
