use serde::{Deserialize, Serialize};

use crate::{AuditError, Result};

/// Inclusion coins `S ∈ {-1,+1}^m`; `+1` means the canary is in the input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SelectionVector(Vec<i8>);

impl SelectionVector {
    pub fn new(s: Vec<i8>) -> Result<Self> {
        if let Some(pos) = s.iter().position(|&x| x != 1 && x != -1) {
            return Err(AuditError::param(
                "s",
                format!("entry {pos} is {}, expected -1 or +1", s[pos]),
            ));
        }
        Ok(Self(s))
    }

    pub fn from_bools(included: impl IntoIterator<Item = bool>) -> Self {
        Self(included.into_iter().map(|b| if b { 1 } else { -1 }).collect())
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_included(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn included_count(&self) -> usize {
        self.0.iter().filter(|&&x| x == 1).count()
    }
}

impl TryFrom<Vec<i8>> for SelectionVector {
    type Error = AuditError;
    fn try_from(s: Vec<i8>) -> Result<Self> {
        Self::new(s)
    }
}

impl From<SelectionVector> for Vec<i8> {
    fn from(s: SelectionVector) -> Self {
        s.0
    }
}

/// Ternary guesses `T ∈ {-1,0,+1}^m`; `0` is an abstention.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct GuessVector(Vec<i8>);

impl GuessVector {
    pub fn new(t: Vec<i8>) -> Result<Self> {
        if let Some(pos) = t.iter().position(|&x| !(-1..=1).contains(&x)) {
            return Err(AuditError::param(
                "t",
                format!("entry {pos} is {}, expected -1, 0 or +1", t[pos]),
            ));
        }
        Ok(Self(t))
    }

    pub fn abstain_all(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub(crate) fn from_raw(t: Vec<i8>) -> Self {
        debug_assert!(t.iter().all(|x| (-1..=1).contains(x)));
        Self(t)
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn k_plus(&self) -> usize {
        self.0.iter().filter(|&&x| x == 1).count()
    }

    pub fn k_minus(&self) -> usize {
        self.0.iter().filter(|&&x| x == -1).count()
    }

    /// Number of non-abstentions.
    pub fn r(&self) -> usize {
        self.0.iter().filter(|&&x| x != 0).count()
    }
}

impl TryFrom<Vec<i8>> for GuessVector {
    type Error = AuditError;
    fn try_from(t: Vec<i8>) -> Result<Self> {
        Self::new(t)
    }
}

impl From<GuessVector> for Vec<i8> {
    fn from(t: GuessVector) -> Self {
        t.0
    }
}

/// Real-valued membership scores, higher meaning "more likely included".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if let Some(pos) = y.iter().position(|x| !x.is_finite()) {
            return Err(AuditError::param("y", format!("entry {pos} is not finite")));
        }
        Ok(Self(y))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = AuditError;
    fn try_from(y: Vec<f64>) -> Result<Self> {
        Self::new(y)
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(y: ScoreVector) -> Self {
        y.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SelectionVector::new(vec![1, -1, 1]).is_ok());
        assert!(SelectionVector::new(vec![1, 0]).is_err());
        assert!(GuessVector::new(vec![1, 0, -1]).is_ok());
        assert!(GuessVector::new(vec![2]).is_err());
        assert!(ScoreVector::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn guess_counts() {
        let t = GuessVector::new(vec![1, 0, -1, 1, 0]).unwrap();
        assert_eq!((t.k_plus(), t.k_minus(), t.r()), (2, 1, 3));
    }

    #[test]
    fn serde_rejects_invalid() {
        let s: SelectionVector = serde_json::from_str("[1,-1]").unwrap();
        assert_eq!(s.as_slice(), &[1, -1]);
        assert!(serde_json::from_str::<SelectionVector>("[1,3]").is_err());
    }
}
