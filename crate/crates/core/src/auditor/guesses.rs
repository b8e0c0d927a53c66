use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vectors::{GuessVector, ScoreVector, SelectionVector};
use crate::{AuditError, Result};

/// Independent fair coins for `m` canaries.
pub fn sample_selection<R: Rng + ?Sized>(m: usize, rng: &mut R) -> SelectionVector {
    SelectionVector::from_bools((0..m).map(|_| rng.random::<bool>()))
}

/// Zero-based indices of the training input and the held-out canaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub included: Vec<usize>,
    pub excluded: Vec<usize>,
}

/// Splits `0..n`: the first `s.len()` indices follow their coin, the rest
/// are always included.
pub fn partition(n: usize, s: &SelectionVector) -> Result<Partition> {
    let m = s.len();
    if m > n {
        return Err(AuditError::param("m", format!("{m} canaries exceed dataset size {n}")));
    }
    let (mut included, mut excluded) = (Vec::with_capacity(n), Vec::new());
    for i in 0..n {
        if i >= m || s.is_included(i) {
            included.push(i);
        } else {
            excluded.push(i);
        }
    }
    Ok(Partition { included, excluded })
}

// Descending by score, ascending by index among ties.
pub(crate) fn order_by_score(y: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[b].partial_cmp(&y[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    idx
}

// Ascending by score, ascending by index among ties.
pub(crate) fn reverse_order_by_score(y: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    idx
}

pub(crate) fn guesses_from_orders(m: usize, desc: &[usize], asc: &[usize], k_plus: usize, k_minus: usize) -> Vec<i8> {
    let mut t = vec![0i8; m];
    for &i in &desc[..k_plus] {
        t[i] = 1;
    }
    let mut left = k_minus;
    for &i in asc {
        if left == 0 {
            break;
        }
        if t[i] == 0 {
            t[i] = -1;
            left -= 1;
        }
    }
    t
}

/// `+1` on the `k_plus` highest scores, `-1` on the `k_minus` lowest of the
/// rest, `0` elsewhere. Ties go to the lower index first.
pub fn make_guesses(y: &ScoreVector, k_plus: usize, k_minus: usize) -> Result<GuessVector> {
    let m = y.len();
    if k_plus.checked_add(k_minus).is_none_or(|r| r > m) {
        return Err(AuditError::param(
            "k_plus + k_minus",
            format!("{k_plus} + {k_minus} guesses exceed m = {m}"),
        ));
    }
    let desc = order_by_score(y.as_slice());
    let asc = reverse_order_by_score(y.as_slice());
    Ok(GuessVector::from_raw(guesses_from_orders(m, &desc, &asc, k_plus, k_minus)))
}

/// `W = #{i : t_i = s_i}`; abstentions never count.
pub fn count_correct(s: &SelectionVector, t: &GuessVector) -> Result<u64> {
    if s.len() != t.len() {
        return Err(AuditError::LengthMismatch {
            left: "selection",
            left_len: s.len(),
            right: "guesses",
            right_len: t.len(),
        });
    }
    Ok(s.as_slice()
        .iter()
        .zip(t.as_slice())
        .filter(|(a, b)| a == b)
        .count() as u64)
}
