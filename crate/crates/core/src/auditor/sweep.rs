use serde::{Deserialize, Serialize};

use super::guesses::{guesses_from_orders, order_by_score, reverse_order_by_score};
use super::vectors::{ScoreVector, SelectionVector};
use crate::bounds::{eps_lower_bound, ConfidenceLevel};
use crate::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub k_plus: usize,
    pub k_minus: usize,
    pub v: u64,
    pub eps_lb: f64,
    pub best: bool,
}

/// Lower bounds for several guess budgets on one set of scores.
///
/// Picking the best row after looking at all of them is a form of multiple
/// testing: the reported confidence only holds for a budget fixed in
/// advance. `multiple_testing` is set whenever more than one row was tried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweep {
    pub rows: Vec<KSweepRow>,
    pub multiple_testing: bool,
}

impl KSweep {
    pub fn best(&self) -> Option<&KSweepRow> {
        self.rows.iter().find(|r| r.best)
    }
}

/// `(⌈r/2⌉, ⌊r/2⌋)` for each total `r`.
pub fn symmetric_grid(totals: &[usize]) -> Vec<(usize, usize)> {
    totals.iter().map(|&r| (r.div_ceil(2), r / 2)).collect()
}

pub fn k_sweep(
    y: &ScoreVector,
    s: &SelectionVector,
    grid: &[(usize, usize)],
    delta: f64,
    confidence: ConfidenceLevel,
) -> Result<KSweep> {
    let m = y.len();
    if s.len() != m {
        return Err(AuditError::LengthMismatch {
            left: "scores",
            left_len: m,
            right: "selection",
            right_len: s.len(),
        });
    }
    if let Some(&(kp, km)) = grid.iter().find(|&&(kp, km)| kp + km > m) {
        return Err(AuditError::param(
            "grid",
            format!("{kp} + {km} guesses exceed m = {m}"),
        ));
    }
    let desc = order_by_score(y.as_slice());
    let asc = reverse_order_by_score(y.as_slice());
    let mut rows = grid
        .iter()
        .map(|&(k_plus, k_minus)| {
            let t = guesses_from_orders(m, &desc, &asc, k_plus, k_minus);
            let v = s.as_slice().iter().zip(&t).filter(|(a, b)| a == b).count() as u64;
            let r = (k_plus + k_minus) as u64;
            let eps_lb = if r == 0 {
                0.0
            } else {
                eps_lower_bound(m as u64, r, v, delta, confidence)?
            };
            Ok(KSweepRow {
                k_plus,
                k_minus,
                v,
                eps_lb,
                best: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(best) = rows
        .iter_mut()
        .reduce(|a, b| if b.eps_lb > a.eps_lb { b } else { a })
    {
        best.best = true;
    }
    Ok(KSweep {
        multiple_testing: rows.len() > 1,
        rows,
    })
}
