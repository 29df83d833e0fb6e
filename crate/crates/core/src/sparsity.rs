//! Sparsity fingerprint of a contingency table: the 7-number summary
//! `(ave, %zero, min, Q1, median, Q3, max)`, the upper bound on the share of
//! zeros in a minimal table, and the resulting sparsity class.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::ContingencyTable;

/// Gap, in percentage points, under which `%zero(M)` counts as very near the bound.
pub const VERY_NEAR_POINTS: f64 = 5.0;
pub const SPARSE_Q1_MAX: f64 = 2.0;
pub const SPARSE_MEDIAN_MAX: f64 = 5.0;

/// How quartiles are located in a sorted batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantileMethod {
    /// Tukey hinges.
    #[default]
    Hinges,
    /// Linear interpolation at 1-based position `p (m - 1) + 1`.
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn as_array(&self) -> [f64; 5] {
        [self.min, self.q1, self.median, self.q3, self.max]
    }
}

/// Value at a (possibly half-integer) 1-based depth of a sorted batch.
fn at_depth(sorted: &[f64], depth: f64) -> f64 {
    let lo = depth.floor() as usize;
    let hi = depth.ceil() as usize;
    let frac = depth - lo as f64;
    sorted[lo - 1] + frac * (sorted[hi - 1] - sorted[lo - 1])
}

pub fn five_number(batch: &[f64], method: QuantileMethod) -> Result<FiveNumber> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut x = batch.to_vec();
    x.sort_by(f64::total_cmp);
    let m = x.len();
    let mf = m as f64;
    let median = at_depth(&x, (mf + 1.0) / 2.0);
    let (q1, q3) = match method {
        QuantileMethod::Hinges => {
            let d = (((m + 1) / 2) as f64 + 1.0) / 2.0;
            (at_depth(&x, d), at_depth(&x, mf + 1.0 - d))
        }
        QuantileMethod::Interpolated => (at_depth(&x, 0.25 * (mf - 1.0) + 1.0), at_depth(&x, 0.75 * (mf - 1.0) + 1.0)),
    };
    Ok(FiveNumber { min: x[0], q1, median, q3, max: x[m - 1] })
}

/// Upper bound, in percent, on the share of zero cells of a minimal table
/// of shape `rows x cols`: `100 (1 - 1 / min(rows, cols))`.
pub fn lemma1_bound(rows: usize, cols: usize) -> f64 {
    let k = rows.min(cols).max(1) as f64;
    100.0 * (1.0 - 1.0 / k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsitySummary {
    pub size: (usize, usize),
    pub ave: f64,
    pub pct_zero: f64,
    pub mh1: FiveNumber,
    pub bound: f64,
}

pub fn seven_number(table: &ContingencyTable, method: QuantileMethod) -> Result<SparsitySummary> {
    let (rows, cols) = table.shape();
    let cells = (rows * cols) as f64;
    let positive: Vec<f64> = table.counts().iter().copied().filter(|&x| x > 0.0).collect();
    let zeros = rows * cols - positive.len();
    Ok(SparsitySummary {
        size: (rows, cols),
        ave: table.total() / cells,
        pct_zero: 100.0 * zeros as f64 / cells,
        mh1: five_number(&positive, method)?,
        bound: lemma1_bound(rows, cols),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityKind {
    NonSparse,
    Sparse,
    ExtremelySparse,
    Sparsest,
}

impl fmt::Display for SparsityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SparsityKind::NonSparse => "non_sparse",
            SparsityKind::Sparse => "sparse",
            SparsityKind::ExtremelySparse => "extremely_sparse",
            SparsityKind::Sparsest => "sparsest",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityClass {
    pub kind: SparsityKind,
    pub rationale: String,
}

/// Classifies a table from the summary of its minimal representative.
pub fn classify(minimal: &SparsitySummary) -> SparsityClass {
    let gap = minimal.bound - minimal.pct_zero;
    let small_counts = minimal.mh1.q1 <= SPARSE_Q1_MAX && minimal.mh1.median <= SPARSE_MEDIAN_MAX;
    let (kind, rationale) = if gap.abs() <= 1e-9 {
        (SparsityKind::Sparsest, format!("%zero = {:.4} attains the bound {:.4}", minimal.pct_zero, minimal.bound))
    } else if gap <= VERY_NEAR_POINTS && small_counts {
        (
            SparsityKind::ExtremelySparse,
            format!(
                "%zero = {:.4} within {VERY_NEAR_POINTS} points of the bound {:.4}; Q1 = {} <= 2 and median = {} <= 5",
                minimal.pct_zero, minimal.bound, minimal.mh1.q1, minimal.mh1.median
            ),
        )
    } else if small_counts {
        (
            SparsityKind::Sparse,
            format!("Q1 = {} <= 2 and median = {} <= 5", minimal.mh1.q1, minimal.mh1.median),
        )
    } else {
        (
            SparsityKind::NonSparse,
            format!("Q1 = {} or median = {} above the small-count limits 2 and 5", minimal.mh1.q1, minimal.mh1.median),
        )
    };
    SparsityClass { kind, rationale }
}
