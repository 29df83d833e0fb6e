//! Reduction of a table to the minimal representative of its equivalence
//! class by merging proportional rows and columns.
//!
//! Merging two proportional lines leaves both CA and TCA unchanged, so every
//! table has a unique smallest equivalent table `M`. The reducer alternates
//! full row passes and column passes until neither merges anything.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Side};
use crate::table::ContingencyTable;

/// Relative tolerance for proportionality of real-valued lines.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tests `(sum y) x == (sum x) y` elementwise, within `tol` relative to the
/// larger side of each comparison.
pub fn proportional(x: ArrayView1<f64>, y: ArrayView1<f64>, tol: f64) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let sx = x.sum();
    let sy = y.sum();
    if sx <= 0.0 || sy <= 0.0 {
        return Err(Error::ZeroSum);
    }
    Ok(x.iter().zip(y.iter()).all(|(&a, &b)| {
        let lhs = sy * a;
        let rhs = sx * b;
        (lhs - rhs).abs() <= tol * lhs.abs().max(rhs.abs())
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub side: Side,
    /// Positions (0-based) of the merged lines in the table as it stood
    /// before this pass.
    pub merged_positions: Vec<usize>,
    /// Original (0-based) indices now represented by the merged line.
    pub original_indices: Vec<usize>,
    pub new_label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionTrace {
    pub original: ContingencyTable,
    pub minimal: ContingencyTable,
    pub steps: Vec<MergeStep>,
    /// Partition of the original row indices, one group per row of `minimal`.
    pub row_groups: Vec<Vec<usize>>,
    pub col_groups: Vec<Vec<usize>>,
}

impl ReductionTrace {
    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    /// Groups of the given side.
    pub fn groups(&self, side: Side) -> &[Vec<usize>] {
        match side {
            Side::Row => &self.row_groups,
            Side::Col => &self.col_groups,
        }
    }
}

pub fn reduce_to_minimal(table: &ContingencyTable) -> Result<ReductionTrace> {
    reduce_to_minimal_with_tol(table, DEFAULT_TOL)
}

pub fn reduce_to_minimal_with_tol(table: &ContingencyTable, tol: f64) -> Result<ReductionTrace> {
    let mut row_groups: Vec<Vec<usize>> = (0..table.n_rows()).map(|i| vec![i]).collect();
    let mut col_groups: Vec<Vec<usize>> = (0..table.n_cols()).map(|j| vec![j]).collect();
    let mut current = table.counts().clone();
    let mut steps = Vec::new();

    loop {
        let mut merged_any = false;
        for side in [Side::Row, Side::Col] {
            let groups = match side {
                Side::Row => &mut row_groups,
                Side::Col => &mut col_groups,
            };
            let axis = match side {
                Side::Row => Axis(0),
                Side::Col => Axis(1),
            };
            let classes = proportional_classes(&current, axis, tol)?;
            if classes.len() == groups.len() {
                continue;
            }
            merged_any = true;
            let mut next_groups = Vec::with_capacity(classes.len());
            for class in &classes {
                let mut original: Vec<usize> = class.iter().flat_map(|&k| groups[k].iter().copied()).collect();
                original.sort_unstable();
                if class.len() > 1 {
                    let labels = match side {
                        Side::Row => table.row_labels(),
                        Side::Col => table.col_labels(),
                    };
                    steps.push(MergeStep {
                        side,
                        merged_positions: class.clone(),
                        original_indices: original.clone(),
                        new_label: join_labels(labels, &original),
                    });
                }
                next_groups.push(original);
            }
            current = sum_lines(&current, axis, &classes);
            *groups = next_groups;
        }
        if !merged_any {
            break;
        }
    }

    let minimal = apply_grouping(table, &row_groups, &col_groups)?;
    Ok(ReductionTrace { original: table.clone(), minimal, steps, row_groups, col_groups })
}

/// Equivalence classes of lines along `axis` under proportionality, ordered
/// by their first member.
fn proportional_classes(counts: &Array2<f64>, axis: Axis, tol: f64) -> Result<Vec<Vec<usize>>> {
    let lines: Vec<ArrayView1<f64>> = counts.axis_iter(axis).collect();
    let m = lines.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut k: usize) -> usize {
        while parent[k] != k {
            parent[k] = parent[parent[k]];
            k = parent[k];
        }
        k
    }
    for a in 0..m {
        for b in a + 1..m {
            if proportional(lines[a], lines[b], tol)? {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m];
    for k in 0..m {
        let root = find(&mut parent, k);
        if slot[root] == usize::MAX {
            slot[root] = classes.len();
            classes.push(Vec::new());
        }
        classes[slot[root]].push(k);
    }
    Ok(classes)
}

fn sum_lines(counts: &Array2<f64>, axis: Axis, classes: &[Vec<usize>]) -> Array2<f64> {
    let views: Vec<_> = classes
        .iter()
        .map(|class| counts.select(axis, class).sum_axis(axis).insert_axis(axis))
        .collect();
    let views: Vec<_> = views.iter().map(|a| a.view()).collect();
    ndarray::concatenate(axis, &views).expect("classes are nonempty and share a shape")
}

fn join_labels(labels: &[String], indices: &[usize]) -> String {
    indices.iter().map(|&k| labels[k].as_str()).collect::<Vec<_>>().join("+")
}

fn check_partition(groups: &[Vec<usize>], len: usize, side: Side) -> Result<()> {
    let mut seen = vec![false; len];
    for group in groups {
        if group.is_empty() {
            return Err(Error::InvalidPartition { side, message: "empty group".into() });
        }
        for &k in group {
            if k >= len {
                return Err(Error::InvalidPartition { side, message: format!("index {k} out of range") });
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidPartition { side, message: format!("index {k} appears twice") });
            }
        }
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition { side, message: format!("index {k} is not covered") });
    }
    Ok(())
}

/// Sums a table over the given row and column partitions (0-based indices).
/// Merged labels are the `+`-join of member labels in ascending index order.
pub fn apply_grouping(
    table: &ContingencyTable,
    row_groups: &[Vec<usize>],
    col_groups: &[Vec<usize>],
) -> Result<ContingencyTable> {
    check_partition(row_groups, table.n_rows(), Side::Row)?;
    check_partition(col_groups, table.n_cols(), Side::Col)?;
    let counts = table.counts();
    let mut out = Array2::zeros((row_groups.len(), col_groups.len()));
    for (a, rows) in row_groups.iter().enumerate() {
        for (b, cols) in col_groups.iter().enumerate() {
            out[[a, b]] = rows.iter().map(|&i| cols.iter().map(|&j| counts[[i, j]]).sum::<f64>()).sum();
        }
    }
    let label = |labels: &[String], group: &[usize]| {
        let mut sorted = group.to_vec();
        sorted.sort_unstable();
        join_labels(labels, &sorted)
    };
    let row_labels = row_groups.iter().map(|g| label(table.row_labels(), g)).collect();
    let col_labels = col_groups.iter().map(|g| label(table.col_labels(), g)).collect();
    ContingencyTable::new(row_labels, col_labels, out)
}
