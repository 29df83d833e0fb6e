//! Contingency tables: parsing, validation and the correspondence model.
//!
//! A [`ContingencyTable`] is a labeled nonnegative `I x J` matrix. Every
//! analysis in this crate consumes the derived [`CorrespondenceModel`]: the
//! correspondence matrix `P = N / n`, its row and column masses, and the
//! residual matrix `R0 = P - r c'` with respect to the independence model.

use std::collections::HashSet;
use std::fmt;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Side};

#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    counts: Array2<f64>,
    total: f64,
}

impl ContingencyTable {
    /// Builds a table, checking shape, label uniqueness and nonnegativity.
    ///
    /// Zero rows and columns are allowed here; [`validate`] decides what to do
    /// with them.
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, counts: Array2<f64>) -> Result<Self> {
        let (rows, cols) = counts.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyTable);
        }
        if row_labels.len() != rows || col_labels.len() != cols {
            return Err(Error::ShapeMismatch { rows: row_labels.len(), cols: col_labels.len(), got: rows * cols });
        }
        check_unique(&row_labels, Side::Row)?;
        check_unique(&col_labels, Side::Col)?;
        for ((i, j), &value) in counts.indexed_iter() {
            if !value.is_finite() {
                return Err(Error::NonNumeric {
                    row: row_labels[i].clone(),
                    col: col_labels[j].clone(),
                    value: value.to_string(),
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeEntry { row: row_labels[i].clone(), col: col_labels[j].clone(), value });
            }
        }
        let total = counts.sum();
        Ok(Self { row_labels, col_labels, counts, total })
    }

    /// Table with 1-based numeric labels on both sides.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut flat = Vec::with_capacity(nrows * ncols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::ShapeMismatch { rows: nrows, cols: ncols, got: row.len() });
            }
            flat.extend_from_slice(row);
        }
        let counts = Array2::from_shape_vec((nrows, ncols), flat).map_err(|_| Error::EmptyTable)?;
        Self::new(numbered(nrows), numbered(ncols), counts)
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn counts(&self) -> &Array2<f64> {
        &self.counts
    }

    /// Grand total `n`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn n_rows(&self) -> usize {
        self.counts.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.counts.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.counts.dim()
    }

    /// Same table with every count multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.row_labels.clone(), self.col_labels.clone(), self.counts.mapv(|x| x * k))
    }

    pub fn has_non_integer_counts(&self) -> bool {
        self.counts.iter().any(|x| x.fract() != 0.0)
    }

    /// Serializes back to the CSV layout accepted by [`parse_table`].
    pub fn to_csv(&self, delimiter: u8) -> String {
        let mut writer = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.col_labels.iter().cloned());
        // Writing into a Vec cannot fail.
        writer.write_record(&header).expect("in-memory CSV write");
        for (label, row) in self.row_labels.iter().zip(self.counts.rows()) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|x| x.to_string()));
            writer.write_record(&record).expect("in-memory CSV write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
    }
}

fn numbered(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn check_unique(labels: &[String], side: Side) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    // blank labels are anonymous; displays fall back to positions
    for label in labels.iter().filter(|l| !l.is_empty()) {
        if !seen.insert(label.as_str()) {
            return Err(Error::DuplicateLabel { side, label: label.clone() });
        }
    }
    Ok(())
}

/// Parses a table whose first record holds the column labels (the first
/// cell, conventionally blank or `id`, is ignored) and whose remaining
/// records are a row label followed by one number per column.
pub fn parse_table(csv_text: &str, delimiter: u8) -> Result<ContingencyTable> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());

    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::EmptyTable),
        Some(rec) => rec.map_err(csv_error)?,
    };
    if header.len() < 2 {
        return Err(Error::EmptyTable);
    }
    let col_labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let ncols = col_labels.len();

    let mut row_labels = Vec::new();
    let mut flat = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != ncols + 1 {
            return Err(Error::MalformedCsv {
                line,
                message: format!("expected {} cells, found {}", ncols + 1, rec.len()),
            });
        }
        let label = rec[0].to_owned();
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: label.clone(),
                col: col_labels[j].clone(),
                value: cell.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonNumeric { row: label.clone(), col: col_labels[j].clone(), value: cell.to_owned() });
            }
            flat.push(value);
        }
        row_labels.push(label);
    }
    if row_labels.is_empty() {
        return Err(Error::EmptyTable);
    }
    let counts = Array2::from_shape_vec((row_labels.len(), ncols), flat).map_err(|_| Error::EmptyTable)?;
    ContingencyTable::new(row_labels, col_labels, counts)
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    Error::MalformedCsv { line, message: err.to_string() }
}

/// What to do with all-zero rows and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroPolicy {
    Reject,
    #[default]
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub side: Side,
    /// 1-based position in the input table.
    pub index: usize,
    pub label: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} dropped", self.side, self.label)
    }
}

/// Removes (or rejects) all-zero rows and columns so that every margin is
/// strictly positive.
pub fn validate(table: &ContingencyTable, policy: ZeroPolicy) -> Result<(ContingencyTable, Vec<Warning>)> {
    if table.total() <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    let row_sums = table.counts.sum_axis(Axis(1));
    let col_sums = table.counts.sum_axis(Axis(0));
    let keep_rows: Vec<usize> = (0..table.n_rows()).filter(|&i| row_sums[i] > 0.0).collect();
    let keep_cols: Vec<usize> = (0..table.n_cols()).filter(|&j| col_sums[j] > 0.0).collect();

    let mut warnings = Vec::new();
    for (i, label) in table.row_labels.iter().enumerate() {
        if row_sums[i] <= 0.0 {
            warnings.push(Warning { side: Side::Row, index: i + 1, label: label.clone() });
        }
    }
    for (j, label) in table.col_labels.iter().enumerate() {
        if col_sums[j] <= 0.0 {
            warnings.push(Warning { side: Side::Col, index: j + 1, label: label.clone() });
        }
    }
    if warnings.is_empty() {
        return Ok((table.clone(), warnings));
    }
    if policy == ZeroPolicy::Reject {
        let first = &warnings[0];
        return Err(Error::ZeroLine { side: first.side, label: first.label.clone() });
    }

    let counts = table.counts.select(Axis(0), &keep_rows).select(Axis(1), &keep_cols);
    let row_labels = keep_rows.iter().map(|&i| table.row_labels[i].clone()).collect();
    let col_labels = keep_cols.iter().map(|&j| table.col_labels[j].clone()).collect();
    Ok((ContingencyTable::new(row_labels, col_labels, counts)?, warnings))
}

/// Correspondence matrix, masses and independence residuals of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceModel {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `P = N / n`.
    pub p: Array2<f64>,
    /// Row masses `p_i*`.
    pub r: Array1<f64>,
    /// Column masses `p_*j`.
    pub c: Array1<f64>,
    /// `R0 = P - r c'`.
    pub residual: Array2<f64>,
}

impl CorrespondenceModel {
    pub fn n_rows(&self) -> usize {
        self.r.len()
    }

    pub fn n_cols(&self) -> usize {
        self.c.len()
    }

    /// Largest number of nontrivial axes, `min(I, J) - 1`.
    pub fn max_axes(&self) -> usize {
        self.n_rows().min(self.n_cols()) - 1
    }

    /// True when both models describe the same masses on the same shape.
    pub fn same_margins(&self, other: &Self, tol: f64) -> bool {
        self.r.len() == other.r.len()
            && self.c.len() == other.c.len()
            && self.r.iter().zip(other.r.iter()).all(|(a, b)| (a - b).abs() <= tol)
            && self.c.iter().zip(other.c.iter()).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Builds the correspondence model of a validated table.
pub fn build_model(table: &ContingencyTable) -> Result<CorrespondenceModel> {
    let n = table.total();
    if n <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    let p = table.counts.mapv(|x| x / n);
    let r = p.sum_axis(Axis(1));
    let c = p.sum_axis(Axis(0));
    if let Some(i) = r.iter().position(|&x| x <= 0.0) {
        return Err(Error::ZeroLine { side: Side::Row, label: table.row_labels[i].clone() });
    }
    if let Some(j) = c.iter().position(|&x| x <= 0.0) {
        return Err(Error::ZeroLine { side: Side::Col, label: table.col_labels[j].clone() });
    }
    let mut residual = p.clone();
    for ((i, j), x) in residual.indexed_iter_mut() {
        *x -= r[i] * c[j];
    }
    Ok(CorrespondenceModel {
        row_labels: table.row_labels.clone(),
        col_labels: table.col_labels.clone(),
        p,
        r,
        c,
        residual,
    })
}
