use thiserror::Error;

/// Which side of a table a label or line belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Row,
    Col,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Row => f.write_str("row"),
            Side::Col => f.write_str("column"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: usize, message: String },

    #[error("non-numeric cell {value:?} at row {row:?}, column {col:?}")]
    NonNumeric { row: String, col: String, value: String },

    #[error("negative entry {value} at row {row:?}, column {col:?}")]
    NegativeEntry { row: String, col: String, value: f64 },

    #[error("duplicate {side} label {label:?}")]
    DuplicateLabel { side: Side, label: String },

    #[error("table is empty")]
    EmptyTable,

    #[error("table has shape {rows}x{cols} but {got} counts were supplied")]
    ShapeMismatch { rows: usize, cols: usize, got: usize },

    #[error("all-zero {side} {label:?}")]
    ZeroLine { side: Side, label: String },

    #[error("grand total is zero")]
    ZeroTotal,

    #[error("probabilities sum to {0}, not 1")]
    NotProbability(f64),

    #[error("vector has zero sum")]
    ZeroSum,

    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("invalid {side} partition: {message}")]
    InvalidPartition { side: Side, message: String },

    #[error("empty batch")]
    EmptyBatch,

    #[error("requested {requested} axes but at most {max} are available")]
    AxesOutOfRange { requested: usize, max: usize },

    #[error("axis {axis} is out of range (decomposition has {available} axes)")]
    AxisOutOfRange { axis: usize, available: usize },

    #[error("axis {0} given twice; plot axes must differ")]
    DuplicateAxis(usize),

    #[error("{what} requires dimension at most {limit}, got {got}")]
    DimensionTooLarge { what: &'static str, limit: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("decomposition has no axes")]
    NoAxes,

    #[error("axis {0} has zero dispersion")]
    ZeroDispersion(usize),

    #[error("decompositions were computed on different tables")]
    MismatchedTables,
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric(_)
                | Error::NotSquare(..)
                | Error::NoConvergence(_)
                | Error::ZeroDispersion(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
