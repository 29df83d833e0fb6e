//! Correspondence analysis (CA) and taxicab correspondence analysis (TCA) of
//! two-way contingency tables, with table reduction, sparsity summaries and
//! numerical diagnostics.

pub mod ca;
pub mod decomposition;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod reduction;
pub mod report;
pub mod sparsity;
pub mod svg;
pub mod table;
pub mod tca;

pub use ca::ca_decompose;
pub use decomposition::{Axis, Decomposition, Method, Solver, SolverInfo};
pub use diagnostics::{
    contributions, explained_variation, map_similarity, verify, CheckReport, CheckStatus, SimilarityReport, Verdict,
};
pub use error::{Error, Result, Side};
pub use reduction::{apply_grouping, reduce_to_minimal, ReductionTrace};
pub use report::{Analysis, AnalysisOptions, AnalysisResult, Methods};
pub use sparsity::{classify, five_number, seven_number, QuantileMethod, SparsityClass, SparsityKind, SparsitySummary};
pub use svg::emit_svg_biplot;
pub use table::{build_model, parse_table, validate, ContingencyTable, CorrespondenceModel, Warning, ZeroPolicy};
pub use tca::{tca_decompose, TcaOptions};
