//! End-to-end analysis of one table and its JSON result schema.
//!
//! Every float in an [`AnalysisResult`] is rounded to 12 significant digits
//! before serialization, so the JSON text is stable across platforms and
//! parses back to an identical value.

use serde::{Deserialize, Serialize};

use crate::ca::ca_decompose;
use crate::decomposition::{Decomposition, Method, SolverInfo};
use crate::diagnostics::{contributions, explained_variation, map_similarity, verify, CheckReport, SimilarityReport, DEFAULT_PHI_THRESHOLD};
use crate::error::Result;
use crate::reduction::{reduce_to_minimal, MergeStep, ReductionTrace};
use crate::sparsity::{classify, seven_number, FiveNumber, QuantileMethod, SparsityClass, SparsitySummary};
use crate::table::{build_model, ContingencyTable, CorrespondenceModel};
use crate::tca::{tca_decompose, TcaOptions, DEFAULT_EXACT_THRESHOLD};

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

fn sig12_vec<'a>(xs: impl IntoIterator<Item = &'a f64>) -> Vec<f64> {
    xs.into_iter().copied().map(sig12).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Methods {
    pub ca: bool,
    pub tca: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Analyze the minimal table instead of the input.
    pub reduced: bool,
    /// Number of axes; `None` keeps every nontrivial axis.
    pub axes: Option<usize>,
    pub quantile: QuantileMethod,
    pub exact_threshold: usize,
    pub phi_threshold: f64,
    /// Axes compared by the similarity report.
    pub compare_axes: usize,
    pub methods: Methods,
    pub verify: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            reduced: false,
            axes: None,
            quantile: QuantileMethod::Hinges,
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            phi_threshold: DEFAULT_PHI_THRESHOLD,
            compare_axes: 2,
            methods: Methods { ca: true, tca: true },
            verify: false,
        }
    }
}

/// Everything computed for one table, before serialization.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub trace: ReductionTrace,
    pub original_summary: SparsitySummary,
    pub minimal_summary: SparsitySummary,
    pub class: SparsityClass,
    pub model: CorrespondenceModel,
    pub ca: Option<Decomposition>,
    pub tca: Option<Decomposition>,
    pub similarity: Option<SimilarityReport>,
    pub options: AnalysisOptions,
}

impl Analysis {
    pub fn run(table: &ContingencyTable, options: AnalysisOptions) -> Result<Self> {
        let trace = reduce_to_minimal(table)?;
        let original_summary = seven_number(&trace.original, options.quantile)?;
        let minimal_summary = seven_number(&trace.minimal, options.quantile)?;
        let class = classify(&minimal_summary);
        let analyzed = if options.reduced { &trace.minimal } else { &trace.original };
        let model = build_model(analyzed)?;
        let axes = options.axes.unwrap_or_else(|| model.max_axes());
        let ca = if options.methods.ca { Some(ca_decompose(&model, axes)?) } else { None };
        let tca_opts = TcaOptions { exact_threshold: options.exact_threshold };
        let tca = if options.methods.tca { Some(tca_decompose(&model, axes, tca_opts)?) } else { None };
        let similarity = match (&ca, &tca) {
            (Some(a), Some(b)) => {
                let k = options.compare_axes.min(a.axes.len()).min(b.axes.len());
                if k > 0 {
                    Some(map_similarity(a, b, k, options.phi_threshold)?)
                } else {
                    None
                }
            }
            _ => None,
        };
        Ok(Self { trace, original_summary, minimal_summary, class, model, ca, tca, similarity, options })
    }

    pub fn decomposition(&self, method: Method) -> Option<&Decomposition> {
        match method {
            Method::Ca => self.ca.as_ref(),
            Method::Tca => self.tca.as_ref(),
        }
    }

    pub fn to_result(&self) -> Result<AnalysisResult> {
        let t = &self.trace.original;
        let ca = self.ca.as_ref().map(DecompositionPayload::from_decomposition).transpose()?;
        let tca = self.tca.as_ref().map(DecompositionPayload::from_decomposition).transpose()?;
        let checks = if self.options.verify {
            Some(self.ca.iter().chain(self.tca.iter()).map(|d| round_checks(verify(d))).collect())
        } else {
            None
        };
        Ok(AnalysisResult {
            schema: SCHEMA_VERSION,
            input: InputDigest {
                shape: t.shape(),
                n: sig12(t.total()),
                row_labels: t.row_labels().to_vec(),
                col_labels: t.col_labels().to_vec(),
            },
            analyzed: if self.options.reduced { "minimal".into() } else { "original".into() },
            reduction: ReductionSummary::from_trace(&self.trace),
            sparsity: SparsityReport {
                quantile: self.options.quantile,
                original: round_summary(&self.original_summary),
                minimal: round_summary(&self.minimal_summary),
                class: self.class.clone(),
            },
            ca,
            tca,
            similarity: self.similarity.as_ref().map(round_similarity),
            checks,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub shape: (usize, usize),
    pub n: f64,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSummary {
    pub original_shape: (usize, usize),
    pub minimal_shape: (usize, usize),
    pub minimal_row_labels: Vec<String>,
    pub minimal_col_labels: Vec<String>,
    pub row_groups: Vec<Vec<usize>>,
    pub col_groups: Vec<Vec<usize>>,
    pub steps: Vec<MergeStep>,
}

impl ReductionSummary {
    pub fn from_trace(trace: &ReductionTrace) -> Self {
        Self {
            original_shape: trace.original.shape(),
            minimal_shape: trace.minimal.shape(),
            minimal_row_labels: trace.minimal.row_labels().to_vec(),
            minimal_col_labels: trace.minimal.col_labels().to_vec(),
            row_groups: trace.row_groups.clone(),
            col_groups: trace.col_groups.clone(),
            steps: trace.steps.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub quantile: QuantileMethod,
    pub original: SparsitySummary,
    pub minimal: SparsitySummary,
    pub class: SparsityClass,
}

fn round_summary(s: &SparsitySummary) -> SparsitySummary {
    let [min, q1, median, q3, max] = s.mh1.as_array().map(sig12);
    SparsitySummary {
        size: s.size,
        ave: sig12(s.ave),
        pct_zero: sig12(s.pct_zero),
        mh1: FiveNumber { min, q1, median, q3, max },
        bound: sig12(s.bound),
    }
}

fn round_similarity(s: &SimilarityReport) -> SimilarityReport {
    SimilarityReport { phi: sig12_vec(&s.phi), pairing: s.pairing.clone(), threshold: s.threshold, verdict: s.verdict }
}

fn round_checks(mut report: CheckReport) -> CheckReport {
    for c in &mut report.checks {
        c.max_residual = sig12(c.max_residual);
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisPayload {
    pub sigma: f64,
    pub explained: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub row_contributions: Vec<f64>,
    pub col_contributions: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solver: Option<SolverInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPayload {
    pub method: Method,
    pub rank_used: usize,
    pub complete: bool,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub sigmas: Vec<f64>,
    pub explained: Vec<f64>,
    pub axes: Vec<AxisPayload>,
}

impl DecompositionPayload {
    pub fn from_decomposition(d: &Decomposition) -> Result<Self> {
        let explained = if d.axes.is_empty() { Vec::new() } else { explained_variation(d)? };
        let contrib = contributions(d)?;
        let axes = d
            .axes
            .iter()
            .enumerate()
            .map(|(a, axis)| AxisPayload {
                sigma: sig12(axis.sigma),
                explained: sig12(explained[a]),
                f: sig12_vec(&axis.f),
                g: sig12_vec(&axis.g),
                row_contributions: sig12_vec(&contrib.rows[a]),
                col_contributions: sig12_vec(&contrib.cols[a]),
                solver: axis.solver.map(|s| SolverInfo { objective: sig12(s.objective), ..s }),
            })
            .collect();
        Ok(Self {
            method: d.method,
            rank_used: d.rank_used,
            complete: d.complete,
            row_labels: d.model.row_labels.clone(),
            col_labels: d.model.col_labels.clone(),
            sigmas: d.axes.iter().map(|a| sig12(a.sigma)).collect(),
            explained: sig12_vec(&explained),
            axes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub schema: u32,
    pub input: InputDigest,
    /// `"original"` or `"minimal"`.
    pub analyzed: String,
    pub reduction: ReductionSummary,
    pub sparsity: SparsityReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ca: Option<DecompositionPayload>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tca: Option<DecompositionPayload>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub similarity: Option<SimilarityReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub checks: Option<Vec<CheckReport>>,
}

impl AnalysisResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result types always serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ContingencyTable {
        ContingencyTable::from_rows(&[
            [1.0, 2.0, 0.0, 0.0, 4.0],
            [2.0, 4.0, 0.0, 0.0, 8.0],
            [0.0, 0.0, 1.0, 2.0, 1.0],
            [3.0, 1.0, 5.0, 0.0, 2.0],
            [0.0, 7.0, 1.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn significant_digits() {
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(123456.7890123456), 123456.789012);
        assert_eq!(sig12(-0.0), 0.0);
        assert_eq!(sig12(2.5e-300), 2.5e-300);
    }

    #[test]
    fn json_round_trip() {
        let analysis = Analysis::run(&table(), AnalysisOptions { verify: true, ..Default::default() }).unwrap();
        let result = analysis.to_result().unwrap();
        let text = result.to_json();
        let back = AnalysisResult::from_json(&text).unwrap();
        assert_eq!(back, result);
        assert_eq!(back.to_json(), text);
        assert_eq!(result.schema, 1);
        assert_eq!(result.reduction.minimal_shape, (4, 5));
        assert!(result.checks.unwrap().len() == 2);
    }

    #[test]
    fn reduced_and_original_sigmas_agree() {
        let a = Analysis::run(&table(), AnalysisOptions::default()).unwrap();
        let b = Analysis::run(&table(), AnalysisOptions { reduced: true, ..Default::default() }).unwrap();
        for m in [Method::Ca, Method::Tca] {
            let x = a.decomposition(m).unwrap().sigmas();
            let y = b.decomposition(m).unwrap().sigmas();
            assert_eq!(x.len(), y.len());
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }
}
