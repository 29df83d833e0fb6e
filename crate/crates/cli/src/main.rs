use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use taxica_core::report::{Analysis, AnalysisOptions, AnalysisResult, DecompositionPayload, ReductionSummary, SparsityReport};
use taxica_core::{
    emit_svg_biplot, parse_table, reduce_to_minimal, validate, CheckStatus, ContingencyTable, Error, Method, Methods,
    QuantileMethod, SparsitySummary, ZeroPolicy,
};

#[derive(Parser)]
#[command(name = "taxica", version, about = "Correspondence analysis (CA) and taxicab CA of contingency tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// 7-number sparsity summaries of the table and its minimal representative
    Summarize(Common),
    /// Merge proportional rows and columns into the minimal table
    Reduce(Common),
    /// Correspondence analysis
    Ca(Common),
    /// Taxicab correspondence analysis
    Tca(Common),
    /// Run both methods and compare their maps
    Compare {
        #[command(flatten)]
        common: Common,
        /// phi threshold for the "similar" verdict
        #[arg(long, default_value_t = taxica_core::diagnostics::DEFAULT_PHI_THRESHOLD)]
        phi_threshold: f64,
    },
    /// Check the algebraic identities of both decompositions
    Verify(Common),
    /// SVG biplot of two axes
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = MethodArg::Tca)]
        method: MethodArg,
        #[arg(long, default_value_t = 1)]
        axis_x: usize,
        #[arg(long, default_value_t = 2)]
        axis_y: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Input CSV: header row of column labels, first column of row labels
    #[arg(long)]
    input: PathBuf,
    /// Analyze the minimal representative instead of the input table
    #[arg(long)]
    reduced: bool,
    /// Number of axes (compare: number of axes paired)
    #[arg(long)]
    axes: Option<usize>,
    #[arg(long, value_enum, default_value_t = QuantileArg::Hinges)]
    quantile: QuantileArg,
    /// Largest min(I, J) solved by exhaustive enumeration in TCA
    #[arg(long, default_value_t = taxica_core::tca::DEFAULT_EXACT_THRESHOLD)]
    exact_threshold: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write results here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Field delimiter: a single character, or "tab"
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// What to do with all-zero rows and columns
    #[arg(long, value_enum, default_value_t = PolicyArg::Drop)]
    policy: PolicyArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantileArg {
    Hinges,
    Interpolated,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Drop,
    Reject,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ca,
    Tca,
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn delimiter_byte(text: &str) -> Result<u8, Failure> {
    match text {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        s => Err(Failure::Validation(format!("delimiter must be one ASCII character, got {s:?}"))),
    }
}

fn load(common: &Common) -> Result<ContingencyTable, Failure> {
    let text = std::fs::read_to_string(&common.input)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", common.input.display())))?;
    let table = parse_table(&text, delimiter_byte(&common.delimiter)?)?;
    let policy = match common.policy {
        PolicyArg::Drop => ZeroPolicy::Drop,
        PolicyArg::Reject => ZeroPolicy::Reject,
    };
    let (table, warnings) = validate(&table, policy)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if table.has_non_integer_counts() {
        eprintln!("warning: table has non-integer counts");
    }
    Ok(table)
}

fn options(common: &Common, methods: Methods) -> AnalysisOptions {
    AnalysisOptions {
        reduced: common.reduced,
        axes: common.axes,
        quantile: match common.quantile {
            QuantileArg::Hinges => QuantileMethod::Hinges,
            QuantileArg::Interpolated => QuantileMethod::Interpolated,
        },
        exact_threshold: common.exact_threshold,
        methods,
        ..AnalysisOptions::default()
    }
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Summarize(common) => {
            let table = load(&common)?;
            let result = Analysis::run(&table, options(&common, Methods { ca: false, tca: false }))?.to_result()?;
            let text = match common.format {
                Format::Json => json_text(&result),
                Format::Table => summary_table(&result.sparsity, &result.reduction),
            };
            emit(&common, &text)
        }
        Command::Reduce(common) => {
            let table = load(&common)?;
            let trace = reduce_to_minimal(&table)?;
            let delimiter = delimiter_byte(&common.delimiter)?;
            let csv = trace.minimal.to_csv(delimiter);
            let text = match common.format {
                Format::Json => {
                    let doc = json!({
                        "schema": taxica_core::report::SCHEMA_VERSION,
                        "minimal_csv": csv,
                        "reduction": ReductionSummary::from_trace(&trace),
                    });
                    serde_json::to_string_pretty(&doc).expect("reduction serializes") + "\n"
                }
                Format::Table => csv,
            };
            emit(&common, &text)
        }
        Command::Ca(common) => decomposition_command(&common, Method::Ca),
        Command::Tca(common) => decomposition_command(&common, Method::Tca),
        Command::Compare { common, phi_threshold } => {
            let table = load(&common)?;
            let mut opts = options(&common, Methods { ca: true, tca: true });
            opts.axes = None;
            opts.compare_axes = common.axes.unwrap_or(2);
            opts.phi_threshold = phi_threshold;
            let result = Analysis::run(&table, opts)?.to_result()?;
            let text = match common.format {
                Format::Json => json_text(&result),
                Format::Table => {
                    let mut out = String::new();
                    if let Some(s) = &result.similarity {
                        let _ = writeln!(out, "verdict: {}", s.verdict);
                        for ((a, b), phi) in s.pairing.iter().zip(&s.phi) {
                            let _ = writeln!(out, "CA axis {a} ~ TCA axis {b}: phi = {phi:.4}");
                        }
                    } else {
                        let _ = writeln!(out, "verdict: not available (fewer than one axis)");
                    }
                    out
                }
            };
            emit(&common, &text)
        }
        Command::Verify(common) => {
            let table = load(&common)?;
            let mut opts = options(&common, Methods { ca: true, tca: true });
            opts.verify = true;
            let result = Analysis::run(&table, opts)?.to_result()?;
            let reports = result.checks.clone().unwrap_or_default();
            let text = match common.format {
                Format::Json => json_text(&result),
                Format::Table => reports.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("\n"),
            };
            emit(&common, &text)?;
            let failed: Vec<String> = reports
                .iter()
                .flat_map(|r| r.checks.iter().filter(|c| c.status == CheckStatus::Fail).map(move |c| format!("{} {}", r.method, c.name)))
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Numerical(format!("checks failed: {}", failed.join(", "))))
            }
        }
        Command::Plot { common, method, axis_x, axis_y } => {
            let table = load(&common)?;
            let methods = match method {
                MethodArg::Ca => Methods { ca: true, tca: false },
                MethodArg::Tca => Methods { ca: false, tca: true },
            };
            let analysis = Analysis::run(&table, options(&common, methods))?;
            let method = match method {
                MethodArg::Ca => Method::Ca,
                MethodArg::Tca => Method::Tca,
            };
            let decomp = analysis.decomposition(method).expect("requested method was run");
            let svg = emit_svg_biplot(decomp, axis_x, axis_y)?;
            emit(&common, &svg)
        }
    }
}

fn decomposition_command(common: &Common, method: Method) -> Result<(), Failure> {
    let table = load(common)?;
    let methods = Methods { ca: method == Method::Ca, tca: method == Method::Tca };
    let result = Analysis::run(&table, options(common, methods))?.to_result()?;
    let text = match common.format {
        Format::Json => json_text(&result),
        Format::Table => {
            let payload = match method {
                Method::Ca => result.ca.as_ref(),
                Method::Tca => result.tca.as_ref(),
            };
            decomposition_table(payload.expect("requested method was run"))
        }
    };
    emit(common, &text)
}

fn json_text(result: &AnalysisResult) -> String {
    result.to_json() + "\n"
}

fn five(s: &SparsitySummary) -> String {
    let v = s.mh1.as_array();
    format!("({:.4}, {:.4}, {:.4}, {:.4}, {:.4})", v[0], v[1], v[2], v[3], v[4])
}

fn summary_table(s: &SparsityReport, r: &ReductionSummary) -> String {
    let mut out = String::new();
    for (name, x) in [("N", &s.original), ("M", &s.minimal)] {
        let _ = writeln!(
            out,
            "{name} {}x{}: ave {:.4}  %0 {:.4}  MH1 {}  bound {:.4}",
            x.size.0,
            x.size.1,
            x.ave,
            x.pct_zero,
            five(x),
            x.bound
        );
    }
    let _ = writeln!(out, "reduction: {}x{} -> {}x{}", r.original_shape.0, r.original_shape.1, r.minimal_shape.0, r.minimal_shape.1);
    let _ = writeln!(out, "class: {} ({})", s.class.kind, s.class.rationale);
    out
}

fn decomposition_table(d: &DecompositionPayload) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} ({} axes{})", d.method, d.rank_used, if d.complete { ", complete" } else { "" });
    let _ = writeln!(out, "{:>6} {:>10} {:>10}", "axis", "sigma", "explained");
    for (a, (s, e)) in d.sigmas.iter().zip(&d.explained).enumerate() {
        let _ = writeln!(out, "{:>6} {:>10.4} {:>10.4}", a + 1, s, e);
    }
    let width = d.row_labels.iter().chain(&d.col_labels).map(|l| l.chars().count()).max().unwrap_or(0).max(6);
    let header: String = (1..=d.axes.len()).map(|a| format!(" {:>10}", format!("axis {a}"))).collect();
    let section = |out: &mut String, title: &str, labels: &[String], coord: &dyn Fn(usize, usize) -> f64| {
        let _ = writeln!(out, "{title:<width$}{header}");
        for (i, label) in labels.iter().enumerate() {
            let cells: String = (0..d.axes.len()).map(|a| format!(" {:>10.4}", coord(a, i))).collect();
            let _ = writeln!(out, "{label:<width$}{cells}");
        }
    };
    section(&mut out, "rows", &d.row_labels, &|a, i| d.axes[a].f[i]);
    section(&mut out, "cols", &d.col_labels, &|a, j| d.axes[a].g[j]);
    out
}
