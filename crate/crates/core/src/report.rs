//! Input documents and machine-readable reports.
//!
//! Pool files and experiment specs are strict JSON: unknown fields are
//! rejected. Reports are written either as one JSON document carrying
//! `"schema_version": "1"` or as CSV with a header row. Floats use the
//! shortest representation that parses back to the same value.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knapsack::{Ensemble, Scheme, SolveReport};
use crate::sim::{ExperimentResult, ExperimentSpec, PnkRow, Rows, SolverRow, TheoremRow};
use crate::voting::{Classifier, ClassifierPool};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Usage(format!("unknown format {s:?}; expected json or csv"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolFile {
    classifiers: Vec<Classifier>,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses a pool document, `{"classifiers": [{"id", "accuracy", "time"}, ...]}`.
pub fn parse_pool(document: &str) -> Result<ClassifierPool> {
    let file: PoolFile = serde_json::from_str(document).map_err(parse_error)?;
    for (i, c) in file.classifiers.iter().enumerate() {
        c.validate()
            .map_err(|e| Error::Validation(format!("classifiers[{i}]: {}", strip_prefix(&e))))?;
    }
    ClassifierPool::new(file.classifiers)
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Validation(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// Pool document that [`parse_pool`] reads back to the same pool.
pub fn pool_to_json(pool: &ClassifierPool) -> String {
    let file = PoolFile {
        classifiers: pool.members().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("pool serializes")
}

pub fn parse_scheme(text: &str) -> Result<Scheme> {
    text.parse()
}

pub fn parse_experiment_spec(document: &str) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = serde_json::from_str(document).map_err(parse_error)?;
    spec.validate()?;
    Ok(spec)
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Tabular output

/// One CSV cell.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {$(
        impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_cell!(usize, u64, bool, String, &'static str, Scheme);

impl<T: Cell> Cell for Option<T> {
    fn cell(&self) -> String {
        self.as_ref().map(Cell::cell).unwrap_or_default()
    }
}

impl Cell for Ensemble {
    fn cell(&self) -> String {
        self.member_ids().join(";")
    }
}

/// A record type with a fixed column set.
pub trait Row {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

macro_rules! row {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl Row for $ty {
            const HEADER: &'static [&'static str] = &[$(stringify!($field)),*];
            fn cells(&self) -> Vec<String> {
                vec![$(self.$field.cell()),*]
            }
        }
    };
}

/// Anything that can be emitted as a report.
pub trait Report: Serialize {
    fn header(&self) -> &'static [&'static str];
    fn records(&self) -> Vec<Vec<String>>;
}

macro_rules! single_row_report {
    ($($ty:ty),*) => {$(
        impl Report for $ty {
            fn header(&self) -> &'static [&'static str] {
                <$ty as Row>::HEADER
            }
            fn records(&self) -> Vec<Vec<String>> {
                vec![self.cells()]
            }
        }
    )*};
}

row!(SolveReport {
    best,
    accuracy,
    total_time,
    budget,
    scheme,
    method,
    evaluations,
    infeasible,
    restarts_run,
    stop_rule,
});

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub subset: Ensemble,
    pub scheme: Scheme,
    pub size: usize,
    pub total_time: f64,
    pub accuracy: f64,
}
row!(EvaluationReport { subset, scheme, size, total_time, accuracy });

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub cdf: String,
    pub mu: f64,
    pub n: usize,
    pub expected_accuracy: f64,
    pub asymptotic_accuracy: f64,
    pub variance_bound: f64,
}
row!(TheoryReport { cdf, mu, n, expected_accuracy, asymptotic_accuracy, variance_bound });

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub pool_size: usize,
    pub d: usize,
    pub model: &'static str,
    pub trials: u64,
    pub seed: u64,
    pub estimate: f64,
    pub std_error: f64,
}
row!(SimulationReport { pool_size, d, model, trials, seed, estimate, std_error });

single_row_report!(SolveReport, EvaluationReport, TheoryReport, SimulationReport);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PnkReportRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub method: &'static str,
    pub model: Option<&'static str>,
    /// Exact rational, formula method only.
    pub exact: Option<String>,
    pub value: f64,
    pub std_error: Option<f64>,
    pub trials: Option<u64>,
}
row!(PnkReportRow { n, d, k, method, model, exact, value, std_error, trials });

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PnkReport {
    pub seed: Option<u64>,
    pub rows: Vec<PnkReportRow>,
    /// Monotonicity violations of the formula profile, if any.
    pub warnings: Vec<String>,
}

impl Report for PnkReport {
    fn header(&self) -> &'static [&'static str] {
        PnkReportRow::HEADER
    }
    fn records(&self) -> Vec<Vec<String>> {
        self.rows.iter().map(Row::cells).collect()
    }
}

row!(TheoremRow {
    accuracy_cdf,
    profile_cdf,
    n,
    draws,
    mu,
    mean,
    mean_std_error,
    expected,
    asymptotic,
    deviation_from_expected,
    deviation_from_asymptotic,
    variance,
    variance_std_error,
    variance_bound,
    mean_pass,
    variance_pass,
    pass,
    error,
});

row!(PnkRow {
    n,
    d,
    k,
    formula_exact,
    formula,
    wrong_estimate,
    wrong_std_error,
    wrong_deviation,
    all_estimate,
    all_std_error,
    all_deviation,
    trials,
    range_ok,
    terminal_ok,
    pass,
    error,
});

row!(SolverRow {
    instance,
    instance_seed,
    n,
    budget,
    exhaustive_accuracy,
    stochastic_accuracy,
    exhaustive_members,
    stochastic_members,
    hit,
    exhaustive_evaluations,
    stochastic_evaluations,
    pass,
    error,
});

impl Report for ExperimentResult {
    fn header(&self) -> &'static [&'static str] {
        match &self.rows {
            Rows::TheoremCheck(_) => TheoremRow::HEADER,
            Rows::PnkCompare(_) => PnkRow::HEADER,
            Rows::SolverBenchmark(_) => SolverRow::HEADER,
        }
    }

    fn records(&self) -> Vec<Vec<String>> {
        match &self.rows {
            Rows::TheoremCheck(rows) => rows.iter().map(Row::cells).collect(),
            Rows::PnkCompare(rows) => rows.iter().map(Row::cells).collect(),
            Rows::SolverBenchmark(rows) => rows.iter().map(Row::cells).collect(),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    schema_version: &'static str,
    #[serde(flatten)]
    report: &'a R,
}

/// Renders a report to bytes.
pub fn render_report<R: Report>(report: &R, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let envelope = Envelope {
                schema_version: SCHEMA_VERSION,
                report,
            };
            let mut out = serde_json::to_vec_pretty(&envelope)
                .map_err(|e| Error::Validation(format!("report serialization failed: {e}")))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Validation(format!("CSV encoding failed: {e}"));
            writer.write_record(report.header()).map_err(csv_err)?;
            for record in report.records() {
                writer.write_record(&record).map_err(csv_err)?;
            }
            writer
                .into_inner()
                .map_err(|e| Error::Validation(format!("CSV encoding failed: {e}")))
        }
    }
}

/// Writes a report to `destination`, or to standard output when `None`.
pub fn emit_report<R: Report>(report: &R, format: Format, destination: Option<&Path>) -> Result<()> {
    let bytes = render_report(report, format)?;
    match destination {
        Some(path) => fs::write(path, &bytes).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&bytes)
                .and_then(|_| lock.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
