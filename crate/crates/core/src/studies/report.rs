use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::StudyKind;
use super::fit::OrderFit;
use crate::error::{Error, Result};
use crate::loads::MaximizerKind;

pub const CSV_HEADER: [&str; 9] = [
    "h",
    "e_h",
    "E_h",
    "normalized",
    "I_limit",
    "rel_gap",
    "residual_stretch",
    "residual_bend",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Error,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Error => "error",
        }
    }
}

/// One `h` of a study. Quantities a study kind does not produce are `None`
/// and are written as empty CSV fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub h: f64,
    pub e_h: f64,
    pub energy: Option<f64>,
    pub normalized: Option<f64>,
    pub limit: Option<f64>,
    pub rel_gap: Option<f64>,
    pub residual_stretch: Option<f64>,
    pub residual_bend: Option<f64>,
    pub status: RowStatus,
}

impl ReportRow {
    pub fn new(h: f64, e_h: f64) -> Self {
        ReportRow {
            h,
            e_h,
            energy: None,
            normalized: None,
            limit: None,
            rel_gap: None,
            residual_stretch: None,
            residual_bend: None,
            status: RowStatus::Ok,
        }
    }

    pub fn failed(h: f64, e_h: f64) -> Self {
        ReportRow {
            status: RowStatus::Error,
            ..ReportRow::new(h, e_h)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyStatus {
    Pass,
    Fail,
    Error,
}

impl StudyStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyStatus::Pass => "pass",
            StudyStatus::Fail => "fail",
            StudyStatus::Error => "error",
        }
    }
}

/// A named pass/fail comparison. `upper` checks require `value ≤ threshold`,
/// the others `value ≥ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub upper: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            upper: true,
            passed: value <= threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            upper: false,
            passed: value >= threshold,
        }
    }

    /// A check that holds or not, reported as 1 against 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            upper: false,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    #[serde(flatten)]
    pub fit: OrderFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub rel_gap: f64,
    /// Assumed leading order of the gap.
    pub order: f64,
}

/// A per-`h` diagnostic that does not have a CSV column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub name: String,
    pub kind: StudyKind,
    /// Sorted by `h` descending.
    pub rows: Vec<ReportRow>,
    pub limit: Option<f64>,
    pub extrapolated: Option<Extrapolation>,
    pub fits: Vec<NamedFit>,
    pub series: Vec<Series>,
    pub checks: Vec<Check>,
    pub maximizer_kind: Option<MaximizerKind>,
    pub status: StudyStatus,
    pub error: Option<String>,
}

impl StudyReport {
    pub fn new(name: &str, kind: StudyKind) -> Self {
        StudyReport {
            name: name.to_string(),
            kind,
            rows: Vec::new(),
            limit: None,
            extrapolated: None,
            fits: Vec::new(),
            series: Vec::new(),
            checks: Vec::new(),
            maximizer_kind: None,
            status: StudyStatus::Pass,
            error: None,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&OrderFit> {
        self.fits.iter().find(|f| f.name == name).map(|f| &f.fit)
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    /// Sets the status from the checks, unless an error was recorded.
    pub fn finish(mut self) -> Self {
        self.status = if self.error.is_some() {
            StudyStatus::Error
        } else if self.checks.iter().all(|c| c.passed) {
            StudyStatus::Pass
        } else {
            StudyStatus::Fail
        };
        self
    }

    pub fn abort(mut self, err: &Error) -> Self {
        self.error = Some(err.to_string());
        self.status = StudyStatus::Error;
        self
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// The CSV body of a report, header included.
pub fn report_csv(report: &StudyReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            format_float(r.h),
            format_float(r.e_h),
            format_opt(r.energy),
            format_opt(r.normalized),
            format_opt(r.limit),
            format_opt(r.rel_gap),
            format_opt(r.residual_stretch),
            format_opt(r.residual_bend),
            r.status.as_str().to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub kind: StudyKind,
    pub status: StudyStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolated: Option<Extrapolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximizer_kind: Option<MaximizerKind>,
    #[serde(default)]
    pub fits: Vec<NamedFit>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub series: Vec<Series>,
}

impl From<&StudyReport> for Summary {
    fn from(r: &StudyReport) -> Self {
        Summary {
            name: r.name.clone(),
            kind: r.kind,
            status: r.status,
            error: r.error.clone(),
            limit: r.limit,
            extrapolated: r.extrapolated,
            maximizer_kind: r.maximizer_kind,
            fits: r.fits.clone(),
            checks: r.checks.clone(),
            series: r.series.clone(),
        }
    }
}

pub fn summary_toml(report: &StudyReport) -> Result<String> {
    toml::to_string(&Summary::from(report)).map_err(|e| Error::Parse {
        path: String::new(),
        message: e.to_string(),
    })
}

/// `report.csv` → `report.summary.toml` next to it.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    csv_path.with_file_name(format!("{stem}.summary.toml"))
}

/// Writes the CSV to `path` and the summary next to it.
pub fn write_report(report: &StudyReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, report_csv(report)?)?;
    fs::write(summary_path(path), summary_toml(report)?)?;
    Ok(())
}

fn parse_field(s: &str, column: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|e| Error::Parse {
        path: column.to_string(),
        message: format!("`{s}`: {e}"),
    })
}

/// Reads rows back from a report CSV.
pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let text = fs::read_to_string(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let header = rdr.headers().map_err(parse_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_err)?;
        let f = |i: usize| parse_field(&rec[i], CSV_HEADER[i]);
        let status = match &rec[8] {
            "ok" => RowStatus::Ok,
            "error" => RowStatus::Error,
            other => {
                return Err(Error::Parse {
                    path: "status".into(),
                    message: format!("unknown row status `{other}`"),
                })
            }
        };
        rows.push(ReportRow {
            h: f(0)?.unwrap_or(f64::NAN),
            e_h: f(1)?.unwrap_or(f64::NAN),
            energy: f(2)?,
            normalized: f(3)?,
            limit: f(4)?,
            rel_gap: f(5)?,
            residual_stretch: f(6)?,
            residual_bend: f(7)?,
            status,
        });
    }
    Ok(rows)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
