//! Reading p-value datasets and writing result tables.
//!
//! Tables are written either as CSV, with floats rounded to six significant
//! digits, or as JSON objects mapping each key (usually a procedure name) to
//! the list of its rows at full precision.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::mc::MetricsRow;
use crate::sample::PValueSample;

/// Selection cutoff for one-sided p-values and the matching rescale factor.
pub const SELECTION_CUTOFF: f64 = 0.025;
pub const SELECTION_SCALE: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    OneSided,
    TwoSided,
}

/// Where and how to read a column of p-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub path: PathBuf,
    pub column: String,
    pub id_column: Option<String>,
    pub sidedness: Sidedness,
    /// Effect-direction column, required to turn two-sided p-values into
    /// one-sided ones. Positive entries mean the effect points the tested way.
    pub direction_column: Option<String>,
    pub selection_adjust: bool,
    /// Keep `p <= 0.025` instead of `p < 0.025` when selecting.
    pub inclusive_cutoff: bool,
}

impl DatasetDescriptor {
    pub fn new(path: impl Into<PathBuf>, column: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            column: column.into(),
            id_column: None,
            sidedness: Sidedness::OneSided,
            direction_column: None,
            selection_adjust: false,
            inclusive_cutoff: false,
        }
    }
}

fn parse_direction(raw: &str) -> Option<f64> {
    match raw.trim() {
        "+" => Some(1.0),
        "-" => Some(-1.0),
        s => s.parse::<f64>().ok().filter(|d| *d != 0.0 && d.is_finite()),
    }
}

/// Load the descriptor's p-value column. Data rows are numbered from 1,
/// not counting the header.
pub fn load_pvalues(desc: &DatasetDescriptor) -> Result<PValueSample> {
    let path = &desc.path;
    let csv_err = |source| Error::Csv {
        path: path.clone(),
        source,
    };
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Data {
            path: path.clone(),
            row: 0,
            message: "file is empty or has no header".into(),
        });
    }
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Data {
            path: path.clone(),
            row: 0,
            message: format!("no column named {name:?} (columns: {})", headers.iter().collect::<Vec<_>>().join(", ")),
        })
    };
    let p_col = find(&desc.column)?;
    let id_col = desc.id_column.as_deref().map(find).transpose()?;
    let dir_col = match desc.sidedness {
        Sidedness::OneSided => None,
        Sidedness::TwoSided => Some(find(desc.direction_column.as_deref().ok_or_else(|| {
            Error::Config("two-sided p-values need an effect-direction column to be made one-sided".into())
        })?)?),
    };

    let (mut values, mut labels) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(csv_err)?;
        let bad = |message: String| Error::Data {
            path: path.clone(),
            row,
            message,
        };
        let raw = record.get(p_col).unwrap_or("");
        let p: f64 = raw
            .parse()
            .map_err(|_| bad(format!("p-value {raw:?} is missing or not a number")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(bad(format!("p-value {p} is outside [0, 1]")));
        }
        let p = match dir_col {
            None => p,
            Some(c) => {
                let raw = record.get(c).unwrap_or("");
                let d = parse_direction(raw).ok_or_else(|| bad(format!("effect direction {raw:?} is not a signed number")))?;
                if d > 0.0 {
                    p / 2.0
                } else {
                    1.0 - p / 2.0
                }
            }
        };
        values.push(p);
        if let Some(c) = id_col {
            labels.push(record.get(c).unwrap_or("").to_string());
        }
    }
    if values.is_empty() {
        return Err(Error::Data {
            path: path.clone(),
            row: 0,
            message: "no data rows".into(),
        });
    }
    let mut sample = PValueSample::new(values)?;
    if id_col.is_some() {
        sample = sample.with_labels(labels)?;
    }
    if desc.selection_adjust {
        sample = selection_adjust(&sample, desc.inclusive_cutoff)?;
    }
    Ok(sample)
}

/// Keep one-sided p-values below 0.025 and rescale them by 40 so that they
/// are again uniform under the null. `inclusive` keeps `p = 0.025` as well.
pub fn selection_adjust(sample: &PValueSample, inclusive: bool) -> Result<PValueSample> {
    sample.filter_map_values(
        |p| if inclusive { p <= SELECTION_CUTOFF } else { p < SELECTION_CUTOFF },
        |p| (p * SELECTION_SCALE).min(1.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

/// A flat, serializable table row. `Default` supplies the column names for
/// header-only output.
pub trait TableRow: Serialize + DeserializeOwned + Default {
    /// JSON grouping key.
    fn key(&self) -> String;
}

impl TableRow for MetricsRow {
    fn key(&self) -> String {
        self.procedure.clone()
    }
}

/// Rejections of one procedure on one dataset at one level.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RejectionRow {
    pub procedure: String,
    pub q: f64,
    pub m: usize,
    pub r: usize,
    pub percent: u32,
    pub threshold: f64,
    pub pi0_hat: Option<f64>,
    pub boundary_index: Option<usize>,
    pub boundary_label: Option<String>,
    pub boundary_lfdr_hat: Option<f64>,
    pub sellke_alpha: Option<f64>,
    pub sellke_alpha_pi0: Option<f64>,
}

/// `round(100 r / m)`.
pub fn percent_rejected(r: usize, m: usize) -> u32 {
    if m == 0 {
        0
    } else {
        (100.0 * r as f64 / m as f64).round() as u32
    }
}

impl TableRow for RejectionRow {
    fn key(&self) -> String {
        self.procedure.clone()
    }
}

/// One rejected hypothesis with its estimated lfdr.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RejectedRow {
    pub procedure: String,
    pub q: f64,
    pub rank: usize,
    pub index: usize,
    pub label: Option<String>,
    pub p: f64,
    pub lfdr_hat: f64,
}

impl TableRow for RejectedRow {
    fn key(&self) -> String {
        self.procedure.clone()
    }
}

/// The null-proportion estimate a procedure used on a dataset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Pi0Row {
    pub procedure: String,
    pub q: f64,
    pub pi0_hat: f64,
    pub lambda_hat: Option<f64>,
}

impl TableRow for Pi0Row {
    fn key(&self) -> String {
        self.procedure.clone()
    }
}

/// Calibration curves on a p-value grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub t: f64,
    pub alpha: f64,
    pub alpha_pi0: f64,
    pub lfdr_hat: Option<f64>,
}

impl TableRow for CalibrationRow {
    fn key(&self) -> String {
        "curve".into()
    }
}

/// Where a level `q` cuts the calibration curve and, given data, the SL
/// plug-in cutoff.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CutoffRow {
    pub q: f64,
    pub alpha_pi0_cutoff: Option<f64>,
    pub sl_cutoff: Option<f64>,
    pub sl_rejections: Option<usize>,
}

impl TableRow for CutoffRow {
    fn key(&self) -> String {
        "cutoffs".into()
    }
}

/// Monte Carlo estimate reported by the lemma checks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LemmaRow {
    pub check: String,
    pub setting: String,
    pub estimate: f64,
    pub se: f64,
    pub bound: f64,
    pub pass: bool,
}

impl TableRow for LemmaRow {
    fn key(&self) -> String {
        self.check.clone()
    }
}

/// Population limit and simulated gaps at one `m`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub config: String,
    pub pi0: f64,
    pub q: f64,
    pub t1_star: f64,
    pub t2_star: f64,
    pub limit: f64,
    pub bound: f64,
    pub m: Option<usize>,
    pub n_reps: Option<u64>,
    pub mean_lfdr: Option<f64>,
    pub mean_gap: Option<f64>,
    pub gap_se: Option<f64>,
}

impl TableRow for AsymptoticRow {
    fn key(&self) -> String {
        format!("{}/{}", self.config, self.pi0)
    }
}

/// `%g`-style rendering with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..6).contains(&exp) {
        trim(&format!("{x:.*}", (5 - exp) as usize))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

fn cell(v: &Value) -> Result<String> {
    Ok(match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format_sig6(n.as_f64().expect("f64 number")),
        Value::Number(n) => n.to_string(),
        other => return Err(Error::Validation(format!("table cell is not a scalar: {other}"))),
    })
}

fn row_object<T: Serialize>(row: &T, path: &Path) -> Result<Map<String, Value>> {
    match serde_json::to_value(row).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })? {
        Value::Object(map) => Ok(map),
        _ => Err(Error::Validation("table rows must serialize to objects".into())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write rows as CSV (header always present) or as a JSON object grouping
/// rows by [`TableRow::key`] in first-appearance order.
pub fn write_table<T: TableRow>(rows: &[T], format: TableFormat, path: &Path) -> Result<()> {
    match format {
        TableFormat::Csv => {
            let csv_err = |source| Error::Csv {
                path: path.to_path_buf(),
                source,
            };
            let mut w = csv::Writer::from_writer(create(path)?);
            let columns: Vec<String> = row_object(&T::default(), path)?.keys().cloned().collect();
            w.write_record(&columns).map_err(csv_err)?;
            for row in rows {
                let obj = row_object(row, path)?;
                let cells = obj.values().map(cell).collect::<Result<Vec<_>>>()?;
                w.write_record(&cells).map_err(csv_err)?;
            }
            w.flush().map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }
        TableFormat::Json => {
            let mut grouped: Map<String, Value> = Map::new();
            for row in rows {
                let entry = grouped.entry(row.key()).or_insert_with(|| Value::Array(Vec::new()));
                if let Value::Array(list) = entry {
                    list.push(Value::Object(row_object(row, path)?));
                }
            }
            let mut w = create(path)?;
            serde_json::to_writer_pretty(&mut w, &grouped).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
            writeln!(w).and_then(|_| w.flush()).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    }
}

/// Inverse of [`write_table`]. JSON groups come back concatenated in file order.
pub fn read_table<T: TableRow>(format: TableFormat, path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        TableFormat::Csv => csv::Reader::from_reader(BufReader::new(file))
            .deserialize()
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            }),
        TableFormat::Json => {
            let grouped: Map<String, Value> = serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
            let mut rows = Vec::new();
            for (_, list) in grouped {
                let list: Vec<T> = serde_json::from_value(list).map_err(|source| Error::Json {
                    path: path.to_path_buf(),
                    source,
                })?;
                rows.extend(list);
            }
            Ok(rows)
        }
    }
}

/// Provenance of one CLI run; written as `manifest.json` next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub run_id: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub started_unix_ms: u128,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        writeln!(w).and_then(|_| w.flush()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn load_examples() {
        let dir = tempfile::tempdir().unwrap();
        let ok = write(&dir, "ok.csv", "id,p\na,0.01\nb,0.2\n");
        let mut desc = DatasetDescriptor::new(&ok, "p");
        desc.id_column = Some("id".into());
        let s = load_pvalues(&desc).unwrap();
        assert_eq!(s.values(), &[0.01, 0.2]);
        assert_eq!(s.labels().unwrap(), &["a".to_string(), "b".to_string()]);

        let bad = write(&dir, "bad.csv", "p\n0.1\n0.2\n0.3\n0.4\n1.3\n");
        let err = load_pvalues(&DatasetDescriptor::new(&bad, "p")).unwrap_err();
        assert!(matches!(err, Error::Data { row: 5, .. }), "{err}");
        assert!(err.to_string().contains("row 5"));

        let empty = write(&dir, "empty.csv", "");
        assert!(load_pvalues(&DatasetDescriptor::new(&empty, "p")).is_err());
        let header_only = write(&dir, "header.csv", "p\n");
        assert!(load_pvalues(&DatasetDescriptor::new(&header_only, "p")).is_err());
        assert!(load_pvalues(&DatasetDescriptor::new(&ok, "pval")).is_err());
        assert!(load_pvalues(&DatasetDescriptor::new(dir.path().join("nope.csv"), "p")).is_err());

        let missing = write(&dir, "missing.csv", "p\n0.1\n\n0.3\nabc\n");
        let err = load_pvalues(&DatasetDescriptor::new(&missing, "p")).unwrap_err();
        assert!(matches!(err, Error::Data { row: 3, .. }), "{err}");
    }

    #[test]
    fn two_sided_needs_direction() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "two.csv", "p,effect\n0.04,1.5\n0.04,-0.2\n0.5,+\n");
        let mut desc = DatasetDescriptor::new(&path, "p");
        desc.sidedness = Sidedness::TwoSided;
        assert!(matches!(load_pvalues(&desc), Err(Error::Config(_))));
        desc.direction_column = Some("effect".into());
        let s = load_pvalues(&desc).unwrap();
        assert_eq!(s.values(), &[0.02, 0.98, 0.25]);
    }

    #[test]
    fn selection_examples() {
        let s = PValueSample::new(vec![0.01, 0.03]).unwrap();
        assert_eq!(selection_adjust(&s, false).unwrap().values(), &[0.4]);
        let edge = PValueSample::new(vec![0.024999]).unwrap();
        assert_relative_eq!(selection_adjust(&edge, false).unwrap().values()[0], 0.99996, epsilon = 1e-12);
        let cut = PValueSample::new(vec![0.025]).unwrap();
        assert!(selection_adjust(&cut, false).unwrap().is_empty());
        assert_eq!(selection_adjust(&cut, true).unwrap().values(), &[1.0]);
        // Idempotent only when nothing survives.
        let once = selection_adjust(&s, false).unwrap();
        assert_ne!(selection_adjust(&once, false).unwrap(), once);
        let none = selection_adjust(&cut, false).unwrap();
        assert_eq!(selection_adjust(&none, false).unwrap(), none);
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.15), "0.15");
        assert_eq!(format_sig6(0.003125), "0.003125");
        assert_eq!(format_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig6(123456789.0), "1.23457e+08");
        assert_eq!(format_sig6(-2.5e-7), "-2.5e-07");
        assert_eq!(format_sig6(999999.6), "1e+06");
        assert_eq!(format_sig6(100.0), "100");
    }

    #[test]
    fn percentage_column() {
        assert_eq!(percent_rejected(99, 261), 38);
        assert_eq!(percent_rejected(0, 261), 0);
    }

    fn rejection_rows() -> Vec<RejectionRow> {
        vec![
            RejectionRow {
                procedure: "SL".into(),
                q: 0.1,
                m: 261,
                r: 99,
                percent: 38,
                threshold: 0.123_456_789,
                pi0_hat: Some(1.0),
                boundary_index: Some(17),
                boundary_label: Some("study, \"17\"".into()),
                boundary_lfdr_hat: Some(0.25),
                sellke_alpha: None,
                sellke_alpha_pi0: None,
            },
            RejectionRow {
                procedure: "TSSL(q)".into(),
                q: 0.1,
                m: 261,
                r: 0,
                ..Default::default()
            },
        ]
    }

    #[test]
    fn tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = rejection_rows();
        let json = dir.path().join("t.json");
        write_table(&rows, TableFormat::Json, &json).unwrap();
        assert_eq!(read_table::<RejectionRow>(TableFormat::Json, &json).unwrap(), rows);

        let csv = dir.path().join("t.csv");
        write_table(&rows, TableFormat::Csv, &csv).unwrap();
        let back: Vec<RejectionRow> = read_table(TableFormat::Csv, &csv).unwrap();
        let mut rounded = rows.clone();
        rounded[0].threshold = 0.123457;
        assert_eq!(back, rounded);
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("procedure,q,m,r,percent,threshold,"));
        assert!(text.contains("SL,0.1,261,99,38,0.123457,1,17,"));
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        write_table::<MetricsRow>(&[], TableFormat::Csv, &csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("procedure,config,m,pi0,rho,q,n_reps,bfdr_hat,bfdr_se,"));
        assert!(read_table::<MetricsRow>(TableFormat::Csv, &csv).unwrap().is_empty());
        let json = dir.path().join("empty.json");
        write_table::<MetricsRow>(&[], TableFormat::Json, &json).unwrap();
        assert!(read_table::<MetricsRow>(TableFormat::Json, &json).unwrap().is_empty());
    }
}
