use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::value::RawValue;

use super::config::ScenarioConfig;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub config_hash: String,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone)]
pub struct ResultRecord {
    pub scenario: String,
    pub config: ScenarioConfig,
    pub columns: Vec<Column>,
    /// Named summary numbers (optimum, rates, ...).
    pub scalars: Vec<(String, f64)>,
    pub metadata: Metadata,
}

impl ResultRecord {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }
}

/// 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"))
}

/// CSV with `# meta` lines (excluded from determinism checks), `# scalar`
/// lines, a header row and the data rows.
pub fn to_csv(rec: &ResultRecord) -> String {
    let mut s = String::new();
    let m = &rec.metadata;
    let _ = writeln!(s, "# meta scenario={}", rec.scenario);
    let _ = writeln!(s, "# meta version={}", m.version);
    let _ = writeln!(s, "# meta config_hash={}", m.config_hash);
    let _ = writeln!(s, "# meta wall_clock_s={:.3}", m.wall_clock_s);
    s.push_str(&csv_body(rec));
    s
}

/// Everything except the metadata lines.
pub fn csv_body(rec: &ResultRecord) -> String {
    let mut s = String::new();
    for (k, v) in &rec.scalars {
        let _ = writeln!(s, "# scalar {k}={}", fmt_f64(*v));
    }
    let names: Vec<&str> = rec.columns.iter().map(|c| c.name.as_str()).collect();
    s.push_str(&names.join(","));
    s.push('\n');
    for i in 0..rec.n_rows() {
        let row: Vec<String> = rec.columns.iter().map(|c| fmt_f64(c.values[i])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn raw(x: f64) -> Box<RawValue> {
    // JSON has no infinities; they become null.
    let text = if x.is_finite() { fmt_f64(x) } else { "null".into() };
    RawValue::from_string(text).expect("valid JSON number")
}

pub fn to_json(rec: &ResultRecord) -> Result<String, HarnessError> {
    #[derive(Serialize)]
    struct Out<'a> {
        scenario: &'a str,
        config: &'a ScenarioConfig,
        metadata: &'a Metadata,
        scalars: serde_json::Map<String, serde_json::Value>,
        columns: Vec<(&'a str, Vec<Box<RawValue>>)>,
    }
    let mut scalars = serde_json::Map::new();
    for (k, v) in &rec.scalars {
        scalars.insert(k.clone(), serde_json::from_str(raw(*v).get()).expect("number"));
    }
    let out = Out {
        scenario: &rec.scenario,
        config: &rec.config,
        metadata: &rec.metadata,
        scalars,
        columns: rec
            .columns
            .iter()
            .map(|c| (c.name.as_str(), c.values.iter().map(|&x| raw(x)).collect()))
            .collect(),
    };
    serde_json::to_string_pretty(&out).map_err(|e| HarnessError::Output(e.to_string()))
}

pub fn emit(rec: &ResultRecord, format: Format, path: Option<&Path>) -> Result<(), HarnessError> {
    let text = match format {
        Format::Csv => to_csv(rec),
        Format::Json => to_json(rec)? + "\n",
    };
    match path {
        Some(p) => std::fs::write(p, text).map_err(HarnessError::Io),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(HarnessError::Io),
    }
}

/// Columns of a CSV produced by [`to_csv`]; comment lines are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<Column>, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| HarnessError::Output(e.to_string()))?
        .clone();
    let mut cols: Vec<Column> = headers
        .iter()
        .map(|h| Column {
            name: h.to_string(),
            values: Vec::new(),
        })
        .collect();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| HarnessError::Output(e.to_string()))?;
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.values.push(parse_f64(field).map_err(HarnessError::Output)?);
        }
    }
    Ok(cols)
}
