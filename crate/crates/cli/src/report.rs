//! Tabular reports and their CSV / JSON encodings.

use std::fmt;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// One cell of a report.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Float(x) => Some(x),
            Value::Bool(b) => Some(f64::from(u8::from(b))),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    fn render(&self, decimals: Option<usize>) -> String {
        match self {
            Value::Null => String::new(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Float(x) => format_float(*x, decimals),
            Value::Text(s) => s.clone(),
        }
    }

    fn to_json(&self, decimals: Option<usize>) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Bool(b) => (*b).into(),
            Value::Int(i) => (*i).into(),
            Value::Float(x) => {
                let x = match decimals {
                    Some(d) => {
                        let scale = 10f64.powi(d as i32);
                        (x * scale).round() / scale
                    }
                    None => *x,
                };
                // non-finite values have no JSON number form
                serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, Into::into)
            }
            Value::Text(s) => s.clone().into(),
        }
    }

    /// Inverse of the CSV cell encoding.
    fn parse(cell: &str) -> Value {
        match cell {
            "" => Value::Null,
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => {
                if let Ok(i) = cell.parse::<i64>() {
                    Value::Int(i)
                } else if let Ok(x) = cell.parse::<f64>() {
                    Value::Float(x)
                } else {
                    Value::Text(cell.to_owned())
                }
            }
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i as i64)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

/// Seventeen significant digits, fixed notation for moderate magnitudes and scientific otherwise.
/// The output always contains `.`, `e` or a non-finite marker so it never reads back as an integer.
pub fn format_float(x: f64, decimals: Option<usize>) -> String {
    if let Some(d) = decimals {
        return format!("{x:.d$}");
    }
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{x:.16e}");
    let exponent: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..=15).contains(&exponent) {
        let d = (16 - exponent) as usize;
        format!("{x:.d$}")
    } else {
        sci
    }
}

pub type ReportRow = Vec<Value>;

/// Rows under a fixed column set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    /// Presentation rounding; values are stored unrounded.
    pub decimals: Option<usize>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|&c| c.to_owned()).collect(),
            rows: Vec::new(),
            decimals: None,
        }
    }

    pub fn push(&mut self, row: ReportRow) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(HarnessError::Internal(format!(
                "row has {} cells, report has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// All cells of column `name`, top to bottom.
    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn cell(&self, row: usize, name: &str) -> Option<&Value> {
        self.rows.get(row)?.get(self.column_index(name)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| HarnessError::Internal(e.to_string());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.render(self.decimals)))
                .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Internal(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let object: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(|v| v.to_json(self.decimals)))
                    .collect();
                serde_json::Value::Object(object)
            })
            .collect();
        let mut text = serde_json::to_string_pretty(&rows)
            .map_err(|e| HarnessError::Internal(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    /// Reads a report written by [`Report::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let bad = |e: csv::Error| HarnessError::Usage(format!("malformed CSV: {e}"));
        let columns = r
            .headers()
            .map_err(bad)?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut report = Report {
            columns,
            ..Default::default()
        };
        for record in r.records() {
            let record = record.map_err(bad)?;
            report.push(record.iter().map(Value::parse).collect())?;
        }
        Ok(report)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv().map_err(|_| fmt::Error)?)
    }
}

/// Writes `report` to `path`, or to standard output when `path` is `None`.
pub fn write_report(report: &Report, path: Option<&Path>, format: OutputFormat) -> Result<()> {
    let text = report.render(format)?;
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}
