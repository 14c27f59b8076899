//! Report records and their JSON / CSV forms.
//!
//! Floats are written with 17 significant digits so that every double
//! survives a round trip bit for bit.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportValue {
    Bool(bool),
    Int(i64),
    Number(f64),
    Interval {
        #[serde(
            serialize_with = "float_as_text_if_needed",
            deserialize_with = "float_or_text"
        )]
        low: f64,
        #[serde(
            serialize_with = "float_as_text_if_needed",
            deserialize_with = "float_or_text"
        )]
        high: f64,
    },
    Text(String),
    List(Vec<ReportValue>),
}

fn float_as_text_if_needed<S: serde::Serializer>(
    x: &f64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format!("{x}").to_lowercase())
    }
}

/// Accepts a JSON number or one of the strings written for non-finite floats.
fn float_or_text<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(x) => Ok(x),
        Raw::Text(t) => match t.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            _ => Err(serde::de::Error::custom(format!("not a float: {t}"))),
        },
    }
}

impl ReportValue {
    /// A number, with non-finite values spelled out as text (`inf`, `-inf`, `nan`).
    pub fn number(x: f64) -> Self {
        if x.is_finite() {
            ReportValue::Number(x)
        } else {
            ReportValue::Text(format!("{x}").to_lowercase())
        }
    }

    pub fn interval(low: f64, high: f64) -> Self {
        ReportValue::Interval { low, high }
    }

    pub fn numbers(xs: &[f64]) -> Self {
        ReportValue::List(xs.iter().map(|&x| Self::number(x)).collect())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ReportValue::Number(x) => Some(x),
            ReportValue::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    fn csv_cells(&self, key: &str, out: &mut Vec<(String, String)>) {
        match self {
            ReportValue::Interval { low, high } => {
                out.push((format!("{key}.low"), fmt_f64(*low)));
                out.push((format!("{key}.high"), fmt_f64(*high)));
            }
            other => out.push((key.to_string(), other.csv_text())),
        }
    }

    fn csv_text(&self) -> String {
        match self {
            ReportValue::Bool(b) => b.to_string(),
            ReportValue::Int(i) => i.to_string(),
            ReportValue::Number(x) => fmt_f64(*x),
            ReportValue::Interval { low, high } => {
                format!("[{};{}]", fmt_f64(*low), fmt_f64(*high))
            }
            ReportValue::Text(s) => s.clone(),
            ReportValue::List(v) => v
                .iter()
                .map(ReportValue::csv_text)
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

impl From<bool> for ReportValue {
    fn from(b: bool) -> Self {
        ReportValue::Bool(b)
    }
}

impl From<f64> for ReportValue {
    fn from(x: f64) -> Self {
        ReportValue::number(x)
    }
}

impl From<usize> for ReportValue {
    fn from(i: usize) -> Self {
        ReportValue::Int(i as i64)
    }
}

impl From<u64> for ReportValue {
    fn from(i: u64) -> Self {
        ReportValue::Int(i as i64)
    }
}

impl From<i64> for ReportValue {
    fn from(i: i64) -> Self {
        ReportValue::Int(i)
    }
}

impl From<&str> for ReportValue {
    fn from(s: &str) -> Self {
        ReportValue::Text(s.to_string())
    }
}

impl From<String> for ReportValue {
    fn from(s: String) -> Self {
        ReportValue::Text(s)
    }
}

impl<T: Into<ReportValue>> From<Option<T>> for ReportValue {
    fn from(v: Option<T>) -> Self {
        v.map_or_else(|| ReportValue::Text("n/a".into()), Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub command: String,
    pub params: BTreeMap<String, ReportValue>,
    pub results: BTreeMap<String, ReportValue>,
    pub seed: u64,
    pub version: String,
    pub wall_time_ms: u64,
}

impl ReportRecord {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Self {
            command: command.into(),
            params: BTreeMap::new(),
            results: BTreeMap::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: 0,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<ReportValue>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn result(&mut self, key: &str, value: impl Into<ReportValue>) -> &mut Self {
        self.results.insert(key.to_string(), value.into());
        self
    }

    /// Copy with `wall_time_ms` zeroed, for determinism comparisons.
    pub fn without_wall_time(&self) -> Self {
        Self {
            wall_time_ms: 0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
        self.serialize(&mut ser)?;
        Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn csv_cells(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("command".to_string(), self.command.clone()),
            ("seed".to_string(), self.seed.to_string()),
            ("version".to_string(), self.version.clone()),
            ("wall_time_ms".to_string(), self.wall_time_ms.to_string()),
        ];
        for (k, v) in &self.params {
            v.csv_cells(&format!("params.{k}"), &mut out);
        }
        for (k, v) in &self.results {
            v.csv_cells(&format!("results.{k}"), &mut out);
        }
        out
    }
}

/// `{:.16e}`, i.e. 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// One JSON object per line.
pub fn write_json<W: Write>(records: &[ReportRecord], mut out: W) -> Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_json()?)?;
    }
    Ok(())
}

/// Header from the union of all flattened keys (fixed leading columns, then
/// sorted), one row per record; missing cells are empty.
pub fn write_csv<W: Write>(records: &[ReportRecord], out: W) -> Result<()> {
    let rows: Vec<Vec<(String, String)>> = records.iter().map(ReportRecord::csv_cells).collect();
    let fixed = ["command", "seed", "version", "wall_time_ms"];
    let rest: BTreeSet<&str> = rows
        .iter()
        .flatten()
        .map(|(k, _)| k.as_str())
        .filter(|k| !fixed.contains(k))
        .collect();
    let header: Vec<&str> = fixed.iter().copied().chain(rest).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for row in &rows {
        let cells: BTreeMap<&str, &str> =
            row.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        w.write_record(header.iter().map(|h| cells.get(h).copied().unwrap_or("")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit<W: Write>(records: &[ReportRecord], format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => write_json(records, out),
        Format::Csv => write_csv(records, out),
    }
}

/// Parses JSON lines written by [`write_json`].
pub fn read_json(s: &str) -> Result<Vec<ReportRecord>> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(ReportRecord::from_json)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReportRecord {
        let mut r = ReportRecord::new("volume", 3)
            .param("k", 2usize)
            .param("t", 2.0)
            .param("model", "gef");
        r.result("exact", 1.0 + 4f64.ln())
            .result("mc_ci", ReportValue::interval(2.3, 2.4))
            .result("bound_or_na", None::<f64>)
            .result("ok", true)
            .result(
                "values",
                ReportValue::numbers(&[0.1, -3e-300, f64::INFINITY]),
            );
        r
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let s = r.to_json().unwrap();
        assert!(!s.contains('\n'));
        assert_eq!(ReportRecord::from_json(&s).unwrap(), r);
    }

    #[test]
    fn floats_use_seventeen_digits() {
        let mut r = ReportRecord::new("x", 0);
        r.result("v", 0.1);
        assert!(r.to_json().unwrap().contains("1.0000000000000001e-1"));
    }

    #[test]
    fn non_finite_interval_round_trip() {
        let mut r = ReportRecord::new("x", 0);
        r.result(
            "ci",
            ReportValue::interval(f64::NEG_INFINITY, f64::INFINITY),
        );
        let s = r.to_json().unwrap();
        assert!(s.contains("\"-inf\""));
        assert_eq!(ReportRecord::from_json(&s).unwrap(), r);
    }

    #[test]
    fn non_finite_becomes_text() {
        assert_eq!(
            ReportValue::number(f64::NAN),
            ReportValue::Text("nan".into())
        );
        assert_eq!(
            ReportValue::number(f64::NEG_INFINITY),
            ReportValue::Text("-inf".into())
        );
    }

    #[test]
    fn csv_flattens_intervals() {
        let mut buf = Vec::new();
        write_csv(&[sample()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("command,seed,version,wall_time_ms,"));
        assert!(header.contains("results.mc_ci.low") && header.contains("results.mc_ci.high"));
        assert_eq!(text.lines().count(), 2);
    }
}
