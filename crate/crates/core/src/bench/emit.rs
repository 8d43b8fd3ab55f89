//! Result files: per-epoch records as CSV or JSON plus a mean-over-trials summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{Method, ResultRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "trial,epoch,method,train_loss,test_loss,truncation_rate,wall_time_ms";
const SUMMARY_HEADER: &str = "method,epoch,trials,train_loss,test_loss,truncation_rate,wall_time_ms";
const SIGNIFICANT_DIGITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidParameter(format!("unknown output format '{other}'"))),
        }
    }
}

/// Formats like C's `%.{digits}g`: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros trimmed.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("valid exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn rounded(x: f64) -> f64 {
    format_significant(x, SIGNIFICANT_DIGITS)
        .parse()
        .expect("formatted float parses")
}

fn csv_row(r: &ResultRecord) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.trial,
        r.epoch,
        r.method,
        format_significant(r.train_loss, SIGNIFICANT_DIGITS),
        format_significant(r.test_loss, SIGNIFICANT_DIGITS),
        format_significant(r.truncation_rate, SIGNIFICANT_DIGITS),
        r.wall_time_ms
    )
}

pub fn to_csv(records: &[ResultRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// JSON array of records with the same fields and rounding as the CSV.
pub fn to_json(records: &[ResultRecord]) -> Result<String> {
    let rounded: Vec<ResultRecord> = records
        .iter()
        .map(|r| ResultRecord {
            train_loss: rounded(r.train_loss),
            test_loss: rounded(r.test_loss),
            truncation_rate: rounded(r.truncation_rate),
            ..r.clone()
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rounded)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Data {
            row: 1,
            message: format!("unexpected header '{}'", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let field = |j: usize| row.get(j).unwrap_or("");
        let bad = |what: &str| Error::Data {
            row: line,
            message: format!("invalid {what}"),
        };
        out.push(ResultRecord {
            trial: field(0).parse().map_err(|_| bad("trial"))?,
            epoch: field(1).parse().map_err(|_| bad("epoch"))?,
            method: field(2).parse::<Method>().map_err(|_| bad("method"))?,
            train_loss: field(3).parse().map_err(|_| bad("train_loss"))?,
            test_loss: field(4).parse().map_err(|_| bad("test_loss"))?,
            truncation_rate: field(5).parse().map_err(|_| bad("truncation_rate"))?,
            wall_time_ms: field(6).parse().map_err(|_| bad("wall_time_ms"))?,
        });
    }
    Ok(out)
}

pub fn parse_json(text: &str) -> Result<Vec<ResultRecord>> {
    Ok(serde_json::from_str(text)?)
}

/// Mean over trials for one (method, epoch) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub epoch: usize,
    pub trials: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub truncation_rate: f64,
    pub wall_time_ms: f64,
}

/// Rows ordered by method (in order of first appearance), then epoch.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut method_order: Vec<Method> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        let idx = match method_order.iter().position(|m| *m == r.method) {
            Some(i) => i,
            None => {
                method_order.push(r.method);
                method_order.len() - 1
            }
        };
        groups.entry((idx, r.epoch)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((idx, epoch), rs)| {
            let n = rs.len() as f64;
            let mean = |f: &dyn Fn(&ResultRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            SummaryRow {
                method: method_order[idx],
                epoch,
                trials: rs.len(),
                train_loss: mean(&|r| r.train_loss),
                test_loss: mean(&|r| r.test_loss),
                truncation_rate: mean(&|r| r.truncation_rate),
                wall_time_ms: mean(&|r| r.wall_time_ms as f64),
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.epoch,
            r.trials,
            format_significant(r.train_loss, SIGNIFICANT_DIGITS),
            format_significant(r.test_loss, SIGNIFICANT_DIGITS),
            format_significant(r.truncation_rate, SIGNIFICANT_DIGITS),
            format_significant(r.wall_time_ms, SIGNIFICANT_DIGITS),
        ));
    }
    out
}

/// Path of the summary written next to `path`: `results.csv` → `results.summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.summary.csv"))
}

/// Writes the records to `path` and the summary alongside; returns the summary path.
pub fn emit_results(records: &[ResultRecord], format: Format, path: &Path) -> Result<PathBuf> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no records to write".into()));
    }
    let body = match format {
        Format::Csv => to_csv(records),
        Format::Json => to_json(records)?,
    };
    fs::write(path, body)?;
    let summary = summary_path(path);
    fs::write(&summary, summary_csv(&summarize(records)))?;
    Ok(summary)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => parse_json(&text),
        _ => parse_csv(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(trial: usize, epoch: usize, method: Method, loss: f64) -> ResultRecord {
        ResultRecord {
            trial,
            epoch,
            method,
            train_loss: loss,
            test_loss: loss * 1.1,
            truncation_rate: 0.0,
            wall_time_ms: 0,
        }
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(std::f64::consts::LN_2, 10), "0.6931471806");
        assert_eq!(format_significant(1.0, 10), "1");
        assert_eq!(format_significant(0.0, 10), "0");
        assert_eq!(format_significant(123456.789, 10), "123456.789");
        assert_eq!(format_significant(1.5e-7, 10), "1.5e-7");
        assert_eq!(format_significant(2.5e12, 10), "2.5e12");
        assert_eq!(format_significant(-0.25, 10), "-0.25");
    }

    #[test]
    fn single_record_csv() {
        let csv = to_csv(&[record(0, 1, Method::SgdAve, 0.5)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, vec![CSV_HEADER, "0,1,sgd-ave,0.5,0.55,0,0"]);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let records = vec![
            record(0, 1, Method::AnytimeRobustSgd, 0.123456789012345),
            record(1, 2, Method::SgdAve, 1.0 / 3.0),
        ];
        let back = parse_csv(&to_csv(&records)).unwrap();
        let json_back = parse_json(&to_json(&records).unwrap()).unwrap();
        assert_eq!(back, json_back);
        for (a, b) in back.iter().zip(&records) {
            assert!((a.train_loss - b.train_loss).abs() <= 5e-10 * b.train_loss.abs());
            assert_eq!((a.trial, a.epoch, a.method), (b.trial, b.epoch, b.method));
        }
        // a second pass is exact
        assert_eq!(parse_csv(&to_csv(&back)).unwrap(), back);
    }

    #[test]
    fn summary_has_one_row_per_method_epoch() {
        let mut records = Vec::new();
        for trial in 0..3 {
            for method in [Method::SgdAve, Method::AnytimeSgd] {
                for epoch in 1..=2 {
                    records.push(record(trial, epoch, method, trial as f64 + epoch as f64));
                }
            }
        }
        let rows = summarize(&records);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].method, Method::SgdAve);
        assert_eq!(rows[0].trials, 3);
        assert!((rows[0].train_loss - 2.0).abs() < 1e-15);
    }

    #[test]
    fn emit_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let summary = emit_results(&[record(0, 1, Method::AnytimeSgd, 0.7)], Format::Csv, &path).unwrap();
        assert_eq!(summary, dir.path().join("results.summary.csv"));
        assert_eq!(read_results(&path).unwrap().len(), 1);
        assert!(emit_results(&[], Format::Csv, &path).is_err());
    }
}
