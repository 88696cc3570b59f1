//! CSV and JSON emission.
//!
//! Trace CSV columns: `setting,algorithm,K,epsilon,T,seed,t,cum_regret`.
//! Summary CSV columns: `setting,algorithm,K,epsilon,T,runs,t,mean_cum_regret,stderr_cum_regret`.
//! Files are UTF-8 with LF line endings and always carry a header row.
//! Real values are written rounded to 10 significant digits.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bandit::Algorithm;
use crate::env::Setting;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 8] = [
    "setting",
    "algorithm",
    "K",
    "epsilon",
    "T",
    "seed",
    "t",
    "cum_regret",
];
pub const SUMMARY_HEADER: [&str; 9] = [
    "setting",
    "algorithm",
    "K",
    "epsilon",
    "T",
    "runs",
    "t",
    "mean_cum_regret",
    "stderr_cum_regret",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub setting: Setting,
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub k: usize,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seed: u64,
    pub t: u64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting: Setting,
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub k: usize,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub runs: usize,
    pub t: u64,
    pub mean_cum_regret: f64,
    pub stderr_cum_regret: f64,
}

/// `x` rounded to 10 significant digits, printed in the shortest decimal form.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer cannot fail");
    String::from_utf8(bytes).expect("CSV output is UTF-8")
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut w = writer();
    w.write_record(TRACE_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.setting.to_string(),
            r.algorithm.to_string(),
            r.k.to_string(),
            format_sig10(r.epsilon),
            r.horizon.to_string(),
            r.seed.to_string(),
            r.t.to_string(),
            format_sig10(r.cum_regret),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = writer();
    w.write_record(SUMMARY_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.setting.to_string(),
            r.algorithm.to_string(),
            r.k.to_string(),
            format_sig10(r.epsilon),
            r.horizon.to_string(),
            r.runs.to_string(),
            r.t.to_string(),
            format_sig10(r.mean_cum_regret),
            format_sig10(r.stderr_cum_regret),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

fn parse_rows<T: for<'de> Deserialize<'de>>(text: &str, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| Error::Input(e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Input(format!("unexpected CSV header {found:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Input(e.to_string())))
        .collect()
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    parse_rows(text, &TRACE_HEADER)
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    parse_rows(text, &SUMMARY_HEADER)
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
