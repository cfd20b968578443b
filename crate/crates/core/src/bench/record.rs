//! Run records and their CSV / JSON-lines encodings.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::BenchError;

/// One `(scenario, seed)` execution. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub method: String,
    pub preset: usize,
    pub ratio: f64,
    pub seed: u64,
    /// `ok` or `failed`.
    pub status: String,
    pub reason: String,
    pub matches_candidate: usize,
    pub matches_gms: usize,
    pub matches_final: usize,
    pub precision: f64,
    pub precision_empty: bool,
    pub recall: f64,
    pub recall_empty: bool,
    pub pseudo_labeled: bool,
    pub iterations_used: usize,
    pub t_extract_ms: f64,
    pub t_describe_ms: f64,
    pub t_match_ms: f64,
    pub t_gms_ms: f64,
    pub t_ransac_ms: f64,
    pub t_total_ms: f64,
    pub hardware: String,
}

pub const STATUS_OK: &str = "ok";
pub const STATUS_FAILED: &str = "failed";

/// Columns whose values depend on the machine rather than the inputs.
pub const VOLATILE_COLUMNS: [&str; 7] = [
    "t_extract_ms",
    "t_describe_ms",
    "t_match_ms",
    "t_gms_ms",
    "t_ransac_ms",
    "t_total_ms",
    "hardware",
];

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    /// Copy with wall-clock and hardware columns cleared.
    pub fn without_timing(&self) -> Self {
        RunRecord {
            t_extract_ms: 0.0,
            t_describe_ms: 0.0,
            t_match_ms: 0.0,
            t_gms_ms: 0.0,
            t_ransac_ms: 0.0,
            t_total_ms: 0.0,
            hardware: String::new(),
            ..self.clone()
        }
    }
}

/// The header line, in column order.
pub fn header() -> Vec<&'static str> {
    vec![
        "scenario",
        "method",
        "preset",
        "ratio",
        "seed",
        "status",
        "reason",
        "matches_candidate",
        "matches_gms",
        "matches_final",
        "precision",
        "precision_empty",
        "recall",
        "recall_empty",
        "pseudo_labeled",
        "iterations_used",
        "t_extract_ms",
        "t_describe_ms",
        "t_match_ms",
        "t_gms_ms",
        "t_ransac_ms",
        "t_total_ms",
        "hardware",
    ]
}

pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header())?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>, BenchError> {
    let mut rd = csv::Reader::from_reader(input);
    let got: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    if got != header() {
        return Err(BenchError::Schema(format!("unexpected header: {}", got.join(","))));
    }
    rd.deserialize().map(|r| r.map_err(BenchError::from)).collect()
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[RunRecord]) -> Result<(), BenchError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<RunRecord>, BenchError> {
    let mut v = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            v.push(serde_json::from_str(&line)?);
        }
    }
    Ok(v)
}
