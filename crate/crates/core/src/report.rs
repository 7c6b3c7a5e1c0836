//! CSV and JSON reports.
//!
//! Both formats carry the same long-format rows. With `per_round` each row
//! is one round of one trial; otherwise each row sums a whole trial, with
//! `round` holding the number of rounds used, `N`/`n` taken from the first
//! round and `k_active` the initial population.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::ExperimentResult;
use crate::model::Protocol;

pub const CSV_COLUMNS: [&str; 12] = [
    "trial",
    "round",
    "protocol",
    "N",
    "n",
    "k_active",
    "idle",
    "reserved_true",
    "detected_collisions",
    "undetected_collisions",
    "identified",
    "round_time_us",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub trial: u32,
    pub round: u32,
    pub protocol: Protocol,
    #[serde(rename = "N")]
    pub slots: u32,
    #[serde(rename = "n")]
    pub seq_bits: u8,
    pub k_active: u32,
    pub idle: u64,
    pub reserved_true: u64,
    pub detected_collisions: u64,
    pub undetected_collisions: u64,
    pub identified: u64,
    pub round_time_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn report_rows(result: &ExperimentResult, per_round: bool) -> Vec<ReportRow> {
    let protocol = result.config.protocol;
    let mut rows = Vec::new();
    for trial in &result.per_trial {
        if per_round {
            rows.extend(trial.rounds.iter().map(|r| ReportRow {
                trial: trial.trial_id,
                round: r.round,
                protocol,
                slots: r.slots,
                seq_bits: r.seq_bits,
                k_active: r.k_active,
                idle: r.idle.into(),
                reserved_true: r.reserved_true.into(),
                detected_collisions: r.detected_collisions.into(),
                undetected_collisions: r.undetected_collisions.into(),
                identified: r.identified.into(),
                round_time_us: r.round_time_us,
            }));
        } else {
            let first = trial.rounds.first();
            let sum = |f: fn(&crate::engine::RoundSummary) -> u32| -> u64 {
                trial.rounds.iter().map(|r| u64::from(f(r))).sum()
            };
            rows.push(ReportRow {
                trial: trial.trial_id,
                round: trial.rounds_used,
                protocol,
                slots: first.map_or(result.config.frame_slots, |r| r.slots),
                seq_bits: first.map_or(0, |r| r.seq_bits),
                k_active: result.config.k_initial,
                idle: sum(|r| r.idle),
                reserved_true: sum(|r| r.reserved_true),
                detected_collisions: sum(|r| r.detected_collisions),
                undetected_collisions: sum(|r| r.undetected_collisions),
                identified: u64::from(trial.tags_identified),
                round_time_us: trial.total_time_us,
            });
        }
    }
    rows
}

/// Writes rows in the given format. The CSV header is always written.
pub fn write_rows<W: Write>(rows: &[ReportRow], format: ReportFormat, out: W) -> io::Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
            out.flush()
        }
    }
}

pub fn render(rows: &[ReportRow], format: ReportFormat) -> String {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("reports are UTF-8")
}

pub fn parse_json(text: &str) -> serde_json::Result<Vec<ReportRow>> {
    serde_json::from_str(text)
}

pub fn parse_csv(text: &str) -> csv::Result<Vec<ReportRow>> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

#[derive(Debug, Error)]
#[error("cannot write report to {destination}: {source}")]
pub struct ReportError {
    pub destination: String,
    #[source]
    pub source: io::Error,
}

/// Writes to `destination`, or standard output when `None`.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat, destination: Option<&Path>) -> Result<(), ReportError> {
    match destination {
        Some(path) => {
            let wrap = |source| ReportError {
                destination: path.display().to_string(),
                source,
            };
            let file = File::create(path).map_err(wrap)?;
            write_rows(rows, format, BufWriter::new(file)).map_err(wrap)
        }
        None => {
            let stdout = io::stdout();
            write_rows(rows, format, stdout.lock()).map_err(|source| ReportError {
                destination: "standard output".into(),
                source,
            })
        }
    }
}
