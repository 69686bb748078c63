//! Report emission: full JSON, one CSV line per row, and long-format CSV for plotting.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ClaimReport;
use crate::error::{contract, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    /// One `(row, quantity, value)` triple per line.
    Long,
}

impl FromStr for ReportFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "long" => Ok(ReportFormat::Long),
            _ => Err(contract(format!("unknown report format {s:?} (json, csv, long)"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Long => "long.csv",
        }
    }
}

/// Write `report` to `path` in `format`.
pub fn emit(report: &ClaimReport, format: ReportFormat, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_report(report, format, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_report<W: Write>(report: &ClaimReport, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            writeln!(out, "# schema_version={} claim_id={} verdict={}", report.schema_version, report.claim_id, report.verdict)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["claim_id", "series", "dim", "rep", "seed", "value", "se", "error"])?;
            for r in &report.rows {
                w.write_record([
                    report.claim_id.as_str(),
                    &r.series,
                    &r.dim.to_string(),
                    &r.rep.to_string(),
                    &r.seed.to_string(),
                    &format!("{:e}", r.value),
                    &format!("{:e}", r.se),
                    r.error.as_deref().unwrap_or(""),
                ])?;
            }
            w.flush()?;
        }
        ReportFormat::Long => {
            writeln!(out, "# schema_version={} claim_id={}", report.schema_version, report.claim_id)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["claim_id", "series", "dim", "rep", "seed", "quantity", "value"])?;
            for r in &report.rows {
                if r.error.is_some() {
                    continue;
                }
                let quantities = [("value", r.value), ("se", r.se)].into_iter().chain(r.extra.iter().map(|(k, v)| (k.as_str(), *v)));
                for (q, v) in quantities {
                    w.write_record([
                        report.claim_id.as_str(),
                        &r.series,
                        &r.dim.to_string(),
                        &r.rep.to_string(),
                        &r.seed.to_string(),
                        q,
                        &format!("{v:e}"),
                    ])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Read a JSON report back.
pub fn read_report(path: &Path) -> Result<ClaimReport> {
    let r: ClaimReport = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if r.schema_version != SCHEMA_VERSION {
        return Err(contract(format!("report schema version {} is not {}", r.schema_version, SCHEMA_VERSION)));
    }
    Ok(r)
}
