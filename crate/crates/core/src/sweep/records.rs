//! Records file: one CSV row per grid point.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SweepRecord;
use crate::classify::{Trigger, Verdict};
use crate::groundstate::PsRegion;
use crate::{Error, Result};

pub const RECORD_HEADER: &str = "a,b,c,verdict,trigger,decision_time,peak_norm,ps_region,energy,K";

/// Row of the records file. Points whose datum failed carry `verdict = ERROR`
/// and empty diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub verdict: String,
    pub trigger: String,
    pub decision_time: Option<f64>,
    pub peak_norm: Option<f64>,
    pub ps_region: String,
    pub energy: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
}

impl RecordRow {
    pub fn verdict(&self) -> Option<Verdict> {
        Verdict::parse(&self.verdict)
    }

    pub fn ps_region(&self) -> Option<PsRegion> {
        PsRegion::parse(&self.ps_region)
    }

    fn check(&self, line: u64) -> Result<()> {
        let bad = |what: &str, v: &str| Error::Input(format!("records line {line}: unknown {what} `{v}`"));
        if self.verdict != "ERROR" {
            let verdict = self.verdict().ok_or_else(|| bad("verdict", &self.verdict))?;
            let trigger = Trigger::parse(&self.trigger).ok_or_else(|| bad("trigger", &self.trigger))?;
            if trigger.verdict() != verdict {
                return Err(Error::Input(format!("records line {line}: trigger {trigger} contradicts verdict {verdict}")));
            }
        }
        if !self.ps_region.is_empty() && self.ps_region().is_none() {
            return Err(bad("PS region", &self.ps_region));
        }
        Ok(())
    }
}

impl From<&SweepRecord> for RecordRow {
    fn from(rec: &SweepRecord) -> Self {
        let (verdict, trigger, decision_time, peak_norm) = match &rec.classification {
            Ok(c) => (c.verdict.as_str(), c.trigger.as_str(), Some(c.decision_time), Some(c.peak_norm)),
            Err(_) => ("ERROR", "", None, None),
        };
        RecordRow {
            a: rec.a,
            b: rec.b,
            c: rec.c,
            verdict: verdict.to_string(),
            trigger: trigger.to_string(),
            decision_time,
            peak_norm,
            ps_region: rec.ps.map(|p| p.region.as_str().to_string()).unwrap_or_default(),
            energy: rec.ps.map(|p| p.energy),
            k: rec.ps.map(|p| p.k_of_u0),
        }
    }
}

pub fn write_records_csv<'a>(rows: impl IntoIterator<Item = &'a RecordRow>, path: &Path) -> Result<()> {
    write_records(rows, std::fs::File::create(path)?, None)
}

/// Writes the records, preceded by `# note` when a note is given. Readers skip
/// `#` lines.
pub fn write_records<'a, W: std::io::Write>(
    rows: impl IntoIterator<Item = &'a RecordRow>,
    mut out: W,
    note: Option<&str>,
) -> Result<()> {
    if let Some(note) = note {
        writeln!(out, "# {note}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut empty = true;
    for row in rows {
        w.serialize(row)?;
        empty = false;
    }
    if empty {
        w.write_record(RECORD_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<RecordRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RECORD_HEADER {
        return Err(Error::Input(format!(
            "{}: expected header `{RECORD_HEADER}`, found `{}`",
            path.display(),
            header.join(",")
        )));
    }
    let headers = rdr.headers()?.clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: RecordRow = rec.deserialize(Some(&headers))?;
        row.check(line)?;
        rows.push(row);
    }
    Ok(rows)
}
