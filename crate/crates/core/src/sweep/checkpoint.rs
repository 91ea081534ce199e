//! Append-only checkpoint log.
//!
//! ```text
//! # nlkg sweep checkpoint v1
//! # fingerprint <sha256 of the record-relevant config>
//! <record line>
//! ...
//! #sum <h_k>
//! ```
//!
//! Each flush appends a batch of record lines and one `#sum` line holding
//! `h_k = sha256(h_{k-1} || batch)`, with `h_0 = sha256(header)`. On resume every
//! batch is verified; a trailing batch without its checksum line is a torn write
//! and is dropped, while a checksum mismatch is refused.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::hex;
use super::SweepRecord;
use crate::classify::{Classification, NewtonDiagnostic, Trigger, Verdict};
use crate::datafn::Params;
use crate::groundstate::{PsMembership, PsRegion};
use crate::scheme::NewtonFailure;
use crate::{Error, Result};

const MAGIC: &str = "# nlkg sweep checkpoint v1";
const ERROR_VERDICT: &str = "ERROR";

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    index: usize,
    a: f64,
    b: f64,
    c: f64,
    verdict: String,
    trigger: String,
    decision_time: f64,
    steps_taken: usize,
    initial_norm: f64,
    peak_norm: f64,
    final_norm: f64,
    newton: String,
    error: String,
    energy: Option<f64>,
    j_of_q: Option<f64>,
    k: Option<f64>,
    region: String,
    wall_time: f64,
}

fn newton_str(d: Option<NewtonDiagnostic>) -> &'static str {
    match d {
        None => "",
        Some(NewtonDiagnostic::AmplitudeBound) => "AMPLITUDE_BOUND",
        Some(NewtonDiagnostic::SmallDerivative) => "SMALL_DERIVATIVE",
        Some(NewtonDiagnostic::NonConvergence(NewtonFailure::MaxIterations)) => "MAX_ITERATIONS",
        Some(NewtonDiagnostic::NonConvergence(NewtonFailure::Runaway)) => "RUNAWAY",
        Some(NewtonDiagnostic::NonConvergence(NewtonFailure::NonFinite)) => "NONFINITE",
    }
}

fn parse_newton(s: &str) -> Option<Option<NewtonDiagnostic>> {
    Some(match s {
        "" => None,
        "AMPLITUDE_BOUND" => Some(NewtonDiagnostic::AmplitudeBound),
        "SMALL_DERIVATIVE" => Some(NewtonDiagnostic::SmallDerivative),
        "MAX_ITERATIONS" => Some(NewtonDiagnostic::NonConvergence(NewtonFailure::MaxIterations)),
        "RUNAWAY" => Some(NewtonDiagnostic::NonConvergence(NewtonFailure::Runaway)),
        "NONFINITE" => Some(NewtonDiagnostic::NonConvergence(NewtonFailure::NonFinite)),
        _ => return None,
    })
}

impl Row {
    fn from_record(index: usize, rec: &SweepRecord) -> Self {
        let (verdict, trigger, c, error) = match &rec.classification {
            Ok(c) => (c.verdict.as_str().to_string(), c.trigger.as_str().to_string(), Some(*c), String::new()),
            Err(e) => (ERROR_VERDICT.to_string(), String::new(), None, e.replace(['\n', '\r'], " ")),
        };
        Row {
            index,
            a: rec.a,
            b: rec.b,
            c: rec.c,
            verdict,
            trigger,
            decision_time: c.map_or(0.0, |c| c.decision_time),
            steps_taken: c.map_or(0, |c| c.steps_taken),
            initial_norm: c.map_or(0.0, |c| c.initial_norm),
            peak_norm: c.map_or(0.0, |c| c.peak_norm),
            final_norm: c.map_or(0.0, |c| c.final_norm),
            newton: newton_str(c.and_then(|c| c.newton)).to_string(),
            error,
            energy: rec.ps.map(|p| p.energy),
            j_of_q: rec.ps.map(|p| p.j_of_q),
            k: rec.ps.map(|p| p.k_of_u0),
            region: rec.ps.map(|p| p.region.as_str().to_string()).unwrap_or_default(),
            wall_time: rec.wall_time,
        }
    }

    fn into_record(self) -> std::result::Result<(usize, SweepRecord), String> {
        let classification = if self.verdict == ERROR_VERDICT {
            Err(self.error)
        } else {
            let verdict = Verdict::parse(&self.verdict).ok_or_else(|| format!("bad verdict `{}`", self.verdict))?;
            let trigger = Trigger::parse(&self.trigger).ok_or_else(|| format!("bad trigger `{}`", self.trigger))?;
            if trigger.verdict() != verdict {
                return Err(format!("trigger {trigger} contradicts verdict {verdict}"));
            }
            Ok(Classification {
                verdict,
                trigger,
                decision_time: self.decision_time,
                steps_taken: self.steps_taken,
                initial_norm: self.initial_norm,
                peak_norm: self.peak_norm,
                final_norm: self.final_norm,
                newton: parse_newton(&self.newton).ok_or_else(|| format!("bad Newton tag `{}`", self.newton))?,
            })
        };
        let ps = match (self.energy, self.j_of_q, self.k, self.region.as_str()) {
            (None, None, None, "") => None,
            (Some(energy), Some(j_of_q), Some(k_of_u0), r) => {
                let region = PsRegion::parse(r).ok_or_else(|| format!("bad region `{r}`"))?;
                Some(PsMembership { energy, j_of_q, k_of_u0, region })
            }
            _ => return Err("incomplete PS fields".into()),
        };
        let rec = SweepRecord { a: self.a, b: self.b, c: self.c, classification, ps, wall_time: self.wall_time };
        Ok((self.index, rec))
    }
}

pub(crate) struct Checkpoint {
    path: PathBuf,
    file: File,
    chain: [u8; 32],
    batch: Vec<u8>,
    pending: usize,
    interval: usize,
}

fn header(fingerprint: &str) -> String {
    format!("{MAGIC}\n# fingerprint {fingerprint}\n")
}

fn digest(prev: &[u8], batch: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(prev);
    h.update(batch);
    h.finalize().into()
}

impl Checkpoint {
    /// Opens or creates the log at `path`, returning the records it already holds.
    pub(crate) fn open(
        path: &Path,
        fingerprint: &str,
        points: &[Params],
        interval: usize,
    ) -> Result<(Self, Vec<(usize, SweepRecord)>)> {
        let head = header(fingerprint);
        let h0 = digest(&[], head.as_bytes());
        if !path.exists() {
            let mut file = File::create(path)?;
            file.write_all(head.as_bytes())?;
            file.sync_data()?;
            let log = Self { path: path.to_path_buf(), file, chain: h0, batch: Vec::new(), pending: 0, interval };
            return Ok((log, Vec::new()));
        }

        let mut text = Vec::new();
        File::open(path)?.read_to_end(&mut text)?;
        let (done, chain, valid_len) = verify(path, &text, &head, h0, fingerprint, points)?;
        let file = OpenOptions::new().write(true).open(path)?;
        // drop a torn tail before appending
        file.set_len(valid_len as u64)?;
        drop(file);
        let file = OpenOptions::new().append(true).open(path)?;
        let log = Self { path: path.to_path_buf(), file, chain, batch: Vec::new(), pending: 0, interval };
        Ok((log, done))
    }

    pub(crate) fn append(&mut self, index: usize, rec: &SweepRecord) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(Row::from_record(index, rec))?;
        let line = w.into_inner().map_err(|e| self.err(e.to_string()))?;
        self.batch.extend_from_slice(&line);
        self.pending += 1;
        if self.pending >= self.interval {
            self.flush()?;
        }
        Ok(())
    }

    /// Writes the pending batch and its checksum line in one write and syncs.
    pub(crate) fn flush(&mut self) -> Result<()> {
        if self.batch.is_empty() {
            return Ok(());
        }
        let chain = digest(&self.chain, &self.batch);
        let mut out = std::mem::take(&mut self.batch);
        out.extend_from_slice(format!("#sum {}\n", hex(&chain)).as_bytes());
        self.file.write_all(&out)?;
        self.file.sync_data()?;
        self.chain = chain;
        self.pending = 0;
        Ok(())
    }

    fn err(&self, message: String) -> Error {
        Error::Checkpoint { path: self.path.display().to_string(), message }
    }
}

type Verified = (Vec<(usize, SweepRecord)>, [u8; 32], usize);

fn verify(path: &Path, text: &[u8], head: &str, h0: [u8; 32], fingerprint: &str, points: &[Params]) -> Result<Verified> {
    let fail = |message: String| Error::Checkpoint { path: path.display().to_string(), message };
    let text = std::str::from_utf8(text).map_err(|_| fail("not valid UTF-8".into()))?;
    let mut lines = text.split_inclusive('\n');
    let first = lines.next().unwrap_or("");
    if first.trim_end() != MAGIC {
        return Err(fail("not a sweep checkpoint (bad header line)".into()));
    }
    let second = lines.next().unwrap_or("");
    if second != &head[first.len()..] {
        let found = second.trim_end().strip_prefix("# fingerprint ").unwrap_or("<missing>");
        return Err(fail(format!(
            "written for a different configuration (fingerprint {found}, expected {fingerprint}); \
             remove it or restore the original settings"
        )));
    }

    let mut chain = h0;
    let mut valid_len = first.len() + second.len();
    let mut offset = valid_len;
    let mut batch_start = offset;
    let mut line_no = 2;
    let mut seen = vec![false; points.len()];
    let mut done = Vec::new();
    for line in lines {
        line_no += 1;
        if !line.ends_with('\n') {
            break;
        }
        let start = offset;
        offset += line.len();
        let Some(sum) = line.strip_prefix("#sum ") else {
            continue;
        };
        let batch = &text[batch_start..start];
        let expect = digest(&chain, batch.as_bytes());
        if sum.trim_end() != hex(&expect) {
            return Err(fail(format!("checksum mismatch at line {line_no}; the log is corrupted")));
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(batch.as_bytes());
        for row in rdr.deserialize::<Row>() {
            let row = row.map_err(|e| fail(format!("unreadable record before line {line_no}: {e}")))?;
            let (i, rec) = row.into_record().map_err(|m| fail(format!("record before line {line_no}: {m}")))?;
            let Some(p) = points.get(i) else {
                return Err(fail(format!("record index {i} outside the grid of {} points", points.len())));
            };
            let same = p.a.to_bits() == rec.a.to_bits() && p.b.to_bits() == rec.b.to_bits() && p.c.to_bits() == rec.c.to_bits();
            if !same {
                return Err(fail(format!("record {i} carries parameters that do not match the grid")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(fail(format!("record {i} appears twice")));
            }
            done.push((i, rec));
        }
        chain = expect;
        valid_len = offset;
        batch_start = offset;
    }
    Ok((done, chain, valid_len))
}
