//! NDJSON metrics streams and fixed-column CSV tables.
//!
//! A stream is a sequence of JSON objects, one per line, each with a `kind`
//! field. A complete stream ends with exactly one `summary` record; a file
//! without it was cut short.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::emhd::DecayRow;
use crate::error::{Error, Result};

pub const SUMMARY_KIND: &str = "summary";

/// Single writer for one metrics stream.
pub struct MetricsWriter<W: Write> {
    out: W,
    records: usize,
}

impl MetricsWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(MetricsWriter::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W) -> Self {
        MetricsWriter { out, records: 0 }
    }

    /// Writes `payload`'s fields under the given `kind`. The payload must
    /// serialize to a JSON object.
    pub fn record(&mut self, kind: &str, payload: &impl Serialize) -> Result<()> {
        if kind == SUMMARY_KIND {
            return Err(Error::InvalidArgument("the summary record is written by finish()".into()));
        }
        self.write_line(kind, payload)
    }

    /// Records written so far, excluding the summary.
    pub fn count(&self) -> usize {
        self.records
    }

    /// Writes the terminating summary record and flushes.
    pub fn finish(mut self, summary: &impl Serialize) -> Result<W> {
        self.write_line(SUMMARY_KIND, summary)?;
        self.records -= 1;
        self.out.flush()?;
        Ok(self.out)
    }

    fn write_line(&mut self, kind: &str, payload: &impl Serialize) -> Result<()> {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(kind.into()));
        match serde_json::to_value(payload)? {
            Value::Object(fields) => obj.extend(fields),
            Value::Null => {}
            other => {
                return Err(Error::InvalidArgument(format!("metrics payload must be an object, got {other}")));
            }
        }
        serde_json::to_writer(&mut self.out, &obj)?;
        self.out.write_all(b"\n")?;
        self.records += 1;
        Ok(())
    }
}

/// Parsed metrics stream.
#[derive(Debug, Clone)]
pub struct MetricsLog {
    pub records: Vec<Value>,
    /// Whether the last record is the summary.
    pub complete: bool,
}

impl MetricsLog {
    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
        self.records.iter().filter(move |r| r["kind"] == kind)
    }

    pub fn summary(&self) -> Option<&Value> {
        if self.complete {
            self.records.last()
        } else {
            None
        }
    }

    pub fn require_complete(&self) -> Result<()> {
        if self.complete {
            Ok(())
        } else {
            Err(Error::InvalidArgument("metrics stream is partial: the summary record is missing".into()))
        }
    }
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<MetricsLog> {
    read_metrics_from(BufReader::new(File::open(path)?))
}

pub fn read_metrics_from(r: impl BufRead) -> Result<MetricsLog> {
    let mut records = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str::<Value>(&line)?);
    }
    let complete = records.last().is_some_and(|r| r["kind"] == SUMMARY_KIND)
        && records.iter().filter(|r| r["kind"] == SUMMARY_KIND).count() == 1;
    Ok(MetricsLog { records, complete })
}

/// One row of the smoothing-probe table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub field: usize,
    pub besov: f64,
    pub gradient: f64,
    pub leray_gradient: f64,
}

impl ProbeRow {
    pub fn from_ratios(rows: &[[f64; 3]]) -> Vec<ProbeRow> {
        rows.iter()
            .enumerate()
            .map(|(field, r)| ProbeRow { field, besov: r[0], gradient: r[1], leray_gradient: r[2] })
            .collect()
    }
}

pub const DECAY_COLUMNS: [&str; 4] = ["t", "sup_norm", "weighted", "running_sup"];
pub const PROBE_COLUMNS: [&str; 4] = ["field", "besov", "gradient", "leray_gradient"];

/// CSV with columns `t, sup_norm, weighted, running_sup`.
pub fn write_decay_csv(out: impl Write, rows: &[DecayRow]) -> Result<()> {
    write_csv(out, &DECAY_COLUMNS, rows)
}

/// CSV with columns `field, besov, gradient, leray_gradient`.
pub fn write_probe_csv(out: impl Write, rows: &[ProbeRow]) -> Result<()> {
    write_csv(out, &PROBE_COLUMNS, rows)
}

fn write_csv<T: Serialize>(out: impl Write, columns: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    // written explicitly so that an empty table still has its header
    w.write_record(columns).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
