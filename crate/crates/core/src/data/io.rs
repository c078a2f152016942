//! JSON-lines persistence, one record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::sequence::{DaySequence, RecoverySample, SampleRecord};
use crate::error::{Error, Result};

pub fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records; blank lines are skipped, malformed lines fail with their
/// 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_sequences(path: &Path, days: &[DaySequence]) -> Result<()> {
    write_jsonl(path, days)
}

pub fn read_sequences(path: &Path) -> Result<Vec<DaySequence>> {
    read_jsonl(path)
}

pub fn write_samples(path: &Path, samples: &[RecoverySample]) -> Result<()> {
    write_jsonl(path, samples.iter().map(SampleRecord::from))
}

pub fn read_samples(path: &Path) -> Result<Vec<RecoverySample>> {
    let records: Vec<SampleRecord> = read_jsonl(path)?;
    records.into_iter().map(RecoverySample::try_from).collect()
}
