//! On-disk formats: manifests, embedding files, decision and verdict logs.
//!
//! Everything except embeddings is UTF-8 JSON, one record per line.

pub mod decisions;
pub mod embeddings;
pub mod manifest;
pub mod verdicts;

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parses every non-blank line, tagging each record with its 1-based line
/// number.
pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_jsonl(&text)
}

pub(crate) fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

fn encode_lines<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("records serialize to JSON");
        buf.push(b'\n');
    }
    buf
}

/// Replaces `path` with the given records.
pub(crate) fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).expect("records serialize to JSON");
        w.write_all(b"\n").map_err(Error::io(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Appends records to `path` with a single write, creating the file if needed.
/// With `durable` set the data is fsynced before returning.
pub(crate) fn append_jsonl<T: Serialize>(path: &Path, records: &[T], durable: bool) -> Result<()> {
    let buf = encode_lines(records);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(Error::io(path))?;
    f.write_all(&buf).map_err(Error::io(path))?;
    if durable {
        f.sync_data().map_err(Error::io(path))?;
    }
    Ok(())
}
