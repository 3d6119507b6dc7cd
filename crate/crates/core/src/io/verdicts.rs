use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judgement {
    Hit,
    Miss,
    Skip,
}

/// An annotator's judgement of one sampled prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub predicted_label: String,
    pub verdict: Judgement,
    pub annotator: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: u64,
}

pub fn now_utc_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Reads a verdict log, rejecting a second hit/miss from the same annotator
/// for the same item.
pub fn read_verdicts(path: impl AsRef<Path>) -> Result<Vec<Verdict>> {
    let records = super::read_jsonl::<Verdict>(path.as_ref())?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (_, v) in records {
        if v.verdict != Judgement::Skip && !seen.insert((v.id.clone(), v.annotator.clone())) {
            return Err(Error::InvariantViolation {
                id: v.id,
                reason: format!("second hit/miss verdict from annotator {:?}", v.annotator),
            });
        }
        out.push(v);
    }
    Ok(out)
}

/// Like [`read_verdicts`], but a missing file is an empty log.
pub fn read_verdicts_or_empty(path: impl AsRef<Path>) -> Result<Vec<Verdict>> {
    match read_verdicts(path) {
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => {
            Ok(Vec::new())
        }
        other => other,
    }
}

/// Appends one verdict and fsyncs before returning.
pub fn append_verdict(verdict: &Verdict, path: impl AsRef<Path>) -> Result<()> {
    super::append_jsonl(path.as_ref(), std::slice::from_ref(verdict), true)
}

/// Collapses a log to one judgement per item: the latest hit/miss wins, and
/// an item that only ever received skips resolves to `Skip`.
pub fn resolve_verdicts(verdicts: &[Verdict]) -> HashMap<&str, Judgement> {
    let mut out: HashMap<&str, Judgement> = HashMap::new();
    for v in verdicts {
        match (out.get(v.id.as_str()), v.verdict) {
            (Some(Judgement::Hit | Judgement::Miss), Judgement::Skip) => {}
            _ => {
                out.insert(&v.id, v.verdict);
            }
        }
    }
    out
}
