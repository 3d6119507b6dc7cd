use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    #[default]
    Unsplit,
}

/// One image/caption pair of the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: String,
    /// Caption text; empty when the post had none.
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub split: Split,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let records = super::read_jsonl::<ManifestEntry>(path.as_ref())?;
    validate(records)
}

fn validate(records: Vec<(usize, ManifestEntry)>) -> Result<Vec<ManifestEntry>> {
    let mut seen = HashSet::with_capacity(records.len());
    let mut out = Vec::with_capacity(records.len());
    for (line, e) in records {
        if e.id.is_empty() {
            return Err(Error::MalformedLine {
                line,
                reason: "empty id".into(),
            });
        }
        if e.image_path.is_empty() {
            return Err(Error::MalformedLine {
                line,
                reason: "empty image_path".into(),
            });
        }
        if !seen.insert(e.id.clone()) {
            return Err(Error::DuplicateId(e.id));
        }
        out.push(e);
    }
    Ok(out)
}

pub fn write_manifest(entries: &[ManifestEntry], path: impl AsRef<Path>) -> Result<()> {
    super::write_jsonl(path.as_ref(), entries)
}
