use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which distribution a decision was taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    Image,
    Weighted,
    Conditional,
}

impl DecisionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Image => "image",
            Self::Weighted => "weighted",
            Self::Conditional => "conditional",
        }
    }
}

/// The thresholded outcome for one corpus item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub id: String,
    pub mode: DecisionMode,
    pub threshold: f64,
    /// Most probable classes as `(raw_name, probability)`, highest first.
    pub top: Vec<(String, f64)>,
    pub accepted: bool,
    /// Ensemble runs only: whether the caption contributed to `top`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub used_text: Option<bool>,
}

impl DecisionRecord {
    pub fn top_label(&self) -> &str {
        &self.top[0].0
    }

    pub fn max_prob(&self) -> f64 {
        self.top[0].1
    }

    pub fn validate(&self) -> Result<()> {
        let violation = |reason: String| Error::InvariantViolation {
            id: self.id.clone(),
            reason,
        };
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(violation(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        let Some((_, first)) = self.top.first() else {
            return Err(violation("empty top list".into()));
        };
        if let Some((label, p)) = self.top.iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
            return Err(violation(format!(
                "probability {p} for {label:?} outside [0, 1]"
            )));
        }
        if self.top.windows(2).any(|w| w[0].1 < w[1].1) {
            return Err(violation("top probabilities are not descending".into()));
        }
        if self.accepted != (*first >= self.threshold) {
            return Err(violation(format!(
                "accepted = {} but top probability {first} vs threshold {}",
                self.accepted, self.threshold
            )));
        }
        Ok(())
    }
}

/// Reads and validates a decision file. A missing trailing newline is fine;
/// blank lines are skipped.
pub fn read_decisions(path: impl AsRef<Path>) -> Result<Vec<DecisionRecord>> {
    let records = super::read_jsonl::<DecisionRecord>(path.as_ref())?;
    records
        .into_iter()
        .map(|(_, r)| r.validate().map(|_| r))
        .collect()
}

pub fn append_decisions(records: &[DecisionRecord], path: impl AsRef<Path>) -> Result<()> {
    super::append_jsonl(path.as_ref(), records, false)
}

/// Replaces the decision file.
pub fn write_decisions(records: &[DecisionRecord], path: impl AsRef<Path>) -> Result<()> {
    super::write_jsonl(path.as_ref(), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, p: f64, accepted: bool) -> DecisionRecord {
        DecisionRecord {
            id: id.into(),
            mode: DecisionMode::Image,
            threshold: 0.5,
            top: vec![("bridge".into(), p), ("bar".into(), 1.0 - p)],
            accepted,
            used_text: None,
        }
    }

    #[test]
    fn append_preserves_prior_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let first: Vec<_> = (0..3).map(|i| rec(&format!("a{i}"), 0.9, true)).collect();
        let second: Vec<_> = (3..5).map(|i| rec(&format!("a{i}"), 0.6, true)).collect();
        append_decisions(&first, &path).unwrap();
        append_decisions(&second, &path).unwrap();
        let back = read_decisions(&path).unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back[..3], first[..]);
        assert_eq!(back[3..], second[..]);
    }

    #[test]
    fn accepted_flag_must_match_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let mut bad = rec("x", 0.4, true);
        bad.top = vec![
            ("bridge".into(), 0.4),
            ("bar".into(), 0.3),
            ("pub".into(), 0.3),
        ];
        append_decisions(&[bad], &path).unwrap();
        assert!(
            matches!(read_decisions(&path), Err(Error::InvariantViolation { id, .. }) if id == "x")
        );
    }

    #[test]
    fn empty_file_reads_empty() {
        let f = tempfile::NamedTempFile::new().unwrap();
        assert!(read_decisions(f.path()).unwrap().is_empty());
    }

    #[test]
    fn field_names_on_the_wire() {
        let line = serde_json::to_string(&rec("a", 0.75, true)).unwrap();
        assert_eq!(
            line,
            r#"{"id":"a","mode":"image","threshold":0.5,"top":[["bridge",0.75],["bar",0.25]],"accepted":true}"#
        );
    }

    #[test]
    fn malformed_line_number() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let good = serde_json::to_string(&rec("a", 0.75, true)).unwrap();
        std::fs::write(f.path(), format!("{good}\n{{\"id\":\"b\"\n")).unwrap();
        assert!(matches!(
            read_decisions(f.path()),
            Err(Error::MalformedLine { line: 2, .. })
        ));
    }
}
