use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::io::decisions::DecisionRecord;

/// Counts of the top label over all decisions, most frequent first; equal
/// counts are ordered by label.
pub fn frequency_report(decisions: &[DecisionRecord]) -> Result<Vec<(String, usize)>> {
    if decisions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for d in decisions {
        *counts.entry(d.top_label()).or_default() += 1;
    }
    let mut out: Vec<(String, usize)> =
        counts.into_iter().map(|(l, c)| (l.to_owned(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Fraction of items whose top probability reaches each threshold.
pub fn coverage_curve(max_probs: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if max_probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = max_probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let below = sorted.partition_point(|&p| p < t);
            (t, (sorted.len() - below) as f64 / n)
        })
        .collect())
}

pub fn coverage_from_decisions(
    decisions: &[DecisionRecord],
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let probs: Vec<f64> = decisions.iter().map(DecisionRecord::max_prob).collect();
    coverage_curve(&probs, thresholds)
}
