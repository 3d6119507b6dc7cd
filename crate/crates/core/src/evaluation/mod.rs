//! Measurement over classified corpora and their human-validated samples.

mod frequency;
mod sampling;
mod stats;
mod sweep;

pub use frequency::{coverage_curve, coverage_from_decisions, frequency_report};
pub use sampling::{
    read_sample_plan, stratified_sample, write_sample_plan, SampleItem, SamplePlan, SampleWarning,
};
pub use stats::{mean_top_prob_stats, per_class_accuracy, ClassAccuracy, ClassAccuracyReport};
pub use sweep::{decile_thresholds, threshold_sweep, SweepRow, SweepTable};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::io::decisions::DecisionRecord;
use crate::io::verdicts::{resolve_verdicts, Judgement, Verdict};

/// A sampled prediction joined with its top probability and, once an
/// annotator has seen it, its judgement.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredItem {
    pub id: String,
    pub predicted_label: String,
    pub max_prob: f64,
    pub judgement: Option<Judgement>,
}

/// Joins a sample plan with the decisions it was drawn from and the verdict
/// log. Every planned id must have a decision.
pub fn join_sample(
    plan: &SamplePlan,
    decisions: &[DecisionRecord],
    verdicts: &[Verdict],
) -> Result<Vec<ScoredItem>> {
    let by_id: HashMap<&str, &DecisionRecord> =
        decisions.iter().map(|d| (d.id.as_str(), d)).collect();
    let resolved = resolve_verdicts(verdicts);
    plan.items
        .iter()
        .map(|item| {
            let d = by_id
                .get(item.id.as_str())
                .ok_or_else(|| Error::InvariantViolation {
                    id: item.id.clone(),
                    reason: "sampled id has no decision".into(),
                })?;
            Ok(ScoredItem {
                id: item.id.clone(),
                predicted_label: item.predicted_label.clone(),
                max_prob: d.max_prob(),
                judgement: resolved.get(item.id.as_str()).copied(),
            })
        })
        .collect()
}
