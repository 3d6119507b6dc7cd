use super::ScoredItem;
use crate::error::{Error, Result};
use crate::io::verdicts::Judgement;

/// Validation counts at one acceptance threshold.
///
/// Rates are normalised by the counts at threshold zero, i.e. by every judged
/// item, so `hit_rate` is the share of all correct predictions that survive
/// the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub classified: usize,
    pub hits: usize,
    pub hit_rate: f64,
    pub errors: usize,
    pub error_rate: f64,
    /// `hit_rate / error_rate`; undefined when no errors survive.
    pub ratio: Option<f64>,
}

fn rate(count: usize, baseline: usize) -> f64 {
    if baseline == 0 {
        0.0
    } else {
        count as f64 / baseline as f64
    }
}

impl SweepRow {
    pub fn from_counts(
        threshold: f64,
        hits: usize,
        errors: usize,
        base_hits: usize,
        base_errors: usize,
    ) -> Self {
        let hit_rate = rate(hits, base_hits);
        let error_rate = rate(errors, base_errors);
        Self {
            threshold,
            classified: hits + errors,
            hits,
            hit_rate,
            errors,
            error_rate,
            ratio: (error_rate > 0.0).then(|| hit_rate / error_rate),
        }
    }

    pub fn coverage(&self, total: usize) -> f64 {
        rate(self.classified, total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Judged items, i.e. the classified count at threshold zero.
    pub total: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// The row with the best hit/error ratio among those keeping at least
    /// `min_coverage` of the judged items. Ties go to the lower threshold.
    pub fn optimal_threshold(&self, min_coverage: f64) -> Result<&SweepRow> {
        let mut best: Option<&SweepRow> = None;
        for row in &self.rows {
            let Some(ratio) = row.ratio else { continue };
            if row.coverage(self.total) < min_coverage {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    let br = b.ratio.expect("only rows with a ratio are kept");
                    ratio > br || (ratio == br && row.threshold < b.threshold)
                }
            };
            if better {
                best = Some(row);
            }
        }
        best.ok_or(Error::NoEligibleRow)
    }
}

/// `0.0, 0.1, …, 1.0`.
pub fn decile_thresholds() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Hit/error counts and baseline-normalised rates at each threshold. Skipped
/// items are left out; an item without any verdict is an error.
pub fn threshold_sweep(items: &[ScoredItem], thresholds: &[f64]) -> Result<SweepTable> {
    let unlabeled: Vec<&ScoredItem> = items.iter().filter(|i| i.judgement.is_none()).collect();
    if let Some(first) = unlabeled.first() {
        return Err(Error::MissingVerdict {
            count: unlabeled.len(),
            first: first.id.clone(),
        });
    }
    if thresholds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let judged: Vec<(f64, bool)> = items
        .iter()
        .filter_map(|i| match i.judgement {
            Some(Judgement::Hit) => Some((i.max_prob, true)),
            Some(Judgement::Miss) => Some((i.max_prob, false)),
            _ => None,
        })
        .collect();
    if judged.is_empty() {
        return Err(Error::EmptyInput);
    }
    let base_hits = judged.iter().filter(|(_, hit)| *hit).count();
    let base_errors = judged.len() - base_hits;
    let rows = thresholds
        .iter()
        .map(|&t| {
            let (mut hits, mut errors) = (0, 0);
            for &(p, hit) in &judged {
                if p >= t {
                    if hit {
                        hits += 1;
                    } else {
                        errors += 1;
                    }
                }
            }
            SweepRow::from_counts(t, hits, errors, base_hits, base_errors)
        })
        .collect();
    Ok(SweepTable {
        total: judged.len(),
        rows,
    })
}
