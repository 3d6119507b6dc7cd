#![allow(dead_code)]

use zeroshot::evaluation::ScoredItem;
use zeroshot::io::decisions::{DecisionMode, DecisionRecord};
use zeroshot::io::verdicts::{Judgement, Verdict};

/// Reference sweep: (threshold, hits, errors) at each decile threshold.
pub const REFERENCE_SWEEP_COUNTS: [(f64, usize, usize); 11] = [
    (0.0, 460, 540),
    (0.1, 460, 539),
    (0.2, 455, 512),
    (0.3, 442, 445),
    (0.4, 396, 376),
    (0.5, 335, 309),
    (0.6, 270, 237),
    (0.7, 194, 177),
    (0.8, 137, 127),
    (0.9, 89, 69),
    (1.0, 0, 0),
];

/// Reference rates as printed: (threshold, hit_rate, error_rate, ratio).
pub const REFERENCE_SWEEP_RATES: [(f64, f64, f64, f64); 9] = [
    (0.1, 1.0, 0.9981, 1.0018),
    (0.2, 0.9891, 0.9481, 1.0432),
    (0.3, 0.9608, 0.8240, 1.1659),
    (0.4, 0.8608, 0.6962, 1.2363),
    (0.5, 0.7282, 0.5722, 1.2726),
    (0.6, 0.5869, 0.4388, 1.3373),
    (0.7, 0.4217, 0.3277, 1.2866),
    (0.8, 0.2978, 0.2351, 1.2663),
    (0.9, 0.1934, 0.1277, 1.5141),
];

/// Reviewed items whose cumulative counts reproduce [`REFERENCE_SWEEP_COUNTS`]: each
/// decile band gets the difference between neighbouring rows, placed at the
/// band's midpoint. Returned as (max_prob, is_hit).
pub fn reference_sweep_raw() -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    for w in REFERENCE_SWEEP_COUNTS.windows(2) {
        let ((t, h0, e0), (_, h1, e1)) = (w[0], w[1]);
        let p = t + 0.05;
        out.extend(std::iter::repeat_n((p, true), h0 - h1));
        out.extend(std::iter::repeat_n((p, false), e0 - e1));
    }
    out
}

pub fn reference_sweep_items() -> Vec<ScoredItem> {
    reference_sweep_raw()
        .into_iter()
        .enumerate()
        .map(|(i, (p, hit))| ScoredItem {
            id: format!("img{i:04}"),
            predicted_label: format!("class{}", i % 10),
            max_prob: p,
            judgement: Some(if hit { Judgement::Hit } else { Judgement::Miss }),
        })
        .collect()
}

/// The same fixture as on-disk records: one decision and one verdict per item.
pub fn reference_sweep_records() -> (Vec<DecisionRecord>, Vec<Verdict>) {
    let items = reference_sweep_items();
    let decisions = items
        .iter()
        .map(|i| DecisionRecord {
            id: i.id.clone(),
            mode: DecisionMode::Image,
            threshold: 0.0,
            top: vec![(i.predicted_label.clone(), i.max_prob)],
            accepted: true,
            used_text: None,
        })
        .collect();
    let verdicts = items
        .iter()
        .map(|i| Verdict {
            id: i.id.clone(),
            predicted_label: i.predicted_label.clone(),
            verdict: i.judgement.unwrap(),
            annotator: "fixture".into(),
            timestamp: 1_600_000_000,
        })
        .collect();
    (decisions, verdicts)
}
