//! Seeded per-class sampling of predictions for manual validation.
//!
//! The draw is pinned so that a plan can be regenerated bit-for-bit by any
//! later build:
//!
//! * generator: ChaCha8 (`rand_chacha`), 256-bit key = `seed` as little-endian
//!   u64 followed by 24 zero bytes, stream id = FNV-1a 64 of the class label's
//!   UTF-8 bytes, starting at word 0;
//! * uniform index in `[0, n)`: Lemire's multiply-shift on `next_u64` with
//!   rejection of the biased low range;
//! * selection: partial Fisher–Yates over the class members in decision-file
//!   order, keeping the first `per_class` positions in draw order.

use std::collections::HashMap;
use std::path::Path;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frequency::frequency_report;
use crate::error::{Error, Result};
use crate::io::decisions::DecisionRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleItem {
    pub id: String,
    pub predicted_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    pub seed: u64,
    pub top_k_classes: usize,
    pub per_class: usize,
    /// Grouped by class in frequency order, draw order within a class.
    pub items: Vec<SampleItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleWarning {
    /// Fewer distinct predicted classes exist than were requested.
    FewClasses { requested: usize, available: usize },
    /// A class had fewer members than `per_class`; all of them were taken.
    ShortClass {
        label: String,
        available: usize,
        requested: usize,
    },
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn class_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(fnv1a64(label.as_bytes()));
    rng
}

/// Uniform integer in `[0, range)`.
fn bounded(rng: &mut impl RngCore, range: u64) -> u64 {
    debug_assert!(range > 0);
    let mut m = rng.next_u64() as u128 * range as u128;
    let mut low = m as u64;
    if low < range {
        let floor = range.wrapping_neg() % range;
        while low < floor {
            m = rng.next_u64() as u128 * range as u128;
            low = m as u64;
        }
    }
    (m >> 64) as u64
}

/// Draws up to `per_class` items from each of the `top_k_classes` most
/// frequent predicted classes.
pub fn stratified_sample(
    decisions: &[DecisionRecord],
    seed: u64,
    top_k_classes: usize,
    per_class: usize,
) -> Result<(SamplePlan, Vec<SampleWarning>)> {
    let freq = frequency_report(decisions)?;
    let mut warnings = Vec::new();
    if freq.len() < top_k_classes {
        log::warn!(
            "only {} predicted classes, {} requested",
            freq.len(),
            top_k_classes
        );
        warnings.push(SampleWarning::FewClasses {
            requested: top_k_classes,
            available: freq.len(),
        });
    }
    let mut members: HashMap<&str, Vec<&str>> = HashMap::new();
    for d in decisions {
        members.entry(d.top_label()).or_default().push(&d.id);
    }

    let mut items = Vec::new();
    for (label, _) in freq.iter().take(top_k_classes) {
        let mut pool = members.remove(label.as_str()).unwrap_or_default();
        if pool.len() <= per_class {
            if pool.len() < per_class {
                log::warn!(
                    "class {label:?} has {} members, {per_class} requested",
                    pool.len()
                );
                warnings.push(SampleWarning::ShortClass {
                    label: label.clone(),
                    available: pool.len(),
                    requested: per_class,
                });
            }
        } else {
            let mut rng = class_rng(seed, label);
            let n = pool.len() as u64;
            for i in 0..per_class {
                let j = i + bounded(&mut rng, n - i as u64) as usize;
                pool.swap(i, j);
            }
            pool.truncate(per_class);
        }
        items.extend(pool.into_iter().map(|id| SampleItem {
            id: id.to_owned(),
            predicted_label: label.clone(),
        }));
    }
    Ok((
        SamplePlan {
            seed,
            top_k_classes,
            per_class,
            items,
        },
        warnings,
    ))
}

#[derive(Serialize, Deserialize)]
struct PlanHeader {
    seed: u64,
    top_k_classes: usize,
    per_class: usize,
    items: usize,
}

#[derive(Serialize)]
#[serde(untagged)]
enum PlanLine<'a> {
    Header(PlanHeader),
    Item(&'a SampleItem),
}

/// Writes the plan as one header record followed by one record per item.
pub fn write_sample_plan(plan: &SamplePlan, path: impl AsRef<Path>) -> Result<()> {
    let header = PlanLine::Header(PlanHeader {
        seed: plan.seed,
        top_k_classes: plan.top_k_classes,
        per_class: plan.per_class,
        items: plan.items.len(),
    });
    let lines: Vec<PlanLine> = std::iter::once(header)
        .chain(plan.items.iter().map(PlanLine::Item))
        .collect();
    crate::io::write_jsonl(path.as_ref(), &lines)
}

pub fn read_sample_plan(path: impl AsRef<Path>) -> Result<SamplePlan> {
    let path = path.as_ref();
    let records = crate::io::read_jsonl::<serde_json::Value>(path)?;
    let mut iter = records.into_iter();
    let Some((line, head)) = iter.next() else {
        return Err(Error::EmptyFile(path.to_owned()));
    };
    let header: PlanHeader = serde_json::from_value(head).map_err(|e| Error::MalformedLine {
        line,
        reason: format!("plan header: {e}"),
    })?;
    let mut items = Vec::with_capacity(header.items);
    let mut seen = std::collections::HashSet::new();
    for (line, v) in iter {
        let item: SampleItem = serde_json::from_value(v).map_err(|e| Error::MalformedLine {
            line,
            reason: e.to_string(),
        })?;
        if !seen.insert(item.id.clone()) {
            return Err(Error::DuplicateId(item.id));
        }
        items.push(item);
    }
    if items.len() != header.items {
        return Err(Error::CountMismatch {
            declared: header.items as u64,
            found: items.len() as u64,
        });
    }
    Ok(SamplePlan {
        seed: header.seed,
        top_k_classes: header.top_k_classes,
        per_class: header.per_class,
        items,
    })
}
