use std::collections::HashMap;

use serde::Serialize;

use super::ScoredItem;
use crate::error::{Error, Result};
use crate::io::verdicts::Judgement;

/// Mean top probability over hits and over misses.
pub fn mean_top_prob_stats(items: &[ScoredItem]) -> Result<(f64, f64)> {
    let (mut hit_sum, mut hit_n, mut miss_sum, mut miss_n) = (0.0, 0usize, 0.0, 0usize);
    for i in items {
        match i.judgement {
            Some(Judgement::Hit) => {
                hit_sum += i.max_prob;
                hit_n += 1;
            }
            Some(Judgement::Miss) => {
                miss_sum += i.max_prob;
                miss_n += 1;
            }
            _ => {}
        }
    }
    if hit_n == 0 {
        return Err(Error::EmptyPartition("hit"));
    }
    if miss_n == 0 {
        return Err(Error::EmptyPartition("miss"));
    }
    Ok((hit_sum / hit_n as f64, miss_sum / miss_n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAccuracy {
    pub label: String,
    pub hits: usize,
    pub misses: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAccuracyReport {
    /// In order of first appearance.
    pub classes: Vec<ClassAccuracy>,
    /// Unweighted mean of the per-class accuracies.
    pub average: f64,
    /// Hits over all judged items.
    pub pooled: f64,
}

/// Share of hits among hit/miss verdicts, per predicted class.
pub fn per_class_accuracy(items: &[ScoredItem]) -> Result<ClassAccuracyReport> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for i in items {
        let entry = counts.entry(&i.predicted_label).or_insert_with(|| {
            order.push(&i.predicted_label);
            (0, 0)
        });
        match i.judgement {
            Some(Judgement::Hit) => entry.0 += 1,
            Some(Judgement::Miss) => entry.1 += 1,
            _ => {}
        }
    }
    let mut classes = Vec::with_capacity(order.len());
    for label in order {
        let (hits, misses) = counts[label];
        if hits + misses == 0 {
            return Err(Error::EmptyClass(label.to_owned()));
        }
        classes.push(ClassAccuracy {
            label: label.to_owned(),
            hits,
            misses,
            accuracy: hits as f64 / (hits + misses) as f64,
        });
    }
    let average = classes.iter().map(|c| c.accuracy).sum::<f64>() / classes.len() as f64;
    let (h, n) = classes
        .iter()
        .fold((0, 0), |(h, n), c| (h + c.hits, n + c.hits + c.misses));
    Ok(ClassAccuracyReport {
        classes,
        average,
        pooled: h as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(label: &str, hits: usize, misses: usize, p: f64) -> Vec<ScoredItem> {
        (0..hits + misses)
            .map(|i| ScoredItem {
                id: format!("{label}{i}"),
                predicted_label: label.into(),
                max_prob: p,
                judgement: Some(if i < hits {
                    Judgement::Hit
                } else {
                    Judgement::Miss
                }),
            })
            .collect()
    }

    #[test]
    fn means() {
        let mut v = items("a", 1, 0, 0.6);
        v.extend(items("b", 1, 0, 0.8));
        v.extend(items("c", 0, 1, 0.5));
        let (h, m) = mean_top_prob_stats(&v).unwrap();
        assert!((h - 0.7).abs() < 1e-12 && (m - 0.5).abs() < 1e-12);
        assert!(matches!(
            mean_top_prob_stats(&items("a", 3, 0, 0.6)),
            Err(Error::EmptyPartition("miss"))
        ));
        assert!(matches!(
            mean_top_prob_stats(&items("a", 0, 3, 0.6)),
            Err(Error::EmptyPartition("hit"))
        ));
    }

    #[test]
    fn accuracy_per_class() {
        let mut v = items("skyscraper", 96, 4, 0.7);
        v.extend(items("hospital", 0, 100, 0.4));
        let r = per_class_accuracy(&v).unwrap();
        assert_eq!(r.classes[0].label, "skyscraper");
        assert!((r.classes[0].accuracy - 0.96).abs() < 1e-12);
        assert_eq!(r.classes[1].accuracy, 0.0);
        assert!((r.average - 0.48).abs() < 1e-12);

        let r = per_class_accuracy(&items("bridge", 1, 0, 0.9)).unwrap();
        assert_eq!(r.classes[0].accuracy, 1.0);
    }

    #[test]
    fn class_with_only_skips() {
        let mut v = items("bridge", 1, 0, 0.9);
        v.push(ScoredItem {
            id: "x".into(),
            predicted_label: "crevasse".into(),
            max_prob: 0.3,
            judgement: Some(Judgement::Skip),
        });
        assert!(matches!(per_class_accuracy(&v), Err(Error::EmptyClass(l)) if l == "crevasse"));
    }
}
