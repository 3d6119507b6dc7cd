//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! A criterion whose hardware precondition is not met (the parallel speedup
//! on a machine with fewer than four cores) is still measured and reported as
//! FAIL, tagged `[env]`, but does not fail the run.

mod common;

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use zeroshot::classifier::{classify_corpus, ClassificationConfig, CorpusOptions};
use zeroshot::ensemble::{ensemble_corpus, EnsembleConfig};
use zeroshot::evaluation::{coverage_curve, decile_thresholds, threshold_sweep, ScoredItem};
use zeroshot::io::decisions::{write_decisions, DecisionRecord};
use zeroshot::io::embeddings::{decode, encode, read_embeddings, write_embeddings, ReadOptions};
use zeroshot::io::verdicts::Judgement;
use zeroshot::labels::{prompt_expand, PromptTemplate, Taxonomy};
use zeroshot::numeric::{convex_blend, cosine_similarity, softmax_scaled, top_k, ProbVector};
use zeroshot::synth::{self, SynthCorpus, SynthSpec};
use zeroshot::Error;

use common::{reference_sweep_items, REFERENCE_SWEEP_RATES};

const TABLE_TOL: f64 = 1e-4;
// The Reference rates are truncated, not rounded, to four decimals; allow
// for the last printed digit plus float noise.
const TABLE_TOL_EPS: f64 = 1e-9;
const PROPERTY_CASES: u32 = 1000;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Failed, but the machine cannot meet the criterion's precondition.
    EnvFail(String),
}

struct Report {
    failures: usize,
    env_failures: usize,
}

impl Report {
    fn record(&mut self, name: &str, started: Instant, outcome: Outcome) {
        let ms = started.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Outcome::Pass(d) => println!("PASS  {name:<28} {d} [{ms:.0} ms]"),
            Outcome::Fail(d) => {
                self.failures += 1;
                println!("FAIL  {name:<28} {d} [{ms:.0} ms]");
            }
            Outcome::EnvFail(d) => {
                self.env_failures += 1;
                println!("FAIL  {name:<28} {d} [{ms:.0} ms] [env]");
            }
        }
    }
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    if took <= limit {
        Ok(())
    } else {
        Err(format!("took {took:.2?}, budget {limit:.0?}"))
    }
}

fn reference_sweep_golden() -> Outcome {
    let start = Instant::now();
    let table = match threshold_sweep(&reference_sweep_items(), &decile_thresholds()) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (t, hit, err, ratio) in REFERENCE_SWEEP_RATES {
        let Some(row) = table.rows.iter().find(|r| (r.threshold - t).abs() < 1e-12) else {
            bad.push(format!("t={t}: missing"));
            continue;
        };
        let got_ratio = row.ratio.unwrap_or(f64::NAN);
        for (what, got, want) in [
            ("hit_rate", row.hit_rate, hit),
            ("error_rate", row.error_rate, err),
            ("ratio", got_ratio, ratio),
        ] {
            let dev = (got - want).abs();
            worst = worst.max(dev);
            if dev.is_nan() || dev > TABLE_TOL + TABLE_TOL_EPS {
                bad.push(format!("t={t} {what} {got:.6} vs {want}"));
            }
        }
    }
    if let Err(e) = within(Duration::from_secs(1), start) {
        bad.push(e);
    }
    if bad.is_empty() {
        Outcome::Pass(format!(
            "9/9 rows within {TABLE_TOL} (max deviation {worst:.2e})"
        ))
    } else {
        Outcome::Fail(bad.join("; "))
    }
}

fn optimal_threshold() -> Outcome {
    let start = Instant::now();
    let table = match threshold_sweep(&reference_sweep_items(), &decile_thresholds()) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut notes = Vec::new();
    let mut ok = true;
    for (min_cov, want_t, want_ratio) in [(0.3, 0.6, 1.3373), (0.0, 0.9, 1.5141)] {
        match table.optimal_threshold(min_cov) {
            Ok(r) => {
                let ratio = r.ratio.unwrap_or(f64::NAN);
                let good = (r.threshold - want_t).abs() < 1e-12
                    && (ratio - want_ratio).abs() <= TABLE_TOL + TABLE_TOL_EPS;
                ok &= good;
                notes.push(format!(
                    "min_cov {min_cov} -> {:.1} (ratio {ratio:.4})",
                    r.threshold
                ));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("min_cov {min_cov}: {e}"));
            }
        }
    }
    if let Err(e) = within(Duration::from_secs(1), start) {
        ok = false;
        notes.push(e);
    }
    if ok {
        Outcome::Pass(notes.join(", "))
    } else {
        Outcome::Fail(notes.join(", "))
    }
}

fn prompt_goldens() -> Outcome {
    let cases = [
        ("outdoor cathedral", "A photo of the outdoor of a cathedral"),
        (
            "outdoor apartment building",
            "A photo of the outdoor of an apartment building",
        ),
        ("bakery shop", "A photo of a bakery shop"),
    ];
    let mismatches: Vec<String> = cases
        .iter()
        .filter_map(
            |(raw, want)| match prompt_expand(raw, &PromptTemplate::Natural) {
                Ok(got) if got.as_bytes() == want.as_bytes() => None,
                Ok(got) => Some(format!("{raw:?} -> {got:?}")),
                Err(e) => Some(format!("{raw:?}: {e}")),
            },
        )
        .collect();
    if mismatches.is_empty() {
        Outcome::Pass("3/3 byte-identical".into())
    } else {
        Outcome::Fail(mismatches.join("; "))
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn finite_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn prob_vec(len: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("all zero", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6)
            .then(|| ProbVector::new(v.iter().map(|x| x / s).collect()).ok())
            .flatten()
    })
}

/// Independent recount of one sweep row: rates relative to all judged hits
/// and misses.
fn brute_force_row(items: &[(f64, Option<bool>)], t: f64) -> (usize, usize, f64, f64) {
    let judged: Vec<(f64, bool)> = items
        .iter()
        .filter_map(|(p, h)| h.map(|h| (*p, h)))
        .collect();
    let all_hits = judged.iter().filter(|x| x.1).count() as f64;
    let all_errs = judged.iter().filter(|x| !x.1).count() as f64;
    let hits = judged.iter().filter(|x| x.1 && x.0 >= t).count();
    let errs = judged.iter().filter(|x| !x.1 && x.0 >= t).count();
    let hr = if all_hits > 0.0 {
        hits as f64 / all_hits
    } else {
        0.0
    };
    let er = if all_errs > 0.0 {
        errs as f64 / all_errs
    } else {
        0.0
    };
    (hits, errs, hr, er)
}

fn property_suite() -> Outcome {
    let mut failures = Vec::new();
    let mut run = |name: &str, f: &mut dyn FnMut(&mut TestRunner) -> Result<(), String>| {
        let mut runner = TestRunner::new(Config {
            cases: PROPERTY_CASES,
            failure_persistence: None,
            ..Config::default()
        });
        if let Err(e) = f(&mut runner) {
            failures.push(format!("{name}: {e}"));
        }
    };

    run("softmax", &mut |r| {
        r.run(
            &(finite_vec(1..40), 0.1f64..200.0, -50.0f64..50.0),
            |(v, scale, shift)| {
                let p =
                    softmax_scaled(&v, scale).map_err(|e| TestCaseError::fail(e.to_string()))?;
                let sum: f64 = p.iter().sum();
                check((sum - 1.0).abs() < 1e-9, || format!("sum {sum}"))?;
                check(p.iter().all(|x| (0.0..=1.0).contains(x)), || {
                    "out of range".into()
                })?;
                let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
                let q = softmax_scaled(&shifted, scale).unwrap();
                check(
                    p.iter().zip(q.iter()).all(|(a, b)| (a - b).abs() < 1e-9),
                    || "not shift invariant".into(),
                )?;
                let am = zeroshot::numeric::argmax(&v).unwrap();
                check(p[am] == p.max(), || "argmax not preserved".into())
            },
        )
        .map_err(|e| e.to_string())
    });

    run("cosine", &mut |r| {
        let pair = (2usize..64).prop_flat_map(|d| {
            (
                prop::collection::vec(-1.0f32..1.0, d),
                prop::collection::vec(-1.0f32..1.0, d),
                0.01f32..100.0,
            )
        });
        r.run(&pair, |(a, b, k)| {
            let (Ok(ab), Ok(ba)) = (cosine_similarity(&a, &b), cosine_similarity(&b, &a)) else {
                return Ok(()); // zero vectors are rejected, not compared
            };
            check((ab - ba).abs() < 1e-12, || format!("asymmetric {ab} {ba}"))?;
            let ka: Vec<f32> = a.iter().map(|x| x * k).collect();
            let kab = cosine_similarity(&ka, &b).unwrap();
            check((kab - ab).abs() < 1e-5, || {
                format!("scale {k}: {ab} vs {kab}")
            })?;
            check((-1.0..=1.0).contains(&ab), || format!("out of range {ab}"))
        })
        .map_err(|e| e.to_string())
    });

    run("convex_blend", &mut |r| {
        let s = (1usize..30).prop_flat_map(|n| (prob_vec(n), prob_vec(n), 0.0f64..=1.0));
        r.run(&s, |(p, q, w)| {
            let b = convex_blend(&p, &q, w).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let sum: f64 = b.iter().sum();
            check((sum - 1.0).abs() < 1e-9, || format!("sum {sum}"))?;
            check(
                b.iter()
                    .zip(p.iter().zip(q.iter()))
                    .all(|(x, (a, c))| *x >= a.min(*c) - 1e-12 && *x <= a.max(*c) + 1e-12),
                || "outside the segment".into(),
            )
        })
        .map_err(|e| e.to_string())
    });

    run("coverage_curve", &mut |r| {
        let s = (
            prop::collection::vec(0.0f64..=1.0, 1..100),
            prop::collection::vec(0.0f64..=1.0, 1..20),
        );
        r.run(&s, |(probs, mut ts)| {
            ts.sort_by(f64::total_cmp);
            let c = coverage_curve(&probs, &ts).unwrap();
            check(c.windows(2).all(|w| w[1].1 <= w[0].1), || {
                "not monotone".into()
            })?;
            for (t, frac) in &c {
                let n = probs.iter().filter(|p| *p >= t).count() as f64 / probs.len() as f64;
                check((n - frac).abs() < 1e-12, || format!("t={t}: {frac} vs {n}"))?;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });

    run("top_k", &mut |r| {
        let s = (1usize..50).prop_flat_map(|n| (prob_vec(n), 1..=n));
        r.run(&s, |(p, k)| {
            let got = top_k(&p, k).unwrap();
            let mut all: Vec<(usize, f64)> = p.iter().copied().enumerate().collect();
            all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            all.truncate(k);
            check(got == all, || format!("{got:?} vs {all:?}"))
        })
        .map_err(|e| e.to_string())
    });

    run("sweep_recount", &mut |r| {
        // Probabilities on a coarse grid so that ties with thresholds occur.
        let item = (0u8..=20, prop::option::weighted(0.9, any::<bool>()));
        let s = (
            prop::collection::vec(item, 1..=50),
            prop::collection::vec(0u8..=20, 1..12),
        );
        r.run(&s, |(raw, ts)| {
            let items: Vec<(f64, Option<bool>)> =
                raw.iter().map(|(p, h)| (*p as f64 / 20.0, *h)).collect();
            let ts: Vec<f64> = ts.iter().map(|t| *t as f64 / 20.0).collect();
            let scored: Vec<ScoredItem> = items
                .iter()
                .enumerate()
                .map(|(i, (p, h))| ScoredItem {
                    id: i.to_string(),
                    predicted_label: "c".into(),
                    max_prob: *p,
                    judgement: Some(match h {
                        Some(true) => Judgement::Hit,
                        Some(false) => Judgement::Miss,
                        None => Judgement::Skip,
                    }),
                })
                .collect();
            let table = match threshold_sweep(&scored, &ts) {
                Ok(t) => t,
                Err(Error::EmptyInput) => {
                    return check(items.iter().all(|(_, h)| h.is_none()), || {
                        "spurious EmptyInput".into()
                    })
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            for (row, t) in table.rows.iter().zip(&ts) {
                let (h, e, hr, er) = brute_force_row(&items, *t);
                check(row.hits == h && row.errors == e, || format!("t={t} counts"))?;
                check(
                    (row.hit_rate - hr).abs() < 1e-12 && (row.error_rate - er).abs() < 1e-12,
                    || format!("t={t} rates"),
                )?;
                let want_ratio = (er > 0.0).then(|| hr / er);
                check(
                    match (row.ratio, want_ratio) {
                        (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                        (None, None) => true,
                        _ => false,
                    },
                    || format!("t={t} ratio"),
                )?;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });

    if failures.is_empty() {
        Outcome::Pass(format!("6 properties x {PROPERTY_CASES} cases"))
    } else {
        Outcome::Fail(failures.join("; "))
    }
}

fn raw_taxonomy(corpus: &SynthCorpus) -> Taxonomy {
    Taxonomy::from_labels("synthetic", &corpus.labels, &PromptTemplate::Raw)
        .and_then(|t| t.attach_prompt_embeddings(&corpus.prompts))
        .expect("synthetic taxonomy")
}

fn max_prob_deviation(a: &[DecisionRecord], b: &[DecisionRecord]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x.id != y.id || x.top.len() != y.top.len() || x.accepted != y.accepted {
            return None;
        }
        for ((lx, px), (ly, py)) in x.top.iter().zip(&y.top) {
            if lx != ly {
                return None;
            }
            worst = worst.max((px - py).abs());
        }
    }
    Some(worst)
}

fn determinism_workers() -> Outcome {
    let corpus = synth::generate(&SynthSpec {
        items: 1000,
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    let tax = raw_taxonomy(&corpus);
    let cfg = ClassificationConfig::default();
    let runs: Vec<Vec<DecisionRecord>> = [1, 4, 8]
        .iter()
        .map(|&workers| {
            let opts = CorpusOptions {
                workers,
                batch_size: 37,
                ..Default::default()
            };
            classify_corpus(&corpus.manifest, &corpus.images, &tax, &cfg, &opts)
                .unwrap()
                .decisions
        })
        .collect();
    let devs: Vec<Option<f64>> = runs[1..]
        .iter()
        .map(|r| max_prob_deviation(&runs[0], r))
        .collect();
    match devs.iter().copied().collect::<Option<Vec<f64>>>() {
        Some(d) if d.iter().all(|x| *x <= 1e-9) => Outcome::Pass(format!(
            "1/4/8 workers agree on 1000 items (max deviation {:.1e})",
            d.iter().copied().fold(0.0, f64::max)
        )),
        Some(d) => Outcome::Fail(format!("deviations {d:?}")),
        None => Outcome::Fail("labels or ordering differ between worker counts".into()),
    }
}

fn determinism_sample_plan(dir: &Path) -> Outcome {
    let corpus = synth::generate(&SynthSpec {
        items: 3000,
        seed: 5,
        ..Default::default()
    })
    .unwrap();
    let tax = raw_taxonomy(&corpus);
    let decisions = classify_corpus(
        &corpus.manifest,
        &corpus.images,
        &tax,
        &ClassificationConfig::default(),
        &CorpusOptions::default(),
    )
    .unwrap()
    .decisions;
    let dpath = dir.join("decisions.jsonl");
    write_decisions(&decisions, &dpath).unwrap();
    let mut plans = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("plan{run}.jsonl"));
        let status = Command::new(env!("CARGO_BIN_EXE_zeroshot"))
            .args([
                "sample",
                "--seed",
                "2021",
                "--top-classes",
                "10",
                "--per-class",
                "100",
                "--decisions",
            ])
            .arg(&dpath)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return Outcome::Fail(format!(
                "sample exited {:?}: {}",
                status.status.code(),
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        plans.push(std::fs::read(&out).unwrap());
    }
    if plans[0] == plans[1] && !plans[0].is_empty() {
        let lines = plans[0].iter().filter(|b| **b == b'\n').count();
        Outcome::Pass(format!(
            "two processes wrote identical plans ({} bytes, {} items)",
            plans[0].len(),
            lines - 1
        ))
    } else {
        Outcome::Fail("plan files differ between invocations".into())
    }
}

fn planted_accuracy(
    corpus: &SynthCorpus,
    decisions: &[DecisionRecord],
    min_prob: f64,
) -> (f64, usize) {
    let planted: HashMap<&str, &str> = corpus
        .manifest
        .iter()
        .zip(&corpus.planted)
        .filter_map(|(e, c)| c.map(|c| (e.id.as_str(), corpus.labels[c].as_str())))
        .collect();
    let (mut hit, mut n) = (0usize, 0usize);
    for d in decisions {
        if let Some(label) = planted.get(d.id.as_str()) {
            if d.max_prob() >= min_prob {
                n += 1;
                hit += usize::from(d.top_label() == *label);
            }
        }
    }
    (if n == 0 { 0.0 } else { hit as f64 / n as f64 }, n)
}

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let spec = SynthSpec {
        items: 5000,
        dim: 64,
        classes: 20,
        planted_fraction: 0.6,
        ..Default::default()
    };
    let corpus = synth::generate(&spec).unwrap();
    let tax = raw_taxonomy(&corpus);
    let cfg = ClassificationConfig {
        threshold: 0.0,
        top_k: 3,
        ..Default::default()
    };
    let opts = CorpusOptions::default();
    let image = classify_corpus(&corpus.manifest, &corpus.images, &tax, &cfg, &opts).unwrap();
    let fused = ensemble_corpus(
        &corpus.manifest,
        &corpus.images,
        &corpus.texts,
        &tax,
        &cfg,
        &EnsembleConfig::default(),
        &opts,
    )
    .unwrap();
    let (img_acc, n) = planted_accuracy(&corpus, &image.decisions, 0.0);
    let (ens_acc, _) = planted_accuracy(&corpus, &fused.decisions, 0.0);
    let (img_04, n_img_04) = planted_accuracy(&corpus, &image.decisions, 0.4);
    let (ens_04, n_ens_04) = planted_accuracy(&corpus, &fused.decisions, 0.4);
    let detail = format!(
        "image {:.2}% vs weighted {:.2}% on {n} planted items at t=0; at t=0.4: {:.2}% ({n_img_04}) vs {:.2}% ({n_ens_04})",
        img_acc * 100.0,
        ens_acc * 100.0,
        img_04 * 100.0,
        ens_04 * 100.0
    );
    let timing = within(Duration::from_secs(30), start);
    if img_acc >= 0.95 && ens_acc > img_acc && timing.is_ok() {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(format!("{detail} {}", timing.err().unwrap_or_default()))
    }
}

fn throughput() -> (Outcome, Outcome) {
    let corpus = synth::generate(&SynthSpec {
        items: 100_000,
        dim: 512,
        classes: 205,
        caption_fraction: 0.0,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let tax = raw_taxonomy(&corpus);
    let cfg = ClassificationConfig::default();
    let time = |workers: usize| {
        let opts = CorpusOptions {
            workers,
            ..Default::default()
        };
        let t = Instant::now();
        let run = classify_corpus(&corpus.manifest, &corpus.images, &tax, &cfg, &opts).unwrap();
        assert_eq!(run.decisions.len(), 100_000);
        t.elapsed()
    };
    let single = time(1);
    let single_ok = single <= Duration::from_secs(60);
    let single_outcome = if single_ok {
        Outcome::Pass(format!(
            "100000 x 512 vs 205 classes on one worker in {single:.2?} (budget 60 s)"
        ))
    } else {
        Outcome::Fail(format!("one worker took {single:.2?} (budget 60 s)"))
    };

    let four = time(4);
    let speedup = single.as_secs_f64() / four.as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let detail = format!("4 workers {four:.2?} vs 1 worker {single:.2?}: {speedup:.2}x (need 3x), {cores} core(s) available");
    let speed_outcome = if speedup >= 3.0 {
        Outcome::Pass(detail)
    } else if cores < 4 {
        Outcome::EnvFail(detail)
    } else {
        Outcome::Fail(detail)
    };
    (single_outcome, speed_outcome)
}

fn format_round_trip(dir: &Path) -> Outcome {
    let corpus = synth::generate(&SynthSpec {
        items: 500,
        dim: 48,
        ..Default::default()
    })
    .unwrap();
    let mut store = corpus.images.clone();
    store
        .insert("ünïcødé id", corpus.images.get("syn0000000").unwrap())
        .unwrap();
    let first = dir.join("a.zse");
    let second = dir.join("b.zse");
    write_embeddings(&store, &first).unwrap();
    let back = read_embeddings(&first).unwrap();
    write_embeddings(&back, &second).unwrap();
    let (a, b) = (
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap(),
    );
    let mut bad = Vec::new();
    if a != b || back != store {
        bad.push("write->read->write not byte-identical".to_string());
    }

    let opts = ReadOptions::default();
    let good = encode(&store);
    type Case<'a> = (&'a str, Vec<u8>, fn(&Error) -> bool);
    let mut cases: Vec<Case> = Vec::new();
    let mut magic = good.clone();
    magic[..4].copy_from_slice(b"ZSE2");
    cases.push(("bad magic", magic, |e| matches!(e, Error::BadMagic(_))));
    let mut version = good.clone();
    version[4..6].copy_from_slice(&7u16.to_le_bytes());
    cases.push(("version", version, |e| {
        matches!(e, Error::UnsupportedVersion(7))
    }));
    cases.push(("truncated header", good[..10].to_vec(), |e| {
        matches!(e, Error::BadHeader(_))
    }));
    let mut zero_dim = good.clone();
    zero_dim[6..10].copy_from_slice(&0u32.to_le_bytes());
    cases.push(("zero dim", zero_dim, |e| matches!(e, Error::BadHeader(_))));
    let mut over = good.clone();
    over[10..18].copy_from_slice(&(store.len() as u64 + 1).to_le_bytes());
    cases.push(("count too high", over, |e| {
        matches!(e, Error::CountMismatch { .. })
    }));
    let mut trailing = good.clone();
    trailing.extend_from_slice(&[0, 0, 0]);
    cases.push(("trailing bytes", trailing, |e| {
        matches!(e, Error::CountMismatch { .. })
    }));
    for (name, bytes, expect) in cases {
        match decode(&bytes, opts) {
            Err(e) if expect(&e) => {}
            Err(e) => bad.push(format!("{name}: unexpected error {e}")),
            Ok(_) => bad.push(format!("{name}: accepted")),
        }
    }
    if bad.is_empty() {
        Outcome::Pass(format!(
            "{} records, {} bytes byte-identical; 6 malformed headers rejected",
            store.len(),
            a.len()
        ))
    } else {
        Outcome::Fail(bad.join("; "))
    }
}

fn main() {
    // Test-harness arguments (filters, --nocapture) are ignored.
    let dir = tempfile::tempdir().expect("temp dir");
    let mut report = Report {
        failures: 0,
        env_failures: 0,
    };
    println!("acceptance criteria");

    let t = Instant::now();
    report.record("reference-sweep-golden", t, reference_sweep_golden());
    let t = Instant::now();
    report.record("optimal-threshold", t, optimal_threshold());
    let t = Instant::now();
    report.record("prompt-goldens", t, prompt_goldens());
    let t = Instant::now();
    report.record("property-suite", t, property_suite());
    let t = Instant::now();
    report.record("determinism-workers", t, determinism_workers());
    let t = Instant::now();
    report.record(
        "determinism-sample-plan",
        t,
        determinism_sample_plan(dir.path()),
    );
    let t = Instant::now();
    report.record("synthetic-end-to-end", t, synthetic_end_to_end());
    let t = Instant::now();
    let (single, speedup) = throughput();
    report.record("throughput-single-core", t, single);
    report.record("throughput-4-worker-speedup", t, speedup);
    let t = Instant::now();
    report.record("format-round-trip", t, format_round_trip(dir.path()));

    println!(
        "acceptance: {} failed, {} failed on unmet hardware preconditions",
        report.failures, report.env_failures
    );
    if report.failures > 0 {
        std::process::exit(1);
    }
}
