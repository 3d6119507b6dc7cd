//! Zero-shot classification of image embeddings against prompted labels.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::decisions::{DecisionMode, DecisionRecord};
use crate::io::embeddings::EmbeddingStore;
use crate::io::manifest::ManifestEntry;
use crate::labels::{PromptMatrix, Taxonomy};
use crate::numeric::{self, ProbVector, ZERO_NORM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationConfig {
    /// Multiplier applied to cosine similarities before the softmax.
    pub scale: f64,
    /// Minimum top probability for a decision to be accepted (inclusive).
    pub threshold: f64,
    /// Number of ranked classes kept per decision; capped at the class count.
    pub top_k: usize,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self {
            scale: 100.0,
            threshold: 0.5,
            top_k: 5,
        }
    }
}

impl ClassificationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top-k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cosine similarity of `v` against every prompt row, written into `out`.
pub(crate) fn similarities(v: &[f32], prompts: &PromptMatrix, out: &mut Vec<f64>) -> Result<()> {
    if v.len() != prompts.dim {
        return Err(Error::DimensionMismatch {
            expected: prompts.dim,
            found: v.len(),
        });
    }
    let norm = numeric::l2_norm(v);
    if norm <= ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    let inv = 1.0 / norm;
    out.clear();
    out.extend(
        prompts
            .inv_norms
            .iter()
            .enumerate()
            .map(|(c, inv_p)| (numeric::dot(v, prompts.row(c)) * inv * inv_p).clamp(-1.0, 1.0)),
    );
    Ok(())
}

/// Softmax over the cosine similarities between `v` and each class prompt.
pub fn classify_embedding(
    v: &[f32],
    tax: &Taxonomy,
    cfg: &ClassificationConfig,
) -> Result<ProbVector> {
    let prompts = tax.prompt_matrix()?;
    let mut logits = Vec::with_capacity(tax.len());
    similarities(v, prompts, &mut logits)?;
    numeric::softmax_scaled(&logits, cfg.scale)
}

/// Ranks `p` and applies the acceptance threshold.
pub fn decide(
    p: &ProbVector,
    tax: &Taxonomy,
    cfg: &ClassificationConfig,
    id: &str,
    mode: DecisionMode,
) -> Result<DecisionRecord> {
    if p.len() != tax.len() {
        return Err(Error::DimensionMismatch {
            expected: tax.len(),
            found: p.len(),
        });
    }
    let top: Vec<(String, f64)> = numeric::top_k(p, cfg.top_k.min(p.len()))?
        .into_iter()
        .map(|(c, prob)| (tax.classes()[c].raw_name.clone(), prob))
        .collect();
    let accepted = top[0].1 >= cfg.threshold;
    Ok(DecisionRecord {
        id: id.to_owned(),
        mode,
        threshold: cfg.threshold,
        top,
        accepted,
        used_text: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusOptions {
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    /// Items handed to a worker at a time.
    pub batch_size: usize,
    /// Log and drop manifest entries without an image embedding instead of
    /// failing.
    pub skip_missing: bool,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            batch_size: 256,
            skip_missing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRun {
    /// One decision per processed entry, in manifest order.
    pub decisions: Vec<DecisionRecord>,
    /// Manifest ids dropped for lack of an embedding.
    pub skipped: Vec<String>,
}

/// A manifest entry and its row in the embedding store.
pub(crate) type Row<'m> = (&'m ManifestEntry, usize);

/// Maps store rows to manifest entries, honouring the missing-embedding
/// policy. Runs serially so the reported error is always the first offender.
pub(crate) fn resolve_rows<'m>(
    manifest: &'m [ManifestEntry],
    store: &EmbeddingStore,
    skip_missing: bool,
) -> Result<(Vec<Row<'m>>, Vec<String>)> {
    let mut rows = Vec::with_capacity(manifest.len());
    let mut skipped = Vec::new();
    for entry in manifest {
        match store.position(&entry.id) {
            Some(row) => rows.push((entry, row)),
            None if skip_missing => {
                log::warn!("no image embedding for {:?}; skipping", entry.id);
                skipped.push(entry.id.clone());
            }
            None => return Err(Error::MissingEmbedding(entry.id.clone())),
        }
    }
    Ok((rows, skipped))
}

/// Applies `f` to every item, in parallel when asked, returning results in
/// input order.
pub(crate) fn map_ordered<I, T, F>(items: &[I], opts: &CorpusOptions, f: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync + Send,
{
    let batch = opts.batch_size.max(1);
    let run = || -> Result<Vec<T>> {
        let chunks: Vec<Vec<T>> = items
            .par_chunks(batch)
            .map(|chunk| chunk.iter().map(&f).collect::<Result<Vec<T>>>())
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    };
    if opts.workers == 1 {
        return items.iter().map(&f).collect();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if opts.workers > 0 {
        builder = builder.num_threads(opts.workers);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(run)
}

pub(crate) fn check_store_dim(store: &EmbeddingStore, tax: &Taxonomy) -> Result<()> {
    let dim = tax.prompt_matrix()?.dim;
    if store.dim() != dim && !store.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: store.dim(),
        });
    }
    Ok(())
}

/// Classifies every manifest entry by its image embedding alone.
pub fn classify_corpus(
    manifest: &[ManifestEntry],
    images: &EmbeddingStore,
    tax: &Taxonomy,
    cfg: &ClassificationConfig,
    opts: &CorpusOptions,
) -> Result<CorpusRun> {
    cfg.validate()?;
    check_store_dim(images, tax)?;
    let prompts = tax.prompt_matrix()?;
    let (rows, skipped) = resolve_rows(manifest, images, opts.skip_missing)?;
    let decisions = map_ordered(&rows, opts, |(entry, row)| {
        let mut logits = Vec::with_capacity(tax.len());
        similarities(images.row(*row), prompts, &mut logits)?;
        let p = numeric::softmax_scaled(&logits, cfg.scale)?;
        decide(&p, tax, cfg, &entry.id, DecisionMode::Image)
    })?;
    Ok(CorpusRun { decisions, skipped })
}
