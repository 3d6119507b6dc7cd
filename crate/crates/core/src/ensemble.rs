//! Late fusion of the image distribution with the caption distribution.
//!
//! Both distributions come out of the same similarity-then-softmax pipeline;
//! fusion happens on the probability vectors, after the softmax.

use crate::classifier::{self, ClassificationConfig, CorpusOptions};
use crate::error::{Error, Result};
use crate::io::decisions::{DecisionMode, DecisionRecord};
use crate::io::embeddings::EmbeddingStore;
use crate::io::manifest::ManifestEntry;
use crate::labels::Taxonomy;
use crate::numeric::{self, ProbVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    /// Always blend image and caption distributions.
    Weighted,
    /// Blend only when the image distribution is not confident.
    Conditional,
}

impl FusionMode {
    pub fn decision_mode(self) -> DecisionMode {
        match self {
            Self::Weighted => DecisionMode::Weighted,
            Self::Conditional => DecisionMode::Conditional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    /// Weight of the image distribution; the caption gets `1 - w_image`.
    pub w_image: f64,
    /// Conditional mode: image maxima at or above this skip the caption.
    pub gate: f64,
    /// Minimum best caption/prompt cosine for the caption to be used at all.
    /// Zero disables the check.
    pub text_sim_threshold: f64,
    pub mode: FusionMode,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            w_image: 0.8,
            gate: 0.6,
            text_sim_threshold: 0.0,
            mode: FusionMode::Weighted,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("w-image", self.w_image),
            ("gate", self.gate),
            ("text-sim-threshold", self.text_sim_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Class distribution implied by a caption embedding.
pub fn text_distribution(text_emb: &[f32], tax: &Taxonomy, scale: f64) -> Result<ProbVector> {
    let cfg = ClassificationConfig {
        scale,
        ..Default::default()
    };
    classifier::classify_embedding(text_emb, tax, &cfg)
}

pub fn fuse_weighted(
    p_img: &ProbVector,
    p_txt: &ProbVector,
    cfg: &EnsembleConfig,
) -> Result<ProbVector> {
    numeric::convex_blend(p_img, p_txt, cfg.w_image)
}

/// Returns the image distribution untouched when its maximum reaches the
/// gate, otherwise the weighted blend. The flag reports whether the caption
/// was used.
pub fn fuse_conditional(
    p_img: &ProbVector,
    p_txt: &ProbVector,
    cfg: &EnsembleConfig,
) -> Result<(ProbVector, bool)> {
    if p_img.len() != p_txt.len() {
        return Err(Error::DimensionMismatch {
            expected: p_img.len(),
            found: p_txt.len(),
        });
    }
    if p_img.max() >= cfg.gate {
        Ok((p_img.clone(), false))
    } else {
        Ok((fuse_weighted(p_img, p_txt, cfg)?, true))
    }
}

fn gate_open(similarities: &[f64], threshold: f64) -> bool {
    threshold <= 0.0 || similarities.iter().any(|&s| s >= threshold)
}

/// Whether a caption is close enough to any prompt to be worth fusing.
pub fn text_gate(text_emb: &[f32], tax: &Taxonomy, cfg: &EnsembleConfig) -> Result<bool> {
    let mut sims = Vec::with_capacity(tax.len());
    classifier::similarities(text_emb, tax.prompt_matrix()?, &mut sims)?;
    Ok(gate_open(&sims, cfg.text_sim_threshold))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub decisions: Vec<DecisionRecord>,
    pub skipped: Vec<String>,
    /// Items decided on the image alone because they had no caption embedding.
    pub without_text: usize,
}

/// Classifies every manifest entry, fusing in its caption where one exists.
pub fn ensemble_corpus(
    manifest: &[ManifestEntry],
    images: &EmbeddingStore,
    texts: &EmbeddingStore,
    tax: &Taxonomy,
    ccfg: &ClassificationConfig,
    ecfg: &EnsembleConfig,
    opts: &CorpusOptions,
) -> Result<EnsembleRun> {
    ccfg.validate()?;
    ecfg.validate()?;
    classifier::check_store_dim(images, tax)?;
    classifier::check_store_dim(texts, tax)?;
    let prompts = tax.prompt_matrix()?;
    let (rows, skipped) = classifier::resolve_rows(manifest, images, opts.skip_missing)?;
    let decisions = classifier::map_ordered(&rows, opts, |(entry, row)| {
        let mut sims = Vec::with_capacity(tax.len());
        classifier::similarities(images.row(*row), prompts, &mut sims)?;
        let p_img = numeric::softmax_scaled(&sims, ccfg.scale)?;
        let Some(text) = texts.get(&entry.id) else {
            return classifier::decide(&p_img, tax, ccfg, &entry.id, DecisionMode::Image);
        };
        let mode = ecfg.mode.decision_mode();
        classifier::similarities(text, prompts, &mut sims)?;
        let (p, used_text) = if !gate_open(&sims, ecfg.text_sim_threshold) {
            (p_img, false)
        } else {
            let p_txt = numeric::softmax_scaled(&sims, ccfg.scale)?;
            match ecfg.mode {
                FusionMode::Weighted => (fuse_weighted(&p_img, &p_txt, ecfg)?, true),
                FusionMode::Conditional => fuse_conditional(&p_img, &p_txt, ecfg)?,
            }
        };
        let mut d = classifier::decide(&p, tax, ccfg, &entry.id, mode)?;
        d.used_text = Some(used_text);
        Ok(d)
    })?;
    let without_text = decisions.iter().filter(|d| d.used_text.is_none()).count();
    Ok(EnsembleRun {
        decisions,
        skipped,
        without_text,
    })
}
