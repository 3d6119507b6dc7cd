//! Synthetic corpora with planted labels, for end-to-end checks and demos.
//!
//! Prompt embeddings are random unit vectors. A planted item's image
//! embedding is its class prompt plus isotropic Gaussian noise of total
//! expected norm `image_noise`, renormalised; its caption embedding is built
//! the same way with independent noise of norm `text_noise`. Unplanted items
//! get unrelated random image and caption vectors.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::embeddings::{write_embeddings, EmbeddingStore};
use crate::io::manifest::{write_manifest, ManifestEntry, Split};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub items: usize,
    pub dim: usize,
    pub classes: usize,
    /// Share of items whose embeddings derive from a class prompt.
    pub planted_fraction: f64,
    pub image_noise: f64,
    pub text_noise: f64,
    /// Share of items that carry a caption.
    pub caption_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            items: 5_000,
            dim: 64,
            classes: 20,
            planted_fraction: 0.6,
            image_noise: 2.0,
            text_noise: 1.5,
            caption_fraction: 1.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedLabel {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub labels: Vec<String>,
    pub manifest: Vec<ManifestEntry>,
    /// Keyed by label.
    pub prompts: EmbeddingStore,
    pub images: EmbeddingStore,
    pub texts: EmbeddingStore,
    /// Class index per manifest entry, `None` for unplanted items.
    pub planted: Vec<Option<usize>>,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| (x / n) as f32).collect();
        }
    }
}

fn perturb(rng: &mut ChaCha8Rng, base: &[f32], noise: f64) -> Vec<f32> {
    let sd = noise / (base.len() as f64).sqrt();
    let v: Vec<f64> = base
        .iter()
        .map(|b| *b as f64 + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| (x / n) as f32).collect()
}

pub fn label_name(class: usize) -> String {
    format!("place {class:03}")
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    if spec.classes == 0 || spec.dim == 0 {
        return Err(Error::InvalidConfig(
            "synthetic corpus needs classes and a dimension".into(),
        ));
    }
    for (name, v) in [
        ("planted fraction", spec.planted_fraction),
        ("caption fraction", spec.caption_fraction),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidConfig(format!(
                "{name} must lie in [0, 1], got {v}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<String> = (0..spec.classes).map(label_name).collect();
    let mut prompts = EmbeddingStore::with_capacity(spec.dim, spec.classes)?;
    let prompt_rows: Vec<Vec<f32>> = (0..spec.classes)
        .map(|_| unit_gaussian(&mut rng, spec.dim))
        .collect();
    for (label, row) in labels.iter().zip(&prompt_rows) {
        prompts.insert(label.clone(), row)?;
    }

    let mut images = EmbeddingStore::with_capacity(spec.dim, spec.items)?;
    let mut texts = EmbeddingStore::with_capacity(spec.dim, spec.items)?;
    let mut manifest = Vec::with_capacity(spec.items);
    let mut planted = Vec::with_capacity(spec.items);
    for i in 0..spec.items {
        let id = format!("syn{i:07}");
        let class = (rng.random::<f64>() < spec.planted_fraction)
            .then(|| rng.random_range(0..spec.classes));
        let image = match class {
            Some(c) => perturb(&mut rng, &prompt_rows[c], spec.image_noise),
            None => unit_gaussian(&mut rng, spec.dim),
        };
        images.insert(id.clone(), &image)?;
        let captioned = rng.random::<f64>() < spec.caption_fraction;
        if captioned {
            let text = match class {
                Some(c) => perturb(&mut rng, &prompt_rows[c], spec.text_noise),
                None => unit_gaussian(&mut rng, spec.dim),
            };
            texts.insert(id.clone(), &text)?;
        }
        manifest.push(ManifestEntry {
            image_path: format!("images/{id}.jpg"),
            text: if captioned {
                format!("caption of {id}")
            } else {
                String::new()
            },
            split: Split::Unsplit,
            id,
        });
        planted.push(class);
    }
    Ok(SynthCorpus {
        labels,
        manifest,
        prompts,
        images,
        texts,
        planted,
    })
}

/// File locations written by [`SynthCorpus::write_to`].
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub labels: PathBuf,
    pub label_emb: PathBuf,
    pub manifest: PathBuf,
    pub image_emb: PathBuf,
    pub text_emb: PathBuf,
    pub planted: PathBuf,
}

impl SynthPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            labels: dir.join("labels.txt"),
            label_emb: dir.join("labels.zse"),
            manifest: dir.join("manifest.jsonl"),
            image_emb: dir.join("images.zse"),
            text_emb: dir.join("texts.zse"),
            planted: dir.join("planted.jsonl"),
        }
    }
}

impl SynthCorpus {
    pub fn planted_labels(&self) -> Vec<PlantedLabel> {
        self.manifest
            .iter()
            .zip(&self.planted)
            .filter_map(|(e, c)| {
                c.map(|c| PlantedLabel {
                    id: e.id.clone(),
                    label: self.labels[c].clone(),
                })
            })
            .collect()
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<SynthPaths> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
        let paths = SynthPaths::in_dir(dir);
        let mut labels = self.labels.join("\n");
        labels.push('\n');
        fs::write(&paths.labels, labels).map_err(Error::io(&paths.labels))?;
        write_embeddings(&self.prompts, &paths.label_emb)?;
        write_manifest(&self.manifest, &paths.manifest)?;
        write_embeddings(&self.images, &paths.image_emb)?;
        write_embeddings(&self.texts, &paths.text_emb)?;
        crate::io::write_jsonl(&paths.planted, &self.planted_labels())?;
        Ok(paths)
    }
}
