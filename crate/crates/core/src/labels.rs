//! Scene taxonomy and label-to-prompt expansion.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::embeddings::EmbeddingLookup;
use crate::numeric;

/// How a raw class name is turned into the text the encoder sees.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PromptTemplate {
    /// "A photo of a bakery shop", "A photo of the outdoor of a cathedral".
    #[default]
    Natural,
    /// The raw class name, unchanged.
    Raw,
    /// A user pattern; every `{label}` is replaced by the raw class name.
    Pattern(String),
}

pub const LABEL_PLACEHOLDER: &str = "{label}";

impl FromStr for PromptTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(Self::Natural),
            "raw" => Ok(Self::Raw),
            p if p.contains(LABEL_PLACEHOLDER) => Ok(Self::Pattern(p.to_owned())),
            other => Err(Error::InvalidConfig(format!(
                "template must be `natural`, `raw` or a pattern containing {LABEL_PLACEHOLDER}, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for PromptTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Natural => f.write_str("natural"),
            Self::Raw => f.write_str("raw"),
            Self::Pattern(p) => f.write_str(p),
        }
    }
}

fn article_for(word: &str) -> &'static str {
    match word.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// Expands a raw class name into its prompt text.
pub fn prompt_expand(raw_name: &str, template: &PromptTemplate) -> Result<String> {
    if raw_name.trim().is_empty() {
        return Err(Error::EmptyLabel);
    }
    Ok(match template {
        PromptTemplate::Raw => raw_name.to_owned(),
        PromptTemplate::Pattern(p) => p.replace(LABEL_PLACEHOLDER, raw_name),
        PromptTemplate::Natural => {
            let qualified = ["outdoor", "indoor"].iter().find_map(|q| {
                raw_name
                    .strip_prefix(q)
                    .and_then(|rest| rest.strip_prefix(' '))
                    .filter(|rest| !rest.trim().is_empty())
                    .map(|rest| (*q, rest))
            });
            match qualified {
                Some((q, rest)) => format!("A photo of the {q} of {} {rest}", article_for(rest)),
                None => format!("A photo of {} {raw_name}", article_for(raw_name)),
            }
        }
    })
}

/// Normalises one line of a Places-style category list.
///
/// `cathedral/outdoor` becomes `outdoor cathedral`, `bakery/shop` becomes
/// `bakery shop`, and underscores become spaces. The `/c/` index prefix of
/// Places-style category files (`/c/cathedral/outdoor`) is dropped.
pub fn canonicalize_label(line: &str) -> String {
    let line = line.trim();
    let line = match line.as_bytes() {
        [b'/', c, b'/', ..] if c.is_ascii_lowercase() => &line[3..],
        _ => line,
    };
    let cleaned = line.replace('_', " ");
    let joined = match cleaned.rsplit_once('/') {
        Some((head, q @ ("outdoor" | "indoor"))) => format!("{q} {head}"),
        _ => cleaned,
    };
    joined
        .split(['/', ' '])
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelClass {
    pub id: usize,
    pub raw_name: String,
    pub prompt: String,
}

/// Row-major prompt embedding matrix, one row per class.
#[derive(Debug, Clone)]
pub(crate) struct PromptMatrix {
    pub dim: usize,
    pub rows: Vec<f32>,
    pub inv_norms: Vec<f64>,
}

impl PromptMatrix {
    #[inline]
    pub fn row(&self, class: usize) -> &[f32] {
        &self.rows[class * self.dim..(class + 1) * self.dim]
    }
}

/// An ordered class list. Class order is the axis of every probability
/// vector computed against it.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    name: String,
    classes: Vec<LabelClass>,
    embeddings: Option<PromptMatrix>,
}

impl Taxonomy {
    pub fn from_labels<I, S>(
        name: impl Into<String>,
        labels: I,
        template: &PromptTemplate,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut classes = Vec::new();
        for raw in labels {
            let raw_name = canonicalize_label(raw.as_ref());
            if raw_name.is_empty() {
                return Err(Error::EmptyLabel);
            }
            if !seen.insert(raw_name.clone()) {
                return Err(Error::DuplicateLabel(raw_name));
            }
            let prompt = prompt_expand(&raw_name, template)?;
            classes.push(LabelClass {
                id: classes.len(),
                raw_name,
                prompt,
            });
        }
        if classes.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            name: name.into(),
            classes,
            embeddings: None,
        })
    }

    /// Reads a category list, one label per line. Blank lines are ignored.
    pub fn load(path: impl AsRef<Path>, template: &PromptTemplate) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.is_empty() {
            return Err(Error::EmptyFile(path.to_owned()));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_labels(name, lines, template)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn classes(&self) -> &[LabelClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, id: usize) -> Option<&LabelClass> {
        self.classes.get(id)
    }

    pub fn id_of(&self, raw_name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.raw_name == raw_name)
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embeddings.as_ref().map(|m| m.dim)
    }

    pub fn prompt_embedding(&self, id: usize) -> Option<&[f32]> {
        match &self.embeddings {
            Some(m) if id < self.classes.len() => Some(m.row(id)),
            _ => None,
        }
    }

    pub(crate) fn prompt_matrix(&self) -> Result<&PromptMatrix> {
        self.embeddings.as_ref().ok_or(Error::EmbeddingsNotAttached)
    }

    /// Binds one prompt embedding to every class, looked up by raw name first
    /// and by prompt text second.
    pub fn attach_prompt_embeddings(mut self, store: &impl EmbeddingLookup) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut rows = Vec::new();
        let mut inv_norms = Vec::with_capacity(self.classes.len());
        for class in &self.classes {
            let (key, v) = store
                .lookup(&class.raw_name)
                .map(|v| (&class.raw_name, v))
                .or_else(|| store.lookup(&class.prompt).map(|v| (&class.prompt, v)))
                .ok_or_else(|| Error::MissingEmbedding(class.raw_name.clone()))?;
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: v.len(),
                    })
                }
                _ => {}
            }
            let norm = numeric::l2_norm(v);
            if !numeric::norm_is_unit(norm) {
                return Err(Error::NotUnitNorm {
                    id: key.clone(),
                    norm,
                });
            }
            rows.extend_from_slice(v);
            inv_norms.push(1.0 / norm);
        }
        self.embeddings = Some(PromptMatrix {
            dim: dim.expect("taxonomy is non-empty"),
            rows,
            inv_norms,
        });
        Ok(self)
    }

    /// Writes the tab-separated `id, raw_name, prompt` audit file that the
    /// embedding exporter reads its prompt text from.
    pub fn write_prompt_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::WriterBuilder::new()
            .delimiter(b'\t')
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        for c in &self.classes {
            w.serialize(c).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(Error::io(path))
    }

    /// Reloads a prompt dump. Ids must be dense and in file order.
    pub fn read_prompt_dump(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let mut classes: Vec<LabelClass> = Vec::new();
        let mut seen = HashSet::new();
        for (i, row) in r.deserialize::<LabelClass>().enumerate() {
            let line = i + 2;
            let class = row.map_err(|e| Error::MalformedLine {
                line,
                reason: e.to_string(),
            })?;
            if class.id != classes.len() {
                return Err(Error::MalformedLine {
                    line,
                    reason: format!("expected id {}, found {}", classes.len(), class.id),
                });
            }
            if !seen.insert(class.raw_name.clone()) {
                return Err(Error::DuplicateLabel(class.raw_name));
            }
            classes.push(class);
        }
        if classes.is_empty() {
            return Err(Error::EmptyFile(path.to_owned()));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self {
            name,
            classes,
            embeddings: None,
        })
    }
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        other => Error::MalformedLine {
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}
