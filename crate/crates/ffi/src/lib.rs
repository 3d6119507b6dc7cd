//! C ABI over the zeroshot core.
//!
//! Every fallible function returns a [`ZsStatus`]; on failure the message is
//! kept per thread and can be fetched with [`zs_last_error_message`]. Objects
//! cross the boundary as opaque handles that the caller releases with the
//! matching `_free` function. Panics never unwind into C; they surface as
//! `ZS_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use zeroshot::classifier::{classify_embedding, ClassificationConfig};
use zeroshot::ensemble::{fuse_conditional, EnsembleConfig};
use zeroshot::evaluation::{threshold_sweep, ScoredItem};
use zeroshot::io::embeddings::{read_embeddings_with, EmbeddingStore, ReadOptions};
use zeroshot::io::verdicts::Judgement;
use zeroshot::labels::{prompt_expand, PromptTemplate, Taxonomy};
use zeroshot::numeric::{convex_blend, cosine_similarity, softmax_scaled, ProbVector};
use zeroshot::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ZeroVector = 4,
    NotUnitNorm = 5,
    MissingEmbedding = 6,
    MalformedInput = 7,
    MissingVerdict = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Judgement codes for [`zs_threshold_sweep`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZsJudgement {
    Hit = 0,
    Miss = 1,
    Skip = 2,
}

/// One threshold of a sweep. `ratio` is meaningful only when `has_ratio`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZsSweepRow {
    pub threshold: f64,
    pub classified: u64,
    pub hits: u64,
    pub hit_rate: f64,
    pub errors: u64,
    pub error_rate: f64,
    pub ratio: f64,
    pub has_ratio: bool,
}

/// Opaque embedding store.
pub struct ZsEmbeddingStore {
    inner: EmbeddingStore,
}

/// Opaque label taxonomy.
pub struct ZsTaxonomy {
    inner: Option<Taxonomy>,
    names: Vec<CString>,
    prompts: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ZsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } => ZsStatus::DimensionMismatch,
            Error::ZeroVector => ZsStatus::ZeroVector,
            Error::NotUnitNorm { .. } => ZsStatus::NotUnitNorm,
            Error::MissingEmbedding(_) => ZsStatus::MissingEmbedding,
            Error::MissingVerdict { .. } => ZsStatus::MissingVerdict,
            Error::Io { .. } => ZsStatus::Io,
            Error::MalformedLine { .. }
            | Error::BadMagic(_)
            | Error::UnsupportedVersion(_)
            | Error::BadHeader(_)
            | Error::CountMismatch { .. }
            | Error::DuplicateId(_)
            | Error::DuplicateLabel(_)
            | Error::EmptyFile(_)
            | Error::InvariantViolation { .. } => ZsStatus::MalformedInput,
            _ => ZsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: ZsStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_last_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("interior NULs removed"));
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ZsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            ZsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("panic inside zeroshot".into()));
            ZsStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(ZsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(ZsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(ZsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn str_in<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(ZsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ZsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn template_in(p: *const c_char) -> Result<PromptTemplate, Failure> {
    if p.is_null() {
        return Ok(PromptTemplate::Natural);
    }
    Ok(str_in(p, "template")?.parse::<PromptTemplate>()?)
}

fn prob_vector(v: &[f64]) -> Result<ProbVector, Failure> {
    Ok(ProbVector::new(v.to_vec())?)
}

fn c_string(s: &str) -> CString {
    CString::new(s.replace('\0', " ")).expect("interior NULs removed")
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn zs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Cosine similarity of two `len`-long vectors, clamped to [-1, 1].
#[no_mangle]
pub unsafe extern "C" fn zs_cosine_similarity(
    a: *const f32,
    b: *const f32,
    len: usize,
    out: *mut f64,
) -> ZsStatus {
    guard(|| {
        let (a, b) = (slice_in(a, len, "a")?, slice_in(b, len, "b")?);
        *out_ref(out, "out")? = cosine_similarity(a, b)?;
        Ok(())
    })
}

/// Softmax of `logits * scale`, written to `out` (same length).
#[no_mangle]
pub unsafe extern "C" fn zs_softmax(
    logits: *const f64,
    len: usize,
    scale: f64,
    out: *mut f64,
) -> ZsStatus {
    guard(|| {
        let p = softmax_scaled(slice_in(logits, len, "logits")?, scale)?;
        slice_out(out, len, "out")?.copy_from_slice(&p);
        Ok(())
    })
}

/// `w * p + (1 - w) * q` for probability vectors `p` and `q`.
#[no_mangle]
pub unsafe extern "C" fn zs_convex_blend(
    p: *const f64,
    q: *const f64,
    len: usize,
    w: f64,
    out: *mut f64,
) -> ZsStatus {
    guard(|| {
        let p = prob_vector(slice_in(p, len, "p")?)?;
        let q = prob_vector(slice_in(q, len, "q")?)?;
        let r = convex_blend(&p, &q, w)?;
        slice_out(out, len, "out")?.copy_from_slice(&r);
        Ok(())
    })
}

/// Image distribution when its maximum reaches `gate`, otherwise the blend
/// with weight `w_image`. `used_text` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn zs_fuse_conditional(
    p_img: *const f64,
    p_txt: *const f64,
    len: usize,
    w_image: f64,
    gate: f64,
    out: *mut f64,
    used_text: *mut bool,
) -> ZsStatus {
    guard(|| {
        let cfg = EnsembleConfig {
            w_image,
            gate,
            ..Default::default()
        };
        cfg.validate()?;
        let p = prob_vector(slice_in(p_img, len, "p_img")?)?;
        let q = prob_vector(slice_in(p_txt, len, "p_txt")?)?;
        let (r, used) = fuse_conditional(&p, &q, &cfg)?;
        slice_out(out, len, "out")?.copy_from_slice(&r);
        if let Some(u) = used_text.as_mut() {
            *u = used;
        }
        Ok(())
    })
}

/// Expands `raw_name` with `template` (`"natural"`, `"raw"`, a pattern
/// containing `{label}`, or NULL for natural) into `buf`. `needed` receives
/// the prompt length without the terminator; when `cap` is too small nothing
/// is written and `ZS_STATUS_BUFFER_TOO_SMALL` is returned.
#[no_mangle]
pub unsafe extern "C" fn zs_prompt_expand(
    raw_name: *const c_char,
    template_: *const c_char,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> ZsStatus {
    guard(|| {
        let prompt = prompt_expand(str_in(raw_name, "raw_name")?, &template_in(template_)?)?;
        let bytes = prompt.as_bytes();
        if let Some(n) = needed.as_mut() {
            *n = bytes.len();
        }
        if cap <= bytes.len() {
            return Err(fail(
                ZsStatus::BufferTooSmall,
                format!("prompt needs {} bytes, buffer holds {cap}", bytes.len() + 1),
            ));
        }
        let dst = slice_out(buf.cast::<u8>(), cap, "buf")?;
        dst[..bytes.len()].copy_from_slice(bytes);
        dst[bytes.len()] = 0;
        Ok(())
    })
}

/// Reads a ZSE1 embedding file. With `renormalize` off-norm records are
/// rescaled instead of rejected.
#[no_mangle]
pub unsafe extern "C" fn zs_embeddings_read(
    path: *const c_char,
    renormalize: bool,
    out: *mut *mut ZsEmbeddingStore,
) -> ZsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = read_embeddings_with(str_in(path, "path")?, ReadOptions { renormalize })?;
        *out = Box::into_raw(Box::new(ZsEmbeddingStore { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_embeddings_len(store: *const ZsEmbeddingStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.len())
}

#[no_mangle]
pub unsafe extern "C" fn zs_embeddings_dim(store: *const ZsEmbeddingStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.dim())
}

/// Borrows the vector stored under `id`; it stays valid until the store is
/// freed.
#[no_mangle]
pub unsafe extern "C" fn zs_embeddings_get(
    store: *const ZsEmbeddingStore,
    id: *const c_char,
    out: *mut *const f32,
) -> ZsStatus {
    guard(|| {
        let store = store
            .as_ref()
            .ok_or_else(|| fail(ZsStatus::NullPointer, "store is null"))?;
        let out = out_ref(out, "out")?;
        let id = str_in(id, "id")?;
        let v = store
            .inner
            .get(id)
            .ok_or(Error::MissingEmbedding(id.to_owned()))?;
        *out = v.as_ptr();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_embeddings_free(store: *mut ZsEmbeddingStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Loads a label list (one class per line) and expands its prompts.
#[no_mangle]
pub unsafe extern "C" fn zs_taxonomy_load(
    path: *const c_char,
    template_: *const c_char,
    out: *mut *mut ZsTaxonomy,
) -> ZsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let tax = Taxonomy::load(str_in(path, "path")?, &template_in(template_)?)?;
        let names = tax
            .classes()
            .iter()
            .map(|c| c_string(&c.raw_name))
            .collect();
        let prompts = tax.classes().iter().map(|c| c_string(&c.prompt)).collect();
        *out = Box::into_raw(Box::new(ZsTaxonomy {
            inner: Some(tax),
            names,
            prompts,
        }));
        Ok(())
    })
}

/// Attaches prompt embeddings, keyed by raw name or by prompt text. On
/// failure the taxonomy is left as it was.
#[no_mangle]
pub unsafe extern "C" fn zs_taxonomy_attach(
    tax: *mut ZsTaxonomy,
    store: *const ZsEmbeddingStore,
) -> ZsStatus {
    guard(|| {
        let tax = out_ref(tax, "taxonomy")?;
        let store = store
            .as_ref()
            .ok_or_else(|| fail(ZsStatus::NullPointer, "store is null"))?;
        let current = tax
            .inner
            .take()
            .expect("taxonomy handle always holds a value");
        let backup = current.clone();
        match current.attach_prompt_embeddings(&store.inner) {
            Ok(t) => {
                tax.inner = Some(t);
                Ok(())
            }
            Err(e) => {
                tax.inner = Some(backup);
                Err(e.into())
            }
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_taxonomy_len(tax: *const ZsTaxonomy) -> usize {
    tax.as_ref().map_or(0, |t| t.names.len())
}

/// Raw class name of class `index`, or NULL when out of range.
#[no_mangle]
pub unsafe extern "C" fn zs_taxonomy_label(tax: *const ZsTaxonomy, index: usize) -> *const c_char {
    tax.as_ref()
        .and_then(|t| t.names.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Prompt text of class `index`, or NULL when out of range.
#[no_mangle]
pub unsafe extern "C" fn zs_taxonomy_prompt(tax: *const ZsTaxonomy, index: usize) -> *const c_char {
    tax.as_ref()
        .and_then(|t| t.prompts.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn zs_taxonomy_free(tax: *mut ZsTaxonomy) {
    if !tax.is_null() {
        drop(Box::from_raw(tax));
    }
}

/// Class distribution of one image embedding. `probs` must hold exactly
/// `zs_taxonomy_len(tax)` values.
#[no_mangle]
pub unsafe extern "C" fn zs_classify(
    tax: *const ZsTaxonomy,
    embedding: *const f32,
    dim: usize,
    scale: f64,
    probs: *mut f64,
    probs_len: usize,
) -> ZsStatus {
    guard(|| {
        let tax = tax
            .as_ref()
            .and_then(|t| t.inner.as_ref())
            .ok_or_else(|| fail(ZsStatus::NullPointer, "taxonomy is null"))?;
        if probs_len != tax.len() {
            return Err(Error::DimensionMismatch {
                expected: tax.len(),
                found: probs_len,
            }
            .into());
        }
        let cfg = ClassificationConfig {
            scale,
            ..Default::default()
        };
        cfg.validate()?;
        let p = classify_embedding(slice_in(embedding, dim, "embedding")?, tax, &cfg)?;
        slice_out(probs, probs_len, "probs")?.copy_from_slice(&p);
        Ok(())
    })
}

/// Hit/error statistics of `n` reviewed items (top probability plus a
/// [`ZsJudgement`] code each) at `n_thresholds` thresholds. `rows` receives
/// one row per threshold.
#[no_mangle]
pub unsafe extern "C" fn zs_threshold_sweep(
    max_probs: *const f64,
    judgements: *const u8,
    n: usize,
    thresholds: *const f64,
    n_thresholds: usize,
    rows: *mut ZsSweepRow,
) -> ZsStatus {
    guard(|| {
        let probs = slice_in(max_probs, n, "max_probs")?;
        let codes = slice_in(judgements, n, "judgements")?;
        let thresholds = slice_in(thresholds, n_thresholds, "thresholds")?;
        let items = probs
            .iter()
            .zip(codes)
            .enumerate()
            .map(|(i, (&p, &c))| {
                let judgement = match c {
                    0 => Judgement::Hit,
                    1 => Judgement::Miss,
                    2 => Judgement::Skip,
                    other => {
                        return Err(fail(
                            ZsStatus::InvalidArgument,
                            format!("item {i}: judgement code {other}"),
                        ))
                    }
                };
                Ok(ScoredItem {
                    id: i.to_string(),
                    predicted_label: String::new(),
                    max_prob: p,
                    judgement: Some(judgement),
                })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let table = threshold_sweep(&items, thresholds)?;
        for (dst, r) in slice_out(rows, n_thresholds, "rows")?
            .iter_mut()
            .zip(&table.rows)
        {
            *dst = ZsSweepRow {
                threshold: r.threshold,
                classified: r.classified as u64,
                hits: r.hits as u64,
                hit_rate: r.hit_rate,
                errors: r.errors as u64,
                error_rate: r.error_rate,
                ratio: r.ratio.unwrap_or(f64::NAN),
                has_ratio: r.ratio.is_some(),
            };
        }
        Ok(())
    })
}
