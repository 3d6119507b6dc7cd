//! Annotation service: hands out sampled predictions, records verdicts and
//! reports live progress and accuracy.
//!
//! Endpoints:
//!
//! * `GET /api/sample/next?annotator=NAME`: the annotator's pending item, or
//!   204 once nothing is left
//! * `POST /api/verdict`: `{id, predicted_label, verdict, annotator}`, 204 once
//!   the verdict is on disk
//! * `GET /api/progress`, `GET /api/report`
//! * `GET /images/<path>`: files under the image root
//! * anything else is served from the UI directory, if one is configured

use std::collections::{HashMap, HashSet};
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evaluation::{
    mean_top_prob_stats, per_class_accuracy, read_sample_plan, SamplePlan, ScoredItem,
};
use crate::io::decisions::{read_decisions, DecisionRecord};
use crate::io::manifest::read_manifest;
use crate::io::verdicts::{
    append_verdict, now_utc_seconds, read_verdicts_or_empty, resolve_verdicts, Judgement, Verdict,
};

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub plan: PathBuf,
    pub decisions: PathBuf,
    pub verdicts: PathBuf,
    pub image_root: PathBuf,
    /// Maps ids to image paths; without it images are looked up by id.
    pub manifest: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
}

struct Item {
    id: String,
    predicted_label: String,
    image_path: String,
    decision: DecisionRecord,
}

struct Inner {
    items: Vec<Item>,
    index: HashMap<String, usize>,
    verdicts: Vec<Verdict>,
    /// Items with at least one verdict of any kind.
    labeled: HashSet<usize>,
    /// (id, annotator) pairs that already hold a hit or miss.
    judged: HashMap<(String, String), Judgement>,
    /// Pending item per annotator.
    assigned: HashMap<String, usize>,
}

/// Shared service state. Cloning shares the same underlying store.
#[derive(Clone)]
pub struct ReviewState {
    inner: Arc<Mutex<Inner>>,
    verdict_path: Arc<PathBuf>,
    image_root: Arc<PathBuf>,
    ui_dir: Option<Arc<PathBuf>>,
}

impl ReviewState {
    pub fn load(cfg: &ServeConfig) -> Result<Self> {
        let plan = read_sample_plan(&cfg.plan)?;
        let decisions = read_decisions(&cfg.decisions)?;
        let paths: Option<HashMap<String, String>> = match &cfg.manifest {
            Some(p) => Some(
                read_manifest(p)?
                    .into_iter()
                    .map(|e| (e.id, e.image_path))
                    .collect(),
            ),
            None => None,
        };
        let verdicts = read_verdicts_or_empty(&cfg.verdicts)?;
        Self::from_parts(&plan, decisions, paths.as_ref(), verdicts, cfg)
    }

    fn from_parts(
        plan: &SamplePlan,
        decisions: Vec<DecisionRecord>,
        image_paths: Option<&HashMap<String, String>>,
        verdicts: Vec<Verdict>,
        cfg: &ServeConfig,
    ) -> Result<Self> {
        let mut by_id: HashMap<String, DecisionRecord> =
            decisions.into_iter().map(|d| (d.id.clone(), d)).collect();
        let mut items = Vec::with_capacity(plan.items.len());
        for s in &plan.items {
            let decision = by_id
                .remove(&s.id)
                .ok_or_else(|| Error::InvariantViolation {
                    id: s.id.clone(),
                    reason: "sampled id has no decision".into(),
                })?;
            let image_path = match image_paths {
                Some(m) => m
                    .get(&s.id)
                    .cloned()
                    .ok_or_else(|| Error::MissingEmbedding(s.id.clone()))?,
                None => s.id.clone(),
            };
            items.push(Item {
                id: s.id.clone(),
                predicted_label: s.predicted_label.clone(),
                image_path,
                decision,
            });
        }
        let index = items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.id.clone(), i))
            .collect();
        let mut inner = Inner {
            items,
            index,
            verdicts: Vec::new(),
            labeled: HashSet::new(),
            judged: HashMap::new(),
            assigned: HashMap::new(),
        };
        for v in verdicts {
            inner.record(v);
        }
        Ok(Self {
            inner: Arc::new(Mutex::new(inner)),
            verdict_path: Arc::new(cfg.verdicts.clone()),
            image_root: Arc::new(cfg.image_root.clone()),
            ui_dir: cfg.ui_dir.clone().map(Arc::new),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        // A panic mid-request cannot leave the maps half-updated in a way that
        // matters more than refusing every later request would.
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl Inner {
    fn record(&mut self, v: Verdict) {
        if let Some(&i) = self.index.get(&v.id) {
            self.labeled.insert(i);
        }
        if v.verdict != Judgement::Skip {
            self.judged
                .insert((v.id.clone(), v.annotator.clone()), v.verdict);
        }
        self.verdicts.push(v);
    }

    fn remaining(&self) -> usize {
        self.items.len() - self.labeled.len()
    }

    fn next_for(&mut self, annotator: &str) -> Option<usize> {
        if let Some(&i) = self.assigned.get(annotator) {
            if !self.labeled.contains(&i) {
                return Some(i);
            }
        }
        let taken: HashSet<usize> = self
            .assigned
            .iter()
            .filter(|(a, _)| a.as_str() != annotator)
            .map(|(_, i)| *i)
            .collect();
        let next = (0..self.items.len()).find(|i| !self.labeled.contains(i) && !taken.contains(i));
        match next {
            Some(i) => {
                self.assigned.insert(annotator.to_owned(), i);
            }
            None => {
                self.assigned.remove(annotator);
            }
        }
        next
    }

    fn scored(&self) -> Vec<ScoredItem> {
        let resolved = resolve_verdicts(&self.verdicts);
        self.items
            .iter()
            .map(|it| ScoredItem {
                id: it.id.clone(),
                predicted_label: it.predicted_label.clone(),
                max_prob: it.decision.max_prob(),
                judgement: resolved.get(it.id.as_str()).copied(),
            })
            .collect()
    }
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

#[derive(Serialize)]
struct NextItem<'a> {
    id: &'a str,
    image_url: String,
    predicted_label: &'a str,
    top: &'a [(String, f64)],
    remaining: usize,
}

#[derive(Deserialize)]
struct VerdictBody {
    id: String,
    predicted_label: String,
    verdict: Judgement,
    annotator: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn encode_url_path(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    for b in path.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' | b'/' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

async fn next_item(State(state): State<ReviewState>, Query(q): Query<NextQuery>) -> Response {
    let Some(annotator) = q.annotator.filter(|a| !a.trim().is_empty()) else {
        return error(StatusCode::BAD_REQUEST, "annotator is required");
    };
    let mut inner = state.lock();
    let Some(i) = inner.next_for(&annotator) else {
        return StatusCode::NO_CONTENT.into_response();
    };
    let item = &inner.items[i];
    Json(NextItem {
        id: &item.id,
        image_url: format!("/images/{}", encode_url_path(&item.image_path)),
        predicted_label: &item.predicted_label,
        top: &item.decision.top,
        remaining: inner.remaining(),
    })
    .into_response()
}

async fn post_verdict(State(state): State<ReviewState>, body: Bytes) -> Response {
    let body: VerdictBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed verdict: {e}")),
    };
    if body.annotator.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "annotator is required");
    }
    let mut inner = state.lock();
    let Some(&i) = inner.index.get(&body.id) else {
        return error(
            StatusCode::NOT_FOUND,
            format!("id {:?} is not in the sample", body.id),
        );
    };
    if inner.items[i].predicted_label != body.predicted_label {
        return error(
            StatusCode::BAD_REQUEST,
            format!(
                "id {:?} was sampled as {:?}, not {:?}",
                body.id, inner.items[i].predicted_label, body.predicted_label
            ),
        );
    }
    // Retries and late skips for an item this annotator already judged are
    // acknowledged without touching the log.
    if let Some(&prior) = inner.judged.get(&(body.id.clone(), body.annotator.clone())) {
        return if body.verdict == prior || body.verdict == Judgement::Skip {
            StatusCode::NO_CONTENT.into_response()
        } else {
            error(
                StatusCode::CONFLICT,
                format!(
                    "{:?} already judged {:?} by {:?}",
                    body.id, prior, body.annotator
                ),
            )
        };
    }
    let verdict = Verdict {
        id: body.id,
        predicted_label: body.predicted_label,
        verdict: body.verdict,
        annotator: body.annotator,
        timestamp: now_utc_seconds(),
    };
    if let Err(e) = append_verdict(&verdict, state.verdict_path.as_path()) {
        log::error!("{e}");
        return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    }
    if inner.assigned.get(&verdict.annotator) == Some(&i) {
        inner.assigned.remove(&verdict.annotator);
    }
    inner.record(verdict);
    StatusCode::NO_CONTENT.into_response()
}

async fn progress(State(state): State<ReviewState>) -> Response {
    let inner = state.lock();
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for (i, it) in inner.items.iter().enumerate() {
        let c = counts.entry(&it.predicted_label).or_insert_with(|| {
            order.push(&it.predicted_label);
            (0, 0)
        });
        c.1 += 1;
        if inner.labeled.contains(&i) {
            c.0 += 1;
        }
    }
    let per_class: Vec<(&str, usize, usize)> = order
        .iter()
        .map(|l| (*l, counts[l].0, counts[l].1))
        .collect();
    Json(json!({
        "labeled": inner.labeled.len(),
        "total": inner.items.len(),
        "per_class": per_class,
    }))
    .into_response()
}

async fn report(State(state): State<ReviewState>) -> Response {
    let judged: Vec<ScoredItem> = state
        .lock()
        .scored()
        .into_iter()
        .filter(|s| matches!(s.judgement, Some(Judgement::Hit | Judgement::Miss)))
        .collect();
    let (classes, average, pooled) = match per_class_accuracy(&judged) {
        Ok(r) => (json!(r.classes), json!(r.average), json!(r.pooled)),
        Err(_) => (json!([]), json!(null), json!(null)),
    };
    let (hit_mean, miss_mean) = match mean_top_prob_stats(&judged) {
        Ok((h, m)) => (json!(h), json!(m)),
        Err(_) => {
            let mean = |j: Judgement| {
                let v: Vec<f64> = judged
                    .iter()
                    .filter(|s| s.judgement == Some(j))
                    .map(|s| s.max_prob)
                    .collect();
                if v.is_empty() {
                    json!(null)
                } else {
                    json!(v.iter().sum::<f64>() / v.len() as f64)
                }
            };
            (mean(Judgement::Hit), mean(Judgement::Miss))
        }
    };
    Json(json!({
        "judged": judged.len(),
        "classes": classes,
        "average_accuracy": average,
        "pooled_accuracy": pooled,
        "mean_top_prob_hit": hit_mean,
        "mean_top_prob_miss": miss_mean,
    }))
    .into_response()
}

/// Resolves a request path below `root`, refusing anything that could step
/// outside it.
fn confined(root: &Path, requested: &str) -> Option<PathBuf> {
    let rel = Path::new(requested);
    let mut out = root.to_path_buf();
    for c in rel.components() {
        match c {
            Component::Normal(part) => out.push(part),
            Component::CurDir => {}
            _ => return None,
        }
    }
    Some(out)
}

fn content_type(path: &Path) -> &'static str {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("png") => "image/png",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("svg") => "image/svg+xml",
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        _ => "application/octet-stream",
    }
}

async fn send_file(root: &Path, requested: &str) -> Response {
    let Some(path) = confined(root, requested) else {
        return error(StatusCode::BAD_REQUEST, "path escapes the served directory");
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(e)
            if matches!(
                e.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::IsADirectory
            ) =>
        {
            error(StatusCode::NOT_FOUND, format!("{requested}: not found"))
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn image(State(state): State<ReviewState>, UrlPath(path): UrlPath<String>) -> Response {
    send_file(&state.image_root, &path).await
}

async fn static_asset(State(state): State<ReviewState>, uri: Uri) -> Response {
    let Some(dir) = &state.ui_dir else {
        return error(StatusCode::NOT_FOUND, "no such endpoint");
    };
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() || rel.ends_with('/') {
        format!("{rel}index.html")
    } else {
        rel.to_owned()
    };
    send_file(dir, &rel).await
}

pub fn router(state: ReviewState) -> Router {
    Router::new()
        .route("/api/sample/next", get(next_item))
        .route("/api/verdict", post(post_verdict))
        .route("/api/progress", get(progress))
        .route("/api/report", get(report))
        .route("/images/{*path}", get(image))
        .fallback(static_asset)
        .with_state(state)
}

/// Serves until interrupted. Binding is left to the caller so that an
/// occupied port can be told apart from other failures.
pub async fn run(listener: tokio::net::TcpListener, state: ReviewState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confinement() {
        let root = Path::new("/srv/img");
        assert_eq!(
            confined(root, "a/b.jpg"),
            Some(PathBuf::from("/srv/img/a/b.jpg"))
        );
        assert_eq!(
            confined(root, "./a.jpg"),
            Some(PathBuf::from("/srv/img/a.jpg"))
        );
        assert_eq!(confined(root, "../etc/passwd"), None);
        assert_eq!(confined(root, "a/../../x"), None);
        assert_eq!(confined(root, "/etc/passwd"), None);
    }

    #[test]
    fn url_encoding() {
        assert_eq!(encode_url_path("a b/c%.jpg"), "a%20b/c%25.jpg");
    }
}
