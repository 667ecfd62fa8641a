use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::OwnedMutexGuard;

use crate::error::ApiError;
use crate::session::{default_alpha, CaptionRequest, Session, SessionState, SessionStore};

pub struct AppState {
    store: SessionStore,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    create: tokio::sync::Mutex<()>,
}

type Shared = Arc<AppState>;

impl AppState {
    pub fn new(store: SessionStore) -> Shared {
        Arc::new(Self {
            store,
            locks: Mutex::new(HashMap::new()),
            create: tokio::sync::Mutex::new(()),
        })
    }

    /// Single writer per session: mutations hold this guard for their whole duration.
    async fn lock(&self, id: &str) -> OwnedMutexGuard<()> {
        let m = self
            .locks
            .lock()
            .expect("lock table poisoned")
            .entry(id.to_owned())
            .or_default()
            .clone();
        m.lock_owned().await
    }
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/caption", post(post_caption))
        .route("/sessions/{id}/exemplar", post(post_exemplar))
        .route("/sessions/{id}/propagate", post(post_propagate))
        .route("/sessions/{id}/candidates", get(get_candidates))
        .route("/sessions/{id}/result/{version}", get(get_result))
        .route("/sessions/{id}/metrics", get(get_metrics))
        .route("/sessions/{id}/frames/{*path}", get(get_frame))
        .with_state(state)
}

/// Parses a JSON body; any malformed or mistyped body is a 422. An empty body
/// parses as `{}`.
fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let raw: &[u8] = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}"
    } else {
        body
    };
    serde_json::from_slice(raw).map_err(|e| ApiError::unprocessable(format!("invalid body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker panicked: {e}")))?
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    clip: PathBuf,
}

async fn create_session(State(st): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateBody = parse_body(&body)?;
    let _guard = st.create.lock().await;
    let store = st.store.clone();
    let s = blocking(move || store.create(&req.clip)).await?;
    tracing::info!(id = %s.id, clip = %s.clip.display(), "session created");
    Ok((StatusCode::CREATED, Json(s)).into_response())
}

async fn get_session(State(st): State<Shared>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    Ok(Json(st.store.load(&id)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CandidateView {
    pub index: usize,
    pub raw_score: f64,
    pub normalized_score: f64,
    pub selected: bool,
    pub url: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CandidatesResponse {
    pub state: SessionState,
    pub caption: String,
    pub scorer_id: String,
    pub auto_index: usize,
    pub selected_index: usize,
    pub candidates: Vec<CandidateView>,
}

fn candidates_view(s: &Session) -> Result<CandidatesResponse, ApiError> {
    let c = s
        .candidates
        .as_ref()
        .ok_or_else(|| ApiError::conflict("no candidates yet; post a caption first"))?;
    let selected = s.exemplar.as_ref().map_or(c.auto_index, |e| e.index);
    Ok(CandidatesResponse {
        state: s.state,
        caption: c.caption.clone(),
        scorer_id: c.scorer_id.clone(),
        auto_index: c.auto_index,
        selected_index: selected,
        candidates: (0..c.len())
            .map(|i| CandidateView {
                index: i,
                raw_score: c.raw_scores[i],
                normalized_score: c.normalized_scores[i],
                selected: i == selected,
                url: format!("/sessions/{}/frames/candidates/{i}", s.id),
            })
            .collect(),
    })
}

async fn post_caption(
    State(st): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<CandidatesResponse>, ApiError> {
    let req: CaptionRequest = parse_body(&body)?;
    let _guard = st.lock(&id).await;
    let store = st.store.clone();
    let s = blocking(move || {
        let mut s = store.load(&id)?;
        store.caption(&mut s, &req)?;
        Ok(s)
    })
    .await?;
    Ok(Json(candidates_view(&s)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExemplarBody {
    index: usize,
}

async fn post_exemplar(
    State(st): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ccol_core::ExemplarChoice>, ApiError> {
    let req: ExemplarBody = parse_body(&body)?;
    let _guard = st.lock(&id).await;
    let store = st.store.clone();
    let s = blocking(move || {
        let mut s = store.load(&id)?;
        store.override_exemplar(&mut s, req.index)?;
        Ok(s)
    })
    .await?;
    Ok(Json(s.exemplar.expect("set by override")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PropagateBody {
    #[serde(default = "default_alpha")]
    alpha: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PropagateResponse {
    pub version: u32,
    pub state: SessionState,
}

async fn post_propagate(
    State(st): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<PropagateResponse>, ApiError> {
    let req: PropagateBody = parse_body(&body)?;
    let _guard = st.lock(&id).await;
    let store = st.store.clone();
    let (version, state) = blocking(move || {
        let mut s = store.load(&id)?;
        let v = store.propagate(&mut s, req.alpha)?;
        Ok((v, s.state))
    })
    .await?;
    Ok(Json(PropagateResponse { version, state }))
}

async fn get_candidates(
    State(st): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<CandidatesResponse>, ApiError> {
    Ok(Json(candidates_view(&st.store.load(&id)?)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResultResponse {
    #[serde(flatten)]
    pub result: crate::session::ResultVersion,
    pub frames: Vec<String>,
}

async fn get_result(
    State(st): State<Shared>,
    Path((id, version)): Path<(String, String)>,
) -> Result<Json<ResultResponse>, ApiError> {
    let s = st.store.load(&id)?;
    let version: u32 = version
        .parse()
        .map_err(|_| ApiError::not_found(format!("no result version `{version}`")))?;
    let r = s
        .result(version)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no result version {version}")))?;
    let frames = (0..r.frame_count)
        .map(|i| format!("/sessions/{}/frames/result/{version}/{i}", s.id))
        .collect();
    Ok(Json(ResultResponse { result: r, frames }))
}

async fn get_metrics(
    State(st): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<ccol_core::MetricReport>, ApiError> {
    let store = st.store.clone();
    let report = blocking(move || {
        let s = store.load(&id)?;
        store.metrics(&s)
    })
    .await?;
    Ok(Json(report))
}

/// `input/{i}`, `candidates/{i}`, `exemplar`, or `result/{version}/{i}`.
async fn get_frame(State(st): State<Shared>, Path((id, path)): Path<(String, String)>) -> Result<Response, ApiError> {
    let s = st.store.load(&id)?;
    let missing = || ApiError::not_found(format!("no frame `{path}`"));
    let parts: Vec<&str> = path.split('/').collect();
    let index = |p: &str, len: usize| p.parse::<usize>().ok().filter(|&i| i < len).ok_or_else(missing);
    let file = match parts.as_slice() {
        ["input", i] => st.store.input_frame_path(&id, index(i, s.frame_count)?),
        ["candidates", i] => {
            let n = s.candidates.as_ref().map_or(0, |c| c.len());
            st.store.candidate_path(&id, index(i, n)?)
        }
        ["exemplar"] if s.exemplar.is_some() => st.store.exemplar_path(&id),
        ["result", v, i] => {
            let v: u32 = v.parse().map_err(|_| missing())?;
            let r = s.result(v).ok_or_else(missing)?;
            st.store.result_frame_path(&id, v, index(i, r.frame_count)?)
        }
        _ => return Err(missing()),
    };
    let bytes = tokio::fs::read(&file).await.map_err(|_| missing())?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}
