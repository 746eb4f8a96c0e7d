//! Route handlers and the shared submit path.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use chainsift::active_learning::{AlError, AlSession, LabelOracle};
use chainsift::dataset::{Label, TxId};

use crate::error::ApiError;
use crate::model::{BatchResponse, CreateSession, LabelResponse, MetricsResponse, OracleKind, SessionStatus, SessionView};
use crate::state::{now, AppState, SessionSlot};

/// Points returned in a label response's `history_tail`.
const HISTORY_TAIL: usize = 5;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/datasets", get(list_datasets))
        .route("/api/sessions", post(create_session).get(list_sessions))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/batch", get(get_batch))
        .route("/api/sessions/{id}/labels", post(post_labels))
        .route("/api/sessions/{id}/metrics", get(get_metrics))
        .with_state(state)
}

async fn list_datasets(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.datasets())
}

async fn list_sessions(State(state): State<AppState>) -> impl IntoResponse {
    let views: Vec<SessionView> = state.session_ids().iter().filter_map(|id| state.session(id)).map(|s| (*s.view()).clone()).collect();
    Json(views)
}

fn lookup(state: &AppState, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
    state.session(id).ok_or_else(|| ApiError::not_found("session", id))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: CreateSession =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))?;
    let dataset = state.dataset(&req.dataset).ok_or_else(|| ApiError::not_found("dataset", &req.dataset))?;
    let data = dataset.data.clone();
    let session = tokio::task::spawn_blocking(move || -> Result<AlSession, AlError> {
        let mut session = AlSession::new(req.config, &data)?;
        session.select_batch(&data)?;
        Ok(session)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(|e| match e {
        AlError::InvalidConfig(_) | AlError::InvalidStop { .. } | AlError::EmptyPool => {
            ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", e.to_string(), Value::Null)
        }
        other => ApiError::internal(other.to_string()),
    })?;
    let t = now();
    let checkpoint = session.clone();
    let slot = state.insert(|id| SessionSlot::new(id, dataset, req.oracle, session, t, t));
    if let Err(e) = state.write_checkpoint(&slot, &checkpoint, t) {
        log::warn!("checkpoint for session {} failed: {e}", slot.id);
    }
    if req.oracle == OracleKind::Simulated {
        spawn_driver(state.clone(), slot.clone());
    }
    log::info!("created session {} on {}", slot.id, slot.dataset.name);
    Ok((StatusCode::CREATED, Json((*slot.view()).clone())))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json((*lookup(&state, &id)?.view()).clone()))
}

async fn get_batch(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let view = lookup(&state, &id)?.view();
    match view.status {
        SessionStatus::AwaitingLabels => {
            Ok(Json(BatchResponse { session_id: view.session_id.clone(), phase: view.phase, items: view.batch.clone() }))
        }
        SessionStatus::Training => Err(ApiError::conflict("training", "session is training", json!(&*view))),
        SessionStatus::Finished => Err(ApiError::conflict("finished", "session has finished", json!(&*view))),
    }
}

async fn get_metrics(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let slot = lookup(&state, &id)?;
    let view = slot.view();
    Ok(Json(MetricsResponse {
        series: view.history.clone(),
        annotations: view.annotations.clone(),
        baseline_f1: slot.dataset.baseline_f1,
    }))
}

async fn post_labels(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let slot = lookup(&state, &id)?;
    let answers = parse_labels(&body)?;
    submit(&state, slot, answers).await.map(Json)
}

/// Body shape: `{"<tx_id>": "illicit" | "licit", ...}`.
fn parse_labels(body: &[u8]) -> Result<BTreeMap<TxId, Label>, ApiError> {
    let raw: BTreeMap<String, String> =
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid label body: {e}")))?;
    let mut out = BTreeMap::new();
    for (k, v) in raw {
        let id: TxId = k.parse().map_err(|_| ApiError::bad_request(format!("tx_id {k:?} is not an integer")))?;
        let label = match v.as_str() {
            "illicit" => Label::Illicit,
            "licit" => Label::Licit,
            _ => {
                return Err(ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "invalid_label",
                    format!("label for {id} must be \"illicit\" or \"licit\", got {v:?}"),
                    json!({ "tx_id": id }),
                ))
            }
        };
        out.insert(id, label);
    }
    Ok(out)
}

fn answer_error(e: AlError, session: &AlSession) -> ApiError {
    match e {
        AlError::NoPendingBatch => ApiError::conflict("no_pending_batch", e.to_string(), Value::Null),
        AlError::UnknownTxId(ref ids) => ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "unknown_tx_id",
            e.to_string(),
            json!({ "unknown": ids }),
        ),
        AlError::InvalidLabel(id) => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_label", e.to_string(), json!({ "tx_id": id }))
        }
        AlError::BatchMismatch { ref missing, ref extra } => {
            let stale: Vec<TxId> = extra.iter().copied().filter(|id| session.labeled().contains_key(id)).collect();
            let details = json!({ "missing": missing, "extra": extra });
            if stale.is_empty() {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "batch_mismatch", e.to_string(), details)
            } else {
                // Labels for an earlier batch: another submission got there first.
                ApiError::conflict("already_labeled", format!("transactions {stale:?} are already labeled"), details)
            }
        }
        other => ApiError::internal(other.to_string()),
    }
}

/// Applies one batch of answers: validate, retrain off the request path,
/// select the next batch, checkpoint, publish. Shared by the HTTP handler
/// and the simulated oracle.
pub(crate) async fn submit(
    state: &AppState,
    slot: Arc<SessionSlot>,
    answers: BTreeMap<TxId, Label>,
) -> Result<LabelResponse, ApiError> {
    let mut guard = slot
        .writer
        .clone()
        .try_lock_owned()
        .map_err(|_| ApiError::conflict("busy", "another submission for this session is in progress", Value::Null))?;
    if guard.is_finished() {
        return Err(ApiError::conflict("finished", "session has finished", json!(&*slot.view())));
    }
    let data = slot.dataset.data.clone();
    guard.validate_answers(&data, &answers).map_err(|e| answer_error(e, &guard))?;
    slot.set_status(SessionStatus::Training);

    let worker_slot = slot.clone();
    let worker_state = state.clone();
    tokio::task::spawn_blocking(move || {
        let result = guard.submit_labels(&data, &answers).and_then(|outcome| {
            if !outcome.finished {
                guard.select_batch(&data)?;
            }
            Ok(outcome)
        });
        let t = now();
        let view = worker_slot.rebuild(&guard, t);
        if let Err(e) = worker_state.write_checkpoint(&worker_slot, &guard, t) {
            log::warn!("checkpoint for session {} failed: {e}", worker_slot.id);
        }
        let response = result.map(|outcome| {
            let points = &view.history.points;
            LabelResponse {
                status: view.status,
                phase: outcome.phase,
                labeled: outcome.labeled,
                point: outcome.point,
                phase_change: outcome.phase_change,
                history_tail: points[points.len().saturating_sub(HISTORY_TAIL)..].to_vec(),
            }
        });
        worker_slot.publish(view);
        // The writer lock is released only after the new view is visible.
        drop(guard);
        response.map_err(|e| ApiError::internal(e.to_string()))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

/// Answers a simulated session's batches from ground truth until it
/// finishes, through the same [`submit`] path as HTTP clients.
pub(crate) fn spawn_driver(state: AppState, slot: Arc<SessionSlot>) {
    tokio::spawn(async move {
        let oracle = LabelOracle::simulated(&slot.dataset.data);
        loop {
            let view = slot.view();
            match view.status {
                SessionStatus::Finished => break,
                SessionStatus::Training => {
                    tokio::time::sleep(Duration::from_millis(5)).await;
                    continue;
                }
                SessionStatus::AwaitingLabels => {}
            }
            let ids: Vec<TxId> = view.batch.iter().map(|b| b.tx_id).collect();
            let answers = oracle.answer(&ids).expect("simulated oracle always answers");
            match submit(&state, slot.clone(), answers).await {
                Ok(r) if r.status == SessionStatus::Finished => break,
                Ok(_) => {}
                Err(e) if e.status == StatusCode::CONFLICT => tokio::time::sleep(Duration::from_millis(5)).await,
                Err(e) => {
                    log::error!("simulated session {} stopped: {e}", slot.id);
                    break;
                }
            }
        }
        log::info!("simulated session {} done", slot.id);
    });
}
