use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tracing::{error, info};

use super::{AppState, ConfigUpdateError, DecideBody};
use crate::decision::{AccessOutcome, DecideError, DECISION_EVENT_PREFIX};
use crate::provenance::{PrincipalId, ProvenanceError, RecordInput, Timestamp};

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/decide", post(decide))
        .route("/v1/interactions", post(record_interaction))
        .route("/v1/chains/{principal}/verify", get(verify))
        .route("/v1/config", get(get_config).put(put_config))
        .route("/v1/policies/reload", post(reload_policies))
        .with_state(state)
}

fn envelope(state: &AppState, status: StatusCode, mut body: Value) -> Response {
    let obj = body.as_object_mut().expect("response bodies are objects");
    obj.insert("seq".into(), json!(state.next_seq()));
    obj.insert("server_time".into(), json!(Timestamp::now()));
    (status, Json(body)).into_response()
}

fn failure(state: &AppState, status: StatusCode, code: &str, message: impl ToString) -> Response {
    envelope(
        state,
        status,
        json!({ "error": code, "message": message.to_string() }),
    )
}

#[allow(clippy::result_large_err)]
fn parse<T: DeserializeOwned>(state: &AppState, body: &Bytes) -> Result<T, Response> {
    serde_json::from_slice(body)
        .map_err(|e| failure(state, StatusCode::BAD_REQUEST, "MALFORMED", e))
}

fn provenance_failure(state: &AppState, e: &ProvenanceError) -> Response {
    let (status, code) = match e {
        ProvenanceError::PrincipalMismatch { .. } => (StatusCode::CONFLICT, "PRINCIPAL_MISMATCH"),
        ProvenanceError::ChronologyViolation { .. } | ProvenanceError::EventInFuture { .. } => {
            (StatusCode::CONFLICT, "CHRONOLOGY")
        }
        ProvenanceError::DuplicateEvent(_) => (StatusCode::CONFLICT, "DUPLICATE_EVENT"),
        ProvenanceError::InvalidInteraction(_) => {
            (StatusCode::UNPROCESSABLE_ENTITY, "INVALID_INTERACTION")
        }
        ProvenanceError::Corrupt { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "CORRUPT"),
        ProvenanceError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "STORAGE"),
    };
    failure(state, status, code, e)
}

async fn decide(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let started = Instant::now();
    let request = match parse::<DecideBody>(&state, &body) {
        Ok(b) => b.into_request(),
        Err(r) => return r,
    };
    let worker = Arc::clone(&state);
    let req = request.clone();
    let result = tokio::task::spawn_blocking(move || worker.decide(&req)).await;
    let recorded = match result {
        Ok(Ok(r)) => r,
        Ok(Err(DecideError::InvalidRequest(m))) => {
            return failure(
                &state,
                StatusCode::UNPROCESSABLE_ENTITY,
                "INVALID_REQUEST",
                m,
            )
        }
        Ok(Err(DecideError::Record(e))) => {
            error!(principal = %request.principal, error = %e, "decision not recorded");
            return provenance_failure(&state, &e);
        }
        Ok(Err(e)) => {
            error!(principal = %request.principal, error = %e, "decision failed");
            return failure(&state, StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e);
        }
        Err(e) => return failure(&state, StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e),
    };
    let d = &recorded.decision;
    let outcome = match d.outcome {
        AccessOutcome::Full => "full",
        AccessOutcome::Partial { .. } => "partial",
        AccessOutcome::Deny => "deny",
    };
    info!(
        target: "ipbac::decision",
        principal = %request.principal,
        resource = %request.resource,
        action = %request.action,
        path = ?d.path,
        outcome,
        ds = d.ds.map(|s| s.value()),
        latency_us = started.elapsed().as_micros() as u64,
    );
    envelope(
        &state,
        StatusCode::OK,
        json!({
            "principal": request.principal,
            "decision": recorded.decision,
            "record_hash": recorded.record_hash,
            "chain_length": recorded.chain_length,
        }),
    )
}

async fn record_interaction(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let input = match parse::<RecordInput>(&state, &body) {
        Ok(i) => i,
        Err(r) => return r,
    };
    if input
        .interaction
        .event
        .event_id
        .starts_with(DECISION_EVENT_PREFIX)
    {
        return failure(
            &state,
            StatusCode::UNPROCESSABLE_ENTITY,
            "RESERVED_EVENT_ID",
            format!("event ids starting with {DECISION_EVENT_PREFIX:?} are reserved for decisions"),
        );
    }
    let worker = Arc::clone(&state);
    match tokio::task::spawn_blocking(move || worker.record(input)).await {
        Ok(Ok(record)) => envelope(
            &state,
            StatusCode::OK,
            json!({
                "principal": record.principal,
                "record_hash": record.record_hash,
                "recorded_at": record.recorded_at,
            }),
        ),
        Ok(Err(e)) => provenance_failure(&state, &e),
        Err(e) => failure(&state, StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e),
    }
}

async fn verify(State(state): State<Arc<AppState>>, Path(principal): Path<String>) -> Response {
    let principal = match PrincipalId::new(principal) {
        Ok(p) => p,
        Err(e) => return failure(&state, StatusCode::BAD_REQUEST, "MALFORMED", e),
    };
    let worker = Arc::clone(&state);
    let p = principal.clone();
    match tokio::task::spawn_blocking(move || worker.verify(&p)).await {
        Ok(Ok((report, length))) => envelope(
            &state,
            StatusCode::OK,
            json!({
                "principal": principal,
                "valid": report.valid,
                "first_bad_index": report.first_bad_index,
                "length": length,
            }),
        ),
        Ok(Err(e)) => failure(&state, StatusCode::INTERNAL_SERVER_ERROR, "STORAGE", e),
        Err(e) => failure(&state, StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e),
    }
}

async fn get_config(State(state): State<Arc<AppState>>) -> Response {
    let config = state.config();
    envelope(&state, StatusCode::OK, json!({ "config": config }))
}

async fn put_config(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let patch = match parse::<Value>(&state, &body) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let worker = Arc::clone(&state);
    match tokio::task::spawn_blocking(move || worker.update_config(patch)).await {
        Ok(Ok(config)) => envelope(&state, StatusCode::OK, json!({ "config": config })),
        Ok(Err(ConfigUpdateError::Invalid(fields))) => envelope(
            &state,
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({
                "error": "INVALID_CONFIG",
                "message": "configuration rejected",
                "fields": fields,
            }),
        ),
        Ok(Err(e @ (ConfigUpdateError::NotAnObject | ConfigUpdateError::Unparseable(_)))) => {
            failure(
                &state,
                StatusCode::UNPROCESSABLE_ENTITY,
                "INVALID_CONFIG",
                e,
            )
        }
        Ok(Err(e)) => failure(&state, StatusCode::INTERNAL_SERVER_ERROR, "STORAGE", e),
        Err(e) => failure(&state, StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e),
    }
}

async fn reload_policies(State(state): State<Arc<AppState>>) -> Response {
    let worker = Arc::clone(&state);
    match tokio::task::spawn_blocking(move || worker.reload_policies()).await {
        Ok(Ok(roles)) => envelope(&state, StatusCode::OK, json!({ "roles": roles })),
        Ok(Err(e)) => failure(
            &state,
            StatusCode::UNPROCESSABLE_ENTITY,
            "INVALID_POLICY",
            e,
        ),
        Err(e) => failure(&state, StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e),
    }
}
