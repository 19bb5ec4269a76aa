// SPDX-License-Identifier: Apache-2.0

//! HTTP routes.
//!
//! | method | path | role |
//! |---|---|---|
//! | GET | `/api/config` | any |
//! | POST | `/api/simulate` | any |
//! | GET | `/api/tasks` | any |
//! | GET | `/api/tasks/{id}` | any |
//! | POST | `/api/tasks/{id}/attempts` | any |
//! | GET | `/api/tasks/{id}/attempts?user=` | instructor |
//! | GET | `/api/tasks/{id}/stats` | any |
//!
//! Every route needs a bearer token. Student-facing payloads never contain
//! the model circuit, model conditions or counterexamples.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use qlearn_core::format::ZERO_THRESHOLD;
use qlearn_core::{grade, sample, simulate, BitString, CircuitFile, GradeError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::auth::{Principal, Role, TokenTable};
use crate::catalog::Catalog;
use crate::store::{task_stats, AttemptRecord, AttemptStore, NewAttempt};

/// Qubit limits. Clients simulate up to `client_qubit_threshold` qubits
/// themselves and send larger circuits here; nothing above `max_qubits` is
/// accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Limits {
    pub client_qubit_threshold: usize,
    pub max_qubits: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            client_qubit_threshold: 14,
            max_qubits: 20,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub catalog: Arc<Catalog>,
    pub store: Arc<dyn AttemptStore>,
    pub tokens: Arc<TokenTable>,
    pub limits: Limits,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    details: Vec<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            message: message.into(),
            details: Vec::new(),
        }
    }

    fn with_details(mut self, details: Vec<String>) -> ApiError {
        self.details = details;
        self
    }

    fn internal(e: impl std::fmt::Display) -> ApiError {
        tracing::error!(error = %e, "request failed");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if !self.details.is_empty() {
            body["details"] = json!(self.details);
        }
        (self.status, Json(body)).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/config", get(get_config))
        .route("/api/simulate", post(post_simulate))
        .route("/api/tasks", get(list_tasks))
        .route("/api/tasks/{id}", get(get_task))
        .route("/api/tasks/{id}/attempts", post(post_attempt).get(list_attempts))
        .route("/api/tasks/{id}/stats", get(get_stats))
        .with_state(state)
}

fn parse_body<T: DeserializeOwned>(value: Value) -> Result<T, ApiError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ApiError::new(StatusCode::BAD_REQUEST, format!("{path}: {}", e.into_inner()))
    })
}

fn json_body(bytes: &[u8]) -> Result<Value, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed JSON: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

async fn get_config(_: Principal, State(state): State<AppState>) -> Json<Limits> {
    Json(state.limits)
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", default)]
struct SimulateOptions {
    /// Include amplitudes.
    state: bool,
    /// Sample this many shots.
    shots: Option<u32>,
    seed: Option<u64>,
    /// Leave out rows whose probability prints as zero.
    hide_zero_rows: bool,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SimulateRequest {
    circuit: CircuitFile,
    #[serde(default)]
    input: Option<String>,
    #[serde(default)]
    options: SimulateOptions,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SimulateResponse {
    n_qubits: usize,
    input: BitString,
    probabilities: Vec<qlearn_core::sampling::ProbabilityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<Vec<qlearn_core::sim::AmplitudeRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<qlearn_core::Histogram>,
}

fn time_seed() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

async fn post_simulate(
    _: Principal,
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<SimulateResponse>, ApiError> {
    let value = json_body(&body)?;
    // reject oversized circuits before building anything
    if let Some(n) = value.pointer("/circuit/nQubits").and_then(Value::as_u64) {
        if n > state.limits.max_qubits as u64 {
            return Err(ApiError::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                format!("{n} qubits exceeds the server limit of {}", state.limits.max_qubits),
            ));
        }
    }
    let req: SimulateRequest = parse_body(value)?;
    let bad = |e: qlearn_core::ExerciseError| ApiError::new(StatusCode::BAD_REQUEST, e.to_string());
    let registry = req.circuit.registry().map_err(bad)?;
    let circuit = req.circuit.to_circuit().map_err(bad)?;
    let violations = circuit.validate(&registry);
    if !violations.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid circuit")
            .with_details(violations.iter().map(ToString::to_string).collect()));
    }
    let input = match &req.input {
        Some(text) => BitString::parse_for(text, circuit.n_qubits())
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("input: {e}")))?,
        None => circuit.default_input(),
    };
    if req.options.shots == Some(0) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "shots must be at least 1",
        ));
    }
    let opts = req.options;
    let seed = opts.seed.unwrap_or_else(time_seed);

    blocking(move || {
        let final_state =
            simulate(&circuit, &input, &registry).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        let dist = final_state.probabilities();
        let rows: Vec<_> = dist
            .export_rows()
            .into_iter()
            .filter(|r| !opts.hide_zero_rows || r.p >= ZERO_THRESHOLD)
            .collect();
        let mut out = SimulateResponse {
            n_qubits: circuit.n_qubits(),
            input,
            probabilities: rows,
            state: opts.state.then(|| final_state.export_rows()),
            shots: None,
            seed: None,
            counts: None,
        };
        if let Some(shots) = opts.shots {
            out.counts = Some(sample(&dist, shots, seed).map_err(ApiError::internal)?);
            out.shots = Some(shots);
            out.seed = Some(seed);
        }
        Ok(Json(out))
    })
    .await?
}

async fn list_tasks(_: Principal, State(state): State<AppState>) -> Json<Value> {
    let tasks: Vec<Value> = state
        .catalog
        .list()
        .into_iter()
        .map(|(id, header)| json!({ "id": id, "header": header }))
        .collect();
    Json(json!(tasks))
}

fn find_task(state: &AppState, id: &str) -> Result<Arc<qlearn_core::Exercise>, ApiError> {
    state
        .catalog
        .get(id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown task `{id}`")))
}

async fn get_task(
    _: Principal,
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let exercise = find_task(&state, &id)?;
    let mut doc = serde_json::to_value(exercise.student_view()).map_err(ApiError::internal)?;
    doc["id"] = json!(id);
    Ok(Json(doc))
}

#[derive(Debug, Deserialize)]
struct AttemptRequest {
    circuit: CircuitFile,
}

/// Attempt as shown to the student who made it.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct AttemptView {
    id: i64,
    task_id: String,
    user_id: String,
    attempt_number: u32,
    submitted_at: String,
    circuit: Value,
    result: qlearn_core::GradeResult,
}

async fn post_attempt(
    who: Principal,
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<(StatusCode, Json<AttemptView>), ApiError> {
    let exercise = find_task(&state, &id)?;
    let req: AttemptRequest = parse_body(json_body(&body)?)?;
    let circuit = req
        .circuit
        .to_attempt(&exercise)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let store = Arc::clone(&state.store);
    let view = blocking(move || {
        let result = grade(&circuit, &exercise, exercise.registry()).map_err(|e| {
            let details = match &e {
                GradeError::InvalidCircuit(v) => v.iter().map(ToString::to_string).collect(),
                _ => Vec::new(),
            };
            ApiError::new(StatusCode::BAD_REQUEST, e.to_string()).with_details(details)
        })?;
        let record = store
            .append(NewAttempt {
                task_id: id,
                user_id: who.user_id,
                submitted_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                correct: result.correct,
                circuit: serde_json::to_value(&circuit).map_err(ApiError::internal)?,
                result: serde_json::to_value(&result).map_err(ApiError::internal)?,
            })
            .map_err(ApiError::internal)?;
        Ok::<_, ApiError>(AttemptView {
            id: record.id,
            task_id: record.task_id,
            user_id: record.user_id,
            attempt_number: record.attempt_number,
            submitted_at: record.submitted_at,
            circuit: record.circuit,
            result: result.student_view(),
        })
    })
    .await??;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn list_attempts(
    who: Principal,
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<BTreeMap<String, String>>,
) -> Result<Json<Vec<AttemptRecord>>, ApiError> {
    if who.role != Role::Instructor {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "instructor role required"));
    }
    find_task(&state, &id)?;
    let store = Arc::clone(&state.store);
    let user = query.get("user").cloned();
    let records = blocking(move || store.list(&id, user.as_deref()))
        .await?
        .map_err(ApiError::internal)?;
    Ok(Json(records))
}

async fn get_stats(
    _: Principal,
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    find_task(&state, &id)?;
    let store = Arc::clone(&state.store);
    let records = blocking(move || store.list(&id, None))
        .await?
        .map_err(ApiError::internal)?;
    Ok(Json(json!(task_stats(&records))))
}
