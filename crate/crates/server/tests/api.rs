// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use qlearn_core::{parse_circuit_file, parse_exercise, sample, simulate, BitString};
use qlearn_server::{router, AppState, AttemptStore, Catalog, Limits, MemoryStore, Role, SqliteStore, TokenTable};
use serde_json::{json, Value};
use tower::ServiceExt;

const STUDENT: &str = "student-token";
const OTHER: &str = "other-token";
const INSTRUCTOR: &str = "instructor-token";

fn fixtures() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures"].iter().collect()
}

fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap()
}

fn tokens() -> TokenTable {
    let mut t = TokenTable::new();
    t.insert(STUDENT, "alice", Role::Student);
    t.insert(OTHER, "bob", Role::Student);
    t.insert(INSTRUCTOR, "prof", Role::Instructor);
    t
}

fn state_with(store: Arc<dyn AttemptStore>) -> AppState {
    let (catalog, report) = Catalog::load_dir(fixtures().join("exercises")).unwrap();
    assert!(report.failed.is_empty(), "{:?}", report.failed);
    AppState {
        catalog: Arc::new(catalog),
        store,
        tokens: Arc::new(tokens()),
        limits: Limits::default(),
    }
}

fn state() -> AppState {
    state_with(Arc::new(MemoryStore::new()))
}

async fn call(
    state: &AppState,
    method: &str,
    uri: &str,
    token: Option<&str>,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = router(state.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn raw(state: &AppState, uri: &str, body: &'static str) -> StatusCode {
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .header("authorization", format!("Bearer {STUDENT}"))
        .body(Body::from(body))
        .unwrap();
    router(state.clone()).oneshot(req).await.unwrap().status()
}

fn yaml_to_json(text: &str) -> Value {
    let file = parse_circuit_file(text).unwrap().value;
    serde_json::to_value(file).unwrap()
}

/// Every object key anywhere in `v`.
fn keys(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                out.push(k.clone());
                keys(child, out);
            }
        }
        Value::Array(items) => items.iter().for_each(|c| keys(c, out)),
        _ => {}
    }
}

fn assert_no_secrets(v: &Value) {
    let mut all = Vec::new();
    keys(v, &mut all);
    for secret in ["modelCircuit", "modelConditions", "counterexample", "failedCondition"] {
        assert!(!all.iter().any(|k| k == secret), "`{secret}` leaked in {v}");
    }
}

#[tokio::test]
async fn requires_a_known_token() {
    let s = state();
    assert_eq!(
        call(&s, "GET", "/api/config", None, None).await.0,
        StatusCode::UNAUTHORIZED
    );
    assert_eq!(
        call(&s, "GET", "/api/config", Some("nope"), None).await.0,
        StatusCode::UNAUTHORIZED
    );
    let (status, body) = call(&s, "GET", "/api/config", Some(STUDENT), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"clientQubitThreshold": 14, "maxQubits": 20}));
}

#[tokio::test]
async fn simulate_bell() {
    let s = state();
    let body = json!({"circuit": yaml_to_json(&read_fixture("circuits/bell.yaml")), "input": "00"});
    let (status, out) = call(&s, "POST", "/api/simulate", Some(STUDENT), Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{out}");
    assert_eq!(out["input"], "00");
    let probs: Vec<(String, f64)> = out["probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["bitstring"].as_str().unwrap().to_owned(), r["p"].as_f64().unwrap()))
        .collect();
    assert_eq!(probs.len(), 4);
    assert!((probs[0].1 - 0.5).abs() < 1e-12 && (probs[3].1 - 0.5).abs() < 1e-12);
    assert!(out.get("state").is_none() && out.get("counts").is_none());
}

#[tokio::test]
async fn simulate_matches_local_engine_bit_for_bit() {
    let s = state();
    for entry in std::fs::read_dir(fixtures().join("circuits")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let file = parse_circuit_file(&text).unwrap().value;
        let Ok(circuit) = file.to_circuit() else { continue };
        let reg = file.registry().unwrap();
        let n = circuit.n_qubits();
        for i in 0..1 << n {
            let input = BitString::from_index(i, n);
            let local = simulate(&circuit, &input, &reg).unwrap();
            let body = json!({"circuit": yaml_to_json(&text), "input": input, "options": {"state": true}});
            let (status, out) = call(&s, "POST", "/api/simulate", Some(STUDENT), Some(body)).await;
            assert_eq!(status, StatusCode::OK, "{}", path.display());
            let remote: Vec<f64> = out["probabilities"]
                .as_array()
                .unwrap()
                .iter()
                .map(|r| r["p"].as_f64().unwrap())
                .collect();
            assert_eq!(remote, local.probabilities().probabilities(), "{}", path.display());
            let amps: Vec<(f64, f64)> = out["state"]
                .as_array()
                .unwrap()
                .iter()
                .map(|r| (r["re"].as_f64().unwrap(), r["im"].as_f64().unwrap()))
                .collect();
            let local_amps: Vec<(f64, f64)> = local.amplitudes().iter().map(|a| (a.re, a.im)).collect();
            assert_eq!(amps, local_amps);
        }
    }
}

#[tokio::test]
async fn simulate_with_shots_is_seeded() {
    let s = state();
    let circuit = yaml_to_json(&read_fixture("circuits/h.yaml"));
    let body = json!({"circuit": circuit, "options": {"shots": 1000, "seed": 11}});
    let (status, out) = call(&s, "POST", "/api/simulate", Some(STUDENT), Some(body.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let counts = out["counts"].as_object().unwrap();
    assert_eq!(counts.values().map(|v| v.as_u64().unwrap()).sum::<u64>(), 1000);
    let again = call(&s, "POST", "/api/simulate", Some(STUDENT), Some(body)).await.1;
    assert_eq!(out["counts"], again["counts"]);
    // same draws as the library
    let file = parse_circuit_file(&read_fixture("circuits/h.yaml")).unwrap().value;
    let c = file.to_circuit().unwrap();
    let local = sample(
        &simulate(&c, &c.default_input(), &file.registry().unwrap())
            .unwrap()
            .probabilities(),
        1000,
        11,
    )
    .unwrap();
    assert_eq!(out["counts"], json!(local));
    assert_eq!(out["seed"], 11);
}

#[tokio::test]
async fn simulate_hides_zero_rows_on_request() {
    let s = state();
    let circuit = yaml_to_json(&read_fixture("circuits/bell.yaml"));
    let (_, out) = call(
        &s,
        "POST",
        "/api/simulate",
        Some(STUDENT),
        Some(json!({"circuit": circuit, "options": {"hideZeroRows": true}})),
    )
    .await;
    let shown: Vec<&str> = out["probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["bitstring"].as_str().unwrap())
        .collect();
    assert_eq!(shown, ["00", "11"]);
}

#[tokio::test]
async fn simulate_errors() {
    let s = state();
    let big = json!({"circuit": {"nQubits": 25, "nMoments": 1, "placements": []}});
    assert_eq!(
        call(&s, "POST", "/api/simulate", Some(STUDENT), Some(big)).await.0,
        StatusCode::PAYLOAD_TOO_LARGE
    );

    let malformed = json!({"circuit": {"nQubits": 2, "nMoments": 1, "placements": [{"name": "X", "target": 1, "time": 0, "controls": [1]}]}});
    let (status, out) = call(&s, "POST", "/api/simulate", Some(STUDENT), Some(malformed)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(!out["details"].as_array().unwrap().is_empty(), "{out}");

    let unknown =
        json!({"circuit": {"nQubits": 1, "nMoments": 1, "placements": [{"name": "Q", "target": 0, "time": 0}]}});
    assert_eq!(
        call(&s, "POST", "/api/simulate", Some(STUDENT), Some(unknown)).await.0,
        StatusCode::BAD_REQUEST
    );

    let wrong_type =
        json!({"circuit": {"nQubits": 1, "nMoments": 1, "placements": [{"name": "X", "target": "zero", "time": 0}]}});
    let (status, out) = call(&s, "POST", "/api/simulate", Some(STUDENT), Some(wrong_type)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(
        out["error"].as_str().unwrap().contains("circuit.placements[0].target"),
        "{out}"
    );

    let bell = yaml_to_json(&read_fixture("circuits/bell.yaml"));
    for input in ["0", "012", "abc", ""] {
        let body = json!({"circuit": bell, "input": input});
        assert_eq!(
            call(&s, "POST", "/api/simulate", Some(STUDENT), Some(body)).await.0,
            StatusCode::UNPROCESSABLE_ENTITY,
            "{input:?}"
        );
    }
    let zero_shots = json!({"circuit": bell, "options": {"shots": 0}});
    assert_eq!(
        call(&s, "POST", "/api/simulate", Some(STUDENT), Some(zero_shots))
            .await
            .0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(raw(&s, "/api/simulate", "{not json").await, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn twenty_qubits_server_side() {
    let s = state();
    // H on every row, then a CX ladder
    let mut placements: Vec<Value> = (0..20).map(|q| json!({"name": "H", "target": q, "time": 0})).collect();
    placements.extend((0..19).map(|q| json!({"name": "X", "target": q + 1, "time": q + 1, "controls": [q]})));
    let body = json!({"circuit": {"nQubits": 20, "nMoments": 20, "placements": placements}, "options": {"hideZeroRows": true}});
    let started = std::time::Instant::now();
    let (status, out) = call(&s, "POST", "/api/simulate", Some(STUDENT), Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert!(started.elapsed().as_secs_f64() < 10.0);
    let total: f64 = out["probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["p"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[tokio::test]
async fn task_views_are_redacted() {
    let s = state();
    let (status, list) = call(&s, "GET", "/api/tasks", Some(STUDENT), None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["id"].as_str().unwrap())
        .collect();
    assert_eq!(
        ids,
        ["copy_bits", "cx_decomposition", "mystery_gate", "two_similar_gates"]
    );

    let (status, task) = call(&s, "GET", "/api/tasks/copy_bits", Some(STUDENT), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_no_secrets(&task);
    assert_eq!(task["nQubits"], 3);
    assert_eq!(task["showChart"], false);
    assert_eq!(task["feedbackText"]["correct"], "Oikein");

    let (_, mystery_gate) = call(&s, "GET", "/api/tasks/mystery_gate", Some(STUDENT), None).await;
    assert_no_secrets(&mystery_gate);
    assert_eq!(mystery_gate["initialCircuit"][0]["name"], "U");
    assert_eq!(mystery_gate["customGates"][0]["name"], "U");
    // the student view is itself a valid exercise document
    let yaml = serde_json::to_string(&mystery_gate).unwrap();
    assert!(parse_exercise(&yaml).is_ok());

    assert_eq!(
        call(&s, "GET", "/api/tasks/nope", Some(STUDENT), None).await.0,
        StatusCode::NOT_FOUND
    );
}

fn attempt_body(rel: &str) -> Value {
    json!({"circuit": yaml_to_json(&read_fixture(rel))})
}

#[tokio::test]
async fn attempts_are_numbered_per_user() {
    let s = state();
    let (status, a) = call(
        &s,
        "POST",
        "/api/tasks/copy_bits/attempts",
        Some(STUDENT),
        Some(attempt_body("circuits/two_cx.yaml")),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{a}");
    assert_no_secrets(&a);
    assert_eq!(a["result"]["correct"], true);
    assert_eq!(a["result"]["points"], 5.0);
    assert_eq!(a["result"]["feedback"], "Oikein");
    assert_eq!(a["attemptNumber"], 1);
    assert_eq!(a["userId"], "alice");

    let (status, b) = call(
        &s,
        "POST",
        "/api/tasks/copy_bits/attempts",
        Some(STUDENT),
        Some(attempt_body("circuits/three_cx.yaml")),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_no_secrets(&b);
    assert_eq!(b["result"]["correct"], false);
    assert_eq!(b["result"]["points"], 0.0);
    assert_eq!(b["result"]["feedback"], "Väärin: käytä tasan kahta CX-porttia.");
    assert_eq!(b["attemptNumber"], 2);

    assert_eq!(
        call(
            &s,
            "POST",
            "/api/tasks/missing/attempts",
            Some(STUDENT),
            Some(attempt_body("circuits/two_cx.yaml"))
        )
        .await
        .0,
        StatusCode::NOT_FOUND
    );
    let wrong_size = attempt_body("circuits/bell.yaml");
    assert_eq!(
        call(
            &s,
            "POST",
            "/api/tasks/copy_bits/attempts",
            Some(STUDENT),
            Some(wrong_size)
        )
        .await
        .0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        raw(&s, "/api/tasks/copy_bits/attempts", "[]").await,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn wrong_answers_hide_the_counterexample_from_students_only() {
    let s = state();
    let wrong = json!({"circuit": {"placements": [{"name": "X", "target": 1, "time": 0, "controls": [0]}, {"name": "X", "target": 2, "time": 1, "controls": [0]}]}});
    let (status, a) = call(&s, "POST", "/api/tasks/copy_bits/attempts", Some(STUDENT), Some(wrong)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_no_secrets(&a);
    assert_eq!(a["result"]["failedStage"], "EQUIVALENCE");

    let (status, list) = call(
        &s,
        "GET",
        "/api/tasks/copy_bits/attempts?user=alice",
        Some(INSTRUCTOR),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(list[0]["result"]["counterexample"]["input"].is_string(), "{list}");
}

#[tokio::test]
async fn instructor_history() {
    let s = state();
    assert_eq!(
        call(
            &s,
            "GET",
            "/api/tasks/copy_bits/attempts?user=alice",
            Some(STUDENT),
            None
        )
        .await
        .0,
        StatusCode::FORBIDDEN
    );
    let (status, empty) = call(
        &s,
        "GET",
        "/api/tasks/copy_bits/attempts?user=alice",
        Some(INSTRUCTOR),
        None,
    )
    .await;
    assert_eq!((status, empty), (StatusCode::OK, json!([])));
    assert_eq!(
        call(&s, "GET", "/api/tasks/nope/attempts", Some(INSTRUCTOR), None)
            .await
            .0,
        StatusCode::NOT_FOUND
    );

    for file in [
        "circuits/three_cx.yaml",
        "circuits/three_cx.yaml",
        "circuits/two_cx.yaml",
    ] {
        call(
            &s,
            "POST",
            "/api/tasks/copy_bits/attempts",
            Some(STUDENT),
            Some(attempt_body(file)),
        )
        .await;
    }
    call(
        &s,
        "POST",
        "/api/tasks/copy_bits/attempts",
        Some(OTHER),
        Some(attempt_body("circuits/two_cx.yaml")),
    )
    .await;

    let (_, alice) = call(
        &s,
        "GET",
        "/api/tasks/copy_bits/attempts?user=alice",
        Some(INSTRUCTOR),
        None,
    )
    .await;
    let alice = alice.as_array().unwrap();
    assert_eq!(alice.len(), 3);
    assert_eq!(
        alice
            .iter()
            .map(|a| a["attemptNumber"].as_u64().unwrap())
            .collect::<Vec<_>>(),
        [1, 2, 3]
    );
    assert_eq!(
        alice
            .iter()
            .map(|a| a["correct"].as_bool().unwrap())
            .collect::<Vec<_>>(),
        [false, false, true]
    );
    assert_eq!(alice[0]["result"]["failedCondition"], "C1X == 2");
    let (_, everyone) = call(&s, "GET", "/api/tasks/copy_bits/attempts", Some(INSTRUCTOR), None).await;
    assert_eq!(everyone.as_array().unwrap().len(), 4);

    let (status, stats) = call(&s, "GET", "/api/tasks/copy_bits/stats", Some(STUDENT), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_no_secrets(&stats);
    assert_eq!(stats, json!({"attemptCount": 4, "averageAttemptsToCorrect": 2.0}));
    let (_, none) = call(&s, "GET", "/api/tasks/cx_decomposition/stats", Some(STUDENT), None).await;
    assert_eq!(none, json!({"attemptCount": 0, "averageAttemptsToCorrect": null}));
    assert_eq!(
        call(&s, "GET", "/api/tasks/nope/stats", Some(STUDENT), None).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions_get_distinct_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let store: Arc<dyn AttemptStore> = Arc::new(SqliteStore::open(dir.path().join("a.db")).unwrap());
    let s = state_with(store);
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let s = s.clone();
            tokio::spawn(async move {
                call(
                    &s,
                    "POST",
                    "/api/tasks/copy_bits/attempts",
                    Some(STUDENT),
                    Some(attempt_body("circuits/two_cx.yaml")),
                )
                .await
            })
        })
        .collect();
    let mut numbers = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::CREATED);
        numbers.push(body["attemptNumber"].as_u64().unwrap());
    }
    numbers.sort_unstable();
    assert_eq!(numbers, (1..=16).collect::<Vec<_>>());
}

#[tokio::test]
async fn sqlite_attempts_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("attempts.db");
    {
        let s = state_with(Arc::new(SqliteStore::open(&db).unwrap()));
        call(
            &s,
            "POST",
            "/api/tasks/copy_bits/attempts",
            Some(STUDENT),
            Some(attempt_body("circuits/three_cx.yaml")),
        )
        .await;
    }
    let s = state_with(Arc::new(SqliteStore::open(&db).unwrap()));
    let (_, b) = call(
        &s,
        "POST",
        "/api/tasks/copy_bits/attempts",
        Some(STUDENT),
        Some(attempt_body("circuits/two_cx.yaml")),
    )
    .await;
    assert_eq!(b["attemptNumber"], 2);
    let (_, stats) = call(&s, "GET", "/api/tasks/copy_bits/stats", Some(INSTRUCTOR), None).await;
    assert_eq!(stats["averageAttemptsToCorrect"], 2.0);
}
