use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use brigade_cli::server::{router, AppState, CreateSession};
use brigade_core::ContentPack;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(Arc::new(AppState::new(Arc::new(ContentPack::shipped()))))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value =
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

async fn create(app: &Router, body: Value) -> String {
    let (status, v) = call(app, Method::POST, "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

async fn command(app: &Router, id: &str, text: &str) -> (StatusCode, Value) {
    call(
        app,
        Method::POST,
        &format!("/sessions/{id}/command"),
        Some(json!({"command": text})),
    )
    .await
}

async fn step(app: &Router, id: &str) -> (StatusCode, Value) {
    call(app, Method::POST, &format!("/sessions/{id}/step"), None).await
}

#[tokio::test]
async fn human_and_planner_share_a_session() {
    let app = app();
    let id = create(
        &app,
        json!({"level": 0, "agents": 2, "human_roles": [0], "planner": "random"}),
    )
    .await;

    let (status, v) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["tick"], 0);
    assert_eq!(v["awaiting"], json!([0]));
    assert_eq!(v["agents"][0]["role"], "human");
    assert_eq!(v["agents"][1]["role"], "planner");
    assert_eq!(v["orders"].as_array().unwrap().len(), 1);

    let (status, v) = step(&app, &id).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "inputs_incomplete");

    let (status, v) = command(&app, &id, "goto(agent1, pot)").await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(v["error"], "role_mismatch");

    let (status, v) = command(&app, &id, "please walk somewhere").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "malformed_command");

    let (status, v) = command(&app, &id, "put(agent0, chopboard)").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert!(!v["error"].as_str().unwrap().is_empty());

    let (status, v) = command(&app, &id, "goto(agent0, chopboard)").await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["command"], "goto(agent0, chopboard)");
    assert_eq!(v["awaiting"], json!([]));

    let (status, v) = step(&app, &id).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["tick"], 1);
    assert_eq!(v["agents"][0]["at"], "chopboard");
    assert!(v["last_dispatch"]
        .as_str()
        .unwrap()
        .starts_with("goto(agent0, chopboard)\n"));

    let (status, v) = call(&app, Method::GET, &format!("/sessions/{id}/report"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["steps"].as_array().unwrap().len(), 1);
    assert_eq!(v["summary"]["steps_run"], 1);
}

#[tokio::test]
async fn unknown_sessions_and_bad_requests() {
    let app = app();
    let (status, v) = call(&app, Method::GET, "/sessions/s9999/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "unknown_session");
    let (status, _) = step(&app, "s9999").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    for body in [
        json!({"level": 99}),
        json!({"level": 0, "agents": 2, "human_roles": [2]}),
        json!({"level": 0, "agents": 2, "human_roles": [0, 0]}),
        json!({"level": 0, "planner": "oracle"}),
        json!({"level": 0, "ablation": "no_memory"}),
        json!({"level": "zero"}),
    ] {
        let (status, v) = call(&app, Method::POST, "/sessions", Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body} -> {v}");
        assert!(v["error"].is_string());
    }
}

#[tokio::test]
async fn sessions_are_independent() {
    let app = app();
    let a = create(&app, json!({"level": 0, "agents": 1, "human_roles": [0]})).await;
    let b = create(&app, json!({"level": 0, "agents": 1, "human_roles": [0]})).await;
    assert_ne!(a, b);

    assert_eq!(command(&app, &a, "goto(agent0, chopboard)").await.0, StatusCode::OK);
    assert_eq!(step(&app, &a).await.0, StatusCode::OK);

    let (_, va) = call(&app, Method::GET, &format!("/sessions/{a}/state"), None).await;
    let (_, vb) = call(&app, Method::GET, &format!("/sessions/{b}/state"), None).await;
    assert_eq!(va["tick"], 1);
    assert_eq!(vb["tick"], 0);
    assert_eq!(vb["agents"][0]["at"], "storage");

    let (_, list) = call(&app, Method::GET, "/sessions", None).await;
    assert_eq!(list["sessions"], json!([a, b]));
}

#[tokio::test]
async fn human_serves_an_order() {
    let app = app();
    let id = create(&app, json!({"level": 0, "agents": 1, "human_roles": [0]})).await;
    let (_, v) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(v["orders"][0]["dish"], "salmonMeatcake");

    let plan = [
        "get(agent0, storage, salmon)",
        "goto(agent0, chopboard)",
        "put(agent0, chopboard)",
        "activate(agent0, chopboard)",
        "noop(agent0)",
        "get(agent0, chopboard, salmonMeatcake)",
        "goto(agent0, servingtable)",
        "put(agent0, servingtable)",
    ];
    let mut last = Value::Null;
    for cmd in plan {
        let (status, v) = command(&app, &id, cmd).await;
        assert_eq!(status, StatusCode::OK, "{cmd}: {v}");
        let (status, v) = step(&app, &id).await;
        assert_eq!(status, StatusCode::OK, "{cmd}: {v}");
        last = v;
    }
    assert_eq!(last["completed"], 1);
    assert!(last["events"]
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e["code"] == "task_completed"));

    let (status, v) = call(&app, Method::GET, &format!("/sessions/{id}/replay"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v.as_str().unwrap().lines().count(), plan.len());
}

#[tokio::test]
async fn finished_sessions_refuse_steps() {
    let app = app();
    let id = create(
        &app,
        json!({"level": 0, "agents": 2, "planner": "greedy", "tau_int": 2, "max_steps": 2}),
    )
    .await;
    assert_eq!(step(&app, &id).await.0, StatusCode::OK);
    let (status, v) = step(&app, &id).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["finished"], true);
    let (status, v) = step(&app, &id).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "episode_finished");
}

#[test]
fn restored_sessions_match_their_logs() {
    let dir = tempfile::tempdir().unwrap();
    let pack = Arc::new(ContentPack::shipped());
    let first = AppState::new(pack.clone()).with_data_dir(dir.path()).unwrap();
    let view = first
        .create_session(CreateSession {
            level: 2,
            agents: 3,
            human_roles: vec![1],
            planner: "random".into(),
            tau_int: None,
            seed: 5,
            max_steps: None,
            ablation: None,
        })
        .unwrap();
    let id = view.id.clone();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let app = router(Arc::new(first));
    let before = rt.block_on(async {
        for cmd in [
            "get(agent1, storage, tuna)",
            "goto(agent1, chopboard)",
            "put(agent1, chopboard)",
            "noop(agent1)",
        ] {
            assert_eq!(command(&app, &id, cmd).await.0, StatusCode::OK, "{cmd}");
            assert_eq!(step(&app, &id).await.0, StatusCode::OK);
        }
        call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await.1
    });
    assert_eq!(before["tick"], 4);

    let second = router(Arc::new(AppState::new(pack.clone()).with_data_dir(dir.path()).unwrap()));
    let after = rt
        .block_on(call(&second, Method::GET, &format!("/sessions/{id}/state"), None))
        .1;
    assert_eq!(after["state_hash"], before["state_hash"]);
    assert_eq!(after["tick"], 4);

    let next = rt.block_on(async { create(&second, json!({"level": 0})).await });
    assert_ne!(next, id);

    let log = dir.path().join(format!("{id}.jsonl"));
    let mut text = std::fs::read_to_string(&log).unwrap();
    text = text.replacen("\"state_hash\":", "\"state_hash\":1", 1);
    std::fs::write(&log, text).unwrap();
    assert!(AppState::new(pack).with_data_dir(dir.path()).is_err());
}

#[test]
fn turn_deadline_fills_idle_humans_with_noops() {
    let app = AppState::new(Arc::new(ContentPack::shipped())).with_turn_deadline(Some(Duration::from_millis(20)));
    let view = app
        .create_session(serde_json::from_value(json!({"level": 0, "agents": 2, "human_roles": [0, 1]})).unwrap())
        .unwrap();
    assert!(app.auto_step_due().is_empty());
    std::thread::sleep(Duration::from_millis(30));
    assert_eq!(app.auto_step_due(), vec![view.id.clone()]);
    assert!(app.auto_step_due().is_empty());
}
