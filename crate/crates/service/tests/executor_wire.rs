//! HTTP executors against a local stand-in service.

use std::fs;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::routing::post;
use axum::{Json, Router};
use nlcompose::config::ExecutorConfig;
use nlcompose::engine::EngineReply;
use nlcompose::executors::HttpExecutor;
use nlcompose::{load_encoder, open_engine, Config};
use nlcompose_core::composition::{ExecError, ExecutionRequest, Executor, ExecutorSet, StepStatus};
use nlcompose_core::TypedValue;
use serde_json::{json, Value};

async fn forecast(Json(req): Json<ExecutionRequest>) -> Json<Value> {
    let city = req.args.get("city").and_then(TypedValue::as_str).unwrap_or("nowhere").to_string();
    Json(json!({ "ok": { "summary": format!("rain in {city}"), "method": req.method_id } }))
}

async fn slow() -> Json<Value> {
    tokio::time::sleep(Duration::from_secs(3)).await;
    Json(json!({ "ok": "late" }))
}

fn stand_in() -> SocketAddr {
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    std_listener.set_nonblocking(true).unwrap();
    let addr = std_listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let app = Router::new()
                .route("/forecast", post(forecast))
                .route("/fail", post(|| async { Json(json!({ "error": "quota exceeded" })) }))
                .route("/garbage", post(|| async { "<html>busy</html>" }))
                .route("/slow", post(slow));
            let listener = tokio::net::TcpListener::from_std(std_listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    addr
}

fn request(city: &str) -> ExecutionRequest {
    ExecutionRequest {
        concrete_id: "RemoteWeather".into(),
        method_id: "getForecast".into(),
        args: [("city".to_string(), TypedValue::from(city))].into(),
    }
}

#[test]
fn ok_reply_is_the_result() {
    let addr = stand_in();
    let out = HttpExecutor::new(format!("http://{addr}/forecast")).execute(&request("Oslo")).unwrap();
    let TypedValue::Record(r) = out else { panic!("{out:?}") };
    assert_eq!(r["summary"], TypedValue::from("rain in Oslo"));
    assert_eq!(r["method"], TypedValue::from("getForecast"));
}

#[test]
fn error_reply_is_a_failure() {
    let addr = stand_in();
    let err = HttpExecutor::new(format!("http://{addr}/fail")).execute(&request("Oslo")).unwrap_err();
    assert_eq!(err, "quota exceeded");
}

#[test]
fn malformed_reply() {
    let addr = stand_in();
    let err = HttpExecutor::new(format!("http://{addr}/garbage")).execute(&request("Oslo")).unwrap_err();
    assert!(err.contains("malformed reply"), "{err}");
}

#[test]
fn refused_connection() {
    let free = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let err = HttpExecutor::new(format!("http://{free}/forecast")).execute(&request("Oslo")).unwrap_err();
    assert!(err.starts_with(&format!("http://{free}/forecast")), "{err}");
}

#[test]
fn slow_executor_times_out() {
    let addr = stand_in();
    let set = ExecutorSet::default()
        .with("remote", Arc::new(HttpExecutor::new(format!("http://{addr}/slow"))))
        .with_timeout(Duration::from_millis(200));
    assert_eq!(
        set.execute("remote", &request("Oslo")),
        Err(ExecError::Timeout(Duration::from_millis(200)))
    );
}

#[test]
fn bad_url_rejected_at_startup() {
    let mut config = Config::default();
    config.executors.insert("remote".into(), ExecutorConfig::Http { url: "not a url".into() });
    let err = nlcompose::executors::executor_set(&config).unwrap_err();
    assert!(err.to_string().contains("remote"), "{err}");
}

fn weather_engine(path: &str) -> nlcompose::Engine {
    let addr = stand_in();
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("weather.manifest"),
        "service Weather\n  method getForecast\n    capability \"tell me if it will rain\"\n    arg city \"city for the forecast\" kind LOCATION\n    returns forecast \"expected weather\"\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("remote.manifest"),
        "concrete RemoteWeather implements Weather\n  executor remote\n",
    )
    .unwrap();
    let mut config = Config::default();
    config.executors.insert(
        "remote".into(),
        ExecutorConfig::Http {
            url: format!("http://{addr}{path}"),
        },
    );
    config.executor_timeout_ms = 2000;
    let vectors = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/vectors50.txt");
    let encoder = load_encoder(Some(vectors.as_ref()), 0).unwrap();
    let (engine, watcher) = open_engine(dir.path(), encoder, config).unwrap();
    assert!(watcher.diagnostics().is_empty(), "{:?}", watcher.diagnostics());
    engine
}

#[test]
fn plan_runs_on_the_remote_executor() {
    let engine = weather_engine("/forecast");
    let reply = engine.one_shot("will it rain in London");
    let EngineReply::Executed { report, .. } = &reply else { panic!("{reply:?}") };
    let step = &report.steps[0];
    assert_eq!(step.status, StepStatus::Executed);
    assert_eq!(step.concrete_id.as_deref(), Some("RemoteWeather"));
    let Some(TypedValue::Record(r)) = &step.result else { panic!("{step:?}") };
    assert_eq!(r["summary"], TypedValue::from("rain in London"));
}

#[test]
fn remote_error_marks_the_step_failed() {
    let engine = weather_engine("/fail");
    let reply = engine.one_shot("will it rain in London");
    let EngineReply::Executed { report, summary, .. } = &reply else { panic!("{reply:?}") };
    assert_eq!(report.steps[0].status, StepStatus::Failed);
    assert_eq!(report.steps[0].error.as_deref(), Some("quota exceeded"));
    assert!(summary[0].contains("FAILED"), "{summary:?}");
}
