//! The JSON API over a real socket.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use nlcompose::{load_encoder, open_engine, Config};
use serde_json::{json, Value};

fn server() -> SocketAddr {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let encoder = load_encoder(Some(&dir.join("vectors50.txt")), 0).unwrap();
    let (engine, _) = open_engine(&dir.join("manifests"), encoder, Config::default()).unwrap();
    let engine = Arc::new(engine);
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    std_listener.set_nonblocking(true).unwrap();
    let addr = std_listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).unwrap();
            axum::serve(listener, nlcompose::http::router(engine)).await.unwrap();
        });
    });
    addr
}

struct Client {
    base: String,
    agent: ureq::Agent,
}

impl Client {
    fn new(addr: SocketAddr) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Client {
            base: format!("http://{addr}"),
            agent,
        }
    }

    fn read(mut response: ureq::http::Response<ureq::Body>) -> (u16, Value) {
        let status = response.status().as_u16();
        (status, response.body_mut().read_json().unwrap())
    }

    fn get(&self, path: &str) -> (u16, Value) {
        Self::read(self.agent.get(format!("{}{path}", self.base)).call().unwrap())
    }

    fn post(&self, path: &str, body: Value) -> (u16, Value) {
        Self::read(self.agent.post(format!("{}{path}", self.base)).send_json(body).unwrap())
    }

    fn delete(&self, path: &str) -> (u16, Value) {
        Self::read(self.agent.delete(format!("{}{path}", self.base)).call().unwrap())
    }

    fn session(&self) -> String {
        let (status, body) = self.post("/sessions", json!({}));
        assert_eq!(status, 201);
        body["session_id"].as_str().unwrap().to_string()
    }
}

#[test]
fn health_and_registry() {
    let c = Client::new(server());
    assert_eq!(c.get("/healthz"), (200, json!({ "status": "ok" })));
    let (status, reg) = c.get("/registry");
    assert_eq!(status, 200);
    assert_eq!(reg["model"], "vectors50");
    assert_eq!(reg["services"].as_array().unwrap().len(), 8);
    assert_eq!(reg["diagnostics"], json!([]));
    let calendar = reg["services"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["service_id"] == "Calendar")
        .unwrap();
    assert_eq!(calendar["concretes"], json!(["GoogleCalendarService", "YahooCalendarService"]));
    let check = &calendar["methods"][0];
    assert_eq!(check["method_id"], "checkAvailability");
    assert_eq!(check["args"], json!(["fromDate", "toDate"]));
    assert_eq!(check["returns_key"], "calendarAvailability");
}

#[test]
fn one_turn_executes() {
    let c = Client::new(server());
    let id = c.session();
    let (status, reply) = c.post(
        &format!("/sessions/{id}/utterance"),
        json!({ "text": "check what's on my schedule from Sept. 29 to Oct. 11" }),
    );
    assert_eq!(status, 200);
    assert_eq!(reply["kind"], "Executed");
    assert_eq!(reply["method_id"], "checkAvailability");
    assert_eq!(reply["report"]["steps"][0]["status"], "EXECUTED");

    let (status, wm) = c.get(&format!("/sessions/{id}/wm"));
    assert_eq!(status, 200);
    assert_eq!(wm["session_id"], id.as_str());
    assert!(wm["entries"]["calendarAvailability"].is_object(), "{wm}");
    assert_eq!(wm["transcript"].as_array().unwrap().len(), 2);
    assert_eq!(wm["pending"], Value::Null);
}

#[test]
fn questions_and_answers() {
    let c = Client::new(server());
    let id = c.session();
    let (_, ask) = c.post(
        &format!("/sessions/{id}/utterance"),
        json!({ "text": "look for flights to Paris for less than $700" }),
    );
    assert_eq!(ask["kind"], "AskArgValue");
    assert_eq!(ask["arg"], "from");

    let (_, wm) = c.get(&format!("/sessions/{id}/wm"));
    assert_eq!(wm["pending"]["variant"], "ArgValue");

    let (_, busy) = c.post(&format!("/sessions/{id}/utterance"), json!({ "text": "book a flight" }));
    assert_eq!(busy["kind"], "Error");
    assert_eq!(busy["code"], "pending_question_open");

    let (_, next) = c.post(&format!("/sessions/{id}/answer"), json!({ "answer": "Pittsburgh" }));
    assert_eq!(next["arg"], "class");
}

#[test]
fn answer_without_question() {
    let c = Client::new(server());
    let id = c.session();
    let (status, reply) = c.post(&format!("/sessions/{id}/answer"), json!({ "answer": "2" }));
    assert_eq!(status, 200);
    assert_eq!(reply["code"], "no_pending_question");
}

#[test]
fn session_context_and_lifetime() {
    let c = Client::new(server());
    let (status, body) = c.post("/sessions", json!({ "context": "BATTERY=LOW_BATTERY" }));
    assert_eq!(status, 201);
    let id = body["session_id"].as_str().unwrap();
    let (status, bad) = c.post("/sessions", json!({ "context": "BATTERY=SOLAR" }));
    assert_eq!(status, 400);
    assert!(bad["error"].is_string());

    assert_eq!(c.delete(&format!("/sessions/{id}")), (200, json!({ "deleted": id })));
    let (status, gone) = c.get(&format!("/sessions/{id}/wm"));
    assert_eq!(status, 404);
    assert!(gone["error"].as_str().unwrap().contains(id));
    assert_eq!(c.delete(&format!("/sessions/{id}")).0, 404);
}

#[test]
fn unknown_session() {
    let c = Client::new(server());
    let (status, body) = c.post("/sessions/session-999/utterance", json!({ "text": "book a flight" }));
    assert_eq!(status, 404);
    assert!(body["error"].is_string());
}

#[test]
fn sessions_are_independent() {
    let c = Client::new(server());
    let a = c.session();
    let b = c.session();
    assert_ne!(a, b);
    c.post(&format!("/sessions/{a}/utterance"), json!({ "text": "book a hotel room" }));
    let (_, wm_b) = c.get(&format!("/sessions/{b}/wm"));
    assert_eq!(wm_b["pending"], Value::Null);
    assert_eq!(wm_b["transcript"], json!([]));
}
