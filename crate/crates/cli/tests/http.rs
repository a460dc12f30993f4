use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use causeway_cli::server::{router, AppState};
use causeway_core::api::Workbench;
use causeway_core::llm::{Gateway, LlmConfig};
use reqwest::blocking::{multipart, Client};
use reqwest::StatusCode;
use serde_json::{json, Value};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Server {
    base: String,
    client: Client,
    _dir: tempfile::TempDir,
}

impl Server {
    fn start(token: Option<&str>, assets: Option<PathBuf>) -> Server {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::new(LlmConfig::replay(fixtures().join("llm"))).unwrap();
        let state = Arc::new(AppState {
            workbench: Arc::new(Workbench::new(dir.path(), Arc::new(gw)).unwrap()),
            token: token.map(str::to_owned),
            battery_timeout: Duration::from_secs(30),
        });
        let app = router(state, assets);
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, app).await.unwrap();
            });
        });
        let addr = rx.recv().unwrap();
        Server {
            base: format!("http://{addr}"),
            client: Client::new(),
            _dir: dir,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn create(&self, csv: &[u8], name: &str, domain: &str) -> Value {
        let form = multipart::Form::new()
            .text("name", name.to_owned())
            .text("domain", domain.to_owned())
            .part("file", multipart::Part::bytes(csv.to_vec()).file_name("data.csv"));
        let r = self.client.post(self.url("/projects")).multipart(form).send().unwrap();
        assert_eq!(r.status(), StatusCode::CREATED);
        r.json().unwrap()
    }
}

fn autompg(s: &Server) -> (String, String) {
    let csv = std::fs::read(fixtures().join("data/auto-mpg.csv")).unwrap();
    let p = s.create(&csv, "autompg", "automotive engineering");
    (p["id"].as_str().unwrap().to_owned(), p["root_model"].as_str().unwrap().to_owned())
}

#[test]
fn config_describes_replay_mode() {
    let s = Server::start(None, None);
    let c: Value = s.client.get(s.url("/config")).send().unwrap().json().unwrap();
    assert_eq!(c["llm_mode"], "replay");
    assert_eq!(c["async_batteries"], false);
    assert_eq!(c["theme"]["skyblue"], "#64b5f6");
}

#[test]
fn errors_carry_code_and_status() {
    let s = Server::start(None, None);
    let (p, m) = autompg(&s);
    let r = s
        .client
        .post(s.url(&format!("/projects/{p}/models/{m}/edges/01NOSUCHEDGE/debate")))
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    let e: Value = r.json().unwrap();
    assert_eq!(e["code"], "not_found");
    assert!(!e["message"].as_str().unwrap().is_empty());

    let r = s
        .client
        .patch(s.url(&format!("/projects/{p}/models/{m}/edges")))
        .body("{not json")
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    assert_eq!(r.json::<Value>().unwrap()["code"], "bad_request");

    let r = s.client.get(s.url("/projects/nosuch")).send().unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
}

#[test]
fn missing_fixture_reports_its_key() {
    let s = Server::start(None, None);
    let (p, m) = autompg(&s);
    let model: Value = s
        .client
        .get(s.url(&format!("/projects/{p}/models/{m}")))
        .send()
        .unwrap()
        .json()
        .unwrap();
    let mpg = model["variables"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["name"] == "mpg")
        .unwrap()["id"]
        .as_str()
        .unwrap()
        .to_owned();
    let before = s.client.get(s.url(&format!("/projects/{p}/document"))).send().unwrap().text().unwrap();
    let r = s
        .client
        .post(s.url(&format!("/projects/{p}/models/{m}/variables/{mpg}/latent")))
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::BAD_GATEWAY);
    let e: Value = r.json().unwrap();
    assert_eq!(e["code"], "llm_failure");
    assert_eq!(e["detail"]["key"].as_str().unwrap().len(), 64);
    let after = s.client.get(s.url(&format!("/projects/{p}/document"))).send().unwrap().text().unwrap();
    assert_eq!(before, after);
}

#[test]
fn patch_with_idempotency_key_is_replayed() {
    let s = Server::start(None, None);
    let (p, m) = autompg(&s);
    let model: Value = s
        .client
        .get(s.url(&format!("/projects/{p}/models/{m}")))
        .send()
        .unwrap()
        .json()
        .unwrap();
    let id = |name: &str| {
        model["variables"]
            .as_array()
            .unwrap()
            .iter()
            .find(|v| v["name"] == name)
            .unwrap()["id"]
            .clone()
    };
    let body = json!({ "op": "add", "src": id("weight"), "dst": id("mpg") });
    let send = || {
        s.client
            .patch(s.url(&format!("/projects/{p}/models/{m}/edges")))
            .header("Idempotency-Key", "first")
            .json(&body)
            .send()
            .unwrap()
    };
    let a = send();
    assert_eq!(a.status(), StatusCode::OK);
    let a: Value = a.json().unwrap();
    assert!(a["bic_delta"].is_object());
    let b: Value = send().json().unwrap();
    assert_eq!(a, b);
    let summary: Value = s.client.get(s.url(&format!("/projects/{p}"))).send().unwrap().json().unwrap();
    assert_eq!(summary["audit_entries"], 2);
    assert_eq!(summary["models"][0]["edges"], 1);
}

#[test]
fn token_guards_the_api() {
    let s = Server::start(Some("sesame"), None);
    let r = s.client.get(s.url("/projects")).send().unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);
    let r = s.client.get(s.url("/projects")).bearer_auth("sesame").send().unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    assert_eq!(r.json::<Value>().unwrap(), json!([]));
}

#[test]
fn static_assets_and_openapi_are_served() {
    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<html>dashboard</html>").unwrap();
    let s = Server::start(None, Some(assets.path().to_owned()));
    let page = s.client.get(s.url("/")).send().unwrap().text().unwrap();
    assert!(page.contains("dashboard"));
    let doc: Value = s.client.get(s.url("/openapi.json")).send().unwrap().json().unwrap();
    let paths = doc["paths"].as_object().unwrap();
    for p in [
        "/projects",
        "/projects/{p}/models/{m}/edges",
        "/projects/{p}/models/{m}/edges/{e}/debate",
        "/projects/{p}/models/{m}/variables/{v}/latent",
        "/projects/{p}/dataset/columns",
        "/jobs/{id}",
    ] {
        assert!(paths.contains_key(p), "{p}");
    }
}

#[test]
fn column_upload_reports_promotions() {
    let s = Server::start(None, None);
    let (p, _) = autompg(&s);
    let mut csv = String::from("Torque\n");
    for i in 0..398 {
        csv.push_str(&format!("{}\n", 100 + i % 50));
    }
    let form = multipart::Form::new().part("file", multipart::Part::bytes(csv.into_bytes()).file_name("t.csv"));
    let r = s
        .client
        .post(s.url(&format!("/projects/{p}/dataset/columns")))
        .multipart(form)
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let u: Value = r.json().unwrap();
    // No hypothesized Torque yet, so nothing to promote.
    assert_eq!(u["promoted"], json!([]));
    assert_eq!(u["dataset"]["columns"].as_array().unwrap().len(), 9);
}
