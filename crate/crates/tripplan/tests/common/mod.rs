//! Fixture cases and helpers for driving both the CLI binary and the
//! HTTP router in-process.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use tripplan::io::load_graph_dir;
use tripplan::service::{router, AppState};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

/// One planning request, expressible both as CLI arguments and as a
/// `POST /plan` body.
#[derive(Debug, Clone)]
pub struct Case {
    pub name: &'static str,
    pub graph: &'static str,
    pub from: &'static str,
    pub to: &'static str,
    pub depart: &'static str,
    /// Fixture-relative constraint file.
    pub constraint: Option<&'static str>,
    pub prefs: &'static str,
    /// `(name, fixture-relative csv, radius)`.
    pub aux: Option<(&'static str, &'static str, f64)>,
    pub no_default: bool,
    pub modes: Option<&'static [&'static str]>,
}

impl Case {
    const fn new(name: &'static str, graph: &'static str, from: &'static str, to: &'static str, prefs: &'static str) -> Self {
        Case {
            name,
            graph,
            from,
            to,
            depart: "08:00:00",
            constraint: None,
            prefs,
            aux: None,
            no_default: false,
            modes: None,
        }
    }

    pub fn cli_args(&self) -> Vec<String> {
        let mut args: Vec<String> = vec![
            "plan".into(),
            "--graph".into(),
            fixture(self.graph).display().to_string(),
            "--from".into(),
            self.from.into(),
            "--to".into(),
            self.to.into(),
            "--depart".into(),
            self.depart.into(),
            "--prefs".into(),
            fixture(self.prefs).display().to_string(),
        ];
        if let Some(c) = self.constraint {
            args.push("--constraints".into());
            args.push(fixture(c).display().to_string());
        }
        if let Some((name, csv, radius)) = self.aux {
            args.push("--aux".into());
            args.push(format!("{name}={}:{radius}", fixture(csv).display()));
        }
        if self.no_default {
            args.push("--no-default-constraint".into());
        }
        if let Some(modes) = self.modes {
            args.push("--modes".into());
            args.push(modes.join(","));
        }
        args
    }

    fn endpoint(text: &str) -> Value {
        match text.split_once(',') {
            Some((lat, lon)) => json!({"lat": lat.parse::<f64>().unwrap(), "lon": lon.parse::<f64>().unwrap()}),
            None => json!(text),
        }
    }

    /// The request body a client would send for the same inputs.
    pub fn request_body(&self) -> Value {
        let prefs: Value = serde_json::from_str(&std::fs::read_to_string(fixture(self.prefs)).unwrap()).unwrap();
        let mut body = json!({
            "from": Self::endpoint(self.from),
            "to": Self::endpoint(self.to),
            "depart": self.depart,
            "preferences": prefs,
        });
        if let Some(c) = self.constraint {
            let text = std::fs::read_to_string(fixture(c)).unwrap();
            body["constraint"] = if c.ends_with(".json") {
                serde_json::from_str(&text).unwrap()
            } else {
                json!(text.trim())
            };
        }
        if let Some((name, _, _)) = self.aux {
            body["datasets"] = json!([name]);
        }
        if self.no_default {
            body["include_default_constraint"] = json!(false);
        }
        if let Some(modes) = self.modes {
            body["allowed_modes"] = json!(modes);
        }
        body
    }
}

/// Every fixture request; the parity check runs all of them.
pub fn cases() -> Vec<Case> {
    vec![
        Case {
            constraint: Some("alice/constraint.ltl"),
            ..Case::new("alice", "alice", "H", "O", "alice/prefs.json")
        },
        Case {
            constraint: Some("alice/constraint.ltl"),
            ..Case::new("alice-public-averse", "alice", "H", "O", "alice/prefs_public_averse.json")
        },
        Case::new("alice-unconstrained", "alice", "H", "O", "alice/prefs.json"),
        Case {
            constraint: Some("alice/constraint.ltl"),
            depart: "21:50:00",
            ..Case::new("alice-late", "alice", "H", "O", "alice/prefs.json")
        },
        Case {
            constraint: Some("bob/constraint.ltl"),
            aux: Some(("crime", "bob/crime.csv", 200.0)),
            ..Case::new("bob", "bob", "g20", "g24", "bob/prefs.json")
        },
        Case {
            aux: Some(("crime", "bob/crime.csv", 200.0)),
            ..Case::new("bob-priced", "bob", "g20", "g24", "bob/prefs.json")
        },
        Case {
            aux: Some(("crime", "bob/crime.csv", 200.0)),
            ..Case::new("bob-indifferent", "bob", "g20", "g24", "bob/prefs_indifferent.json")
        },
        Case {
            constraint: Some("bob/constraint.ltl"),
            aux: Some(("crime", "bob/crime.csv", 200.0)),
            ..Case::new("bob-diagonal", "bob", "g00", "g44", "bob/prefs.json")
        },
        Case {
            constraint: Some("square/constraint.json"),
            ..Case::new("square-tree-constraint", "square", "A", "C", "square/prefs.json")
        },
        Case {
            modes: Some(&["walk", "public"]),
            ..Case::new("square-coordinates", "square", "40.11001,-88.22701", "40.117195,-88.217593", "square/prefs.json")
        },
        Case {
            no_default: true,
            ..Case::new("square-no-default", "square", "B", "D", "square/prefs.json")
        },
    ]
}

pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_cli<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> CliRun {
    let out = Command::new(env!("CARGO_BIN_EXE_tripplan"))
        .args(args)
        .output()
        .expect("cli runs");
    CliRun {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// A fresh service over one fixture graph with an empty data directory.
pub fn service(graph: &str, data_dir: &std::path::Path) -> (Arc<AppState>, Router) {
    let bundle = load_graph_dir(&fixture(graph)).unwrap();
    let state = Arc::new(AppState::open(bundle.graph, bundle.fares, data_dir).unwrap());
    let app = router(state.clone());
    (state, app)
}

pub async fn call(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn call_json(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&bytes)))
    };
    (status, value)
}

/// Plans `case` through the service, uploading its dataset first.
/// Returns the `view=itinerary` status and body.
pub async fn service_plan(case: &Case) -> (StatusCode, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service(case.graph, dir.path());
    if let Some((name, csv, radius)) = case.aux {
        let body = std::fs::read(fixture(csv)).unwrap();
        let (status, _) = call(&app, "POST", &format!("/datasets?name={name}&radius={radius}"), body).await;
        assert_eq!(status, StatusCode::CREATED);
    }
    call(&app, "POST", "/plan?view=itinerary", case.request_body().to_string()).await
}
