//! HTTP API: dataset upload, preference elicitation and planning.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use tripplan_core::auxmetrics::{build_overlay, AuxDataset, DEFAULT_RADIUS_M};
use tripplan_core::geodata::MapGraph;
use tripplan_core::mode::Mode;
use tripplan_core::pcf::FareConfig;
use tripplan_core::search::SearchOptions;

use crate::error::ApiError;
use crate::io::{load_graph_dir, parse_aux_csv};
use crate::plan::{plan_request, profile_from_answers, PlanContext};
use crate::wire::{itinerary_json, PlanRequestDoc};

pub mod store;

use store::{valid_dataset_name, DatasetRecord, Registry, Store};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

pub struct AppState {
    pub graph: MapGraph,
    pub fares: FareConfig,
    pub options: SearchOptions,
    store: Store,
    registry: RwLock<Arc<Registry>>,
    // Serializes uploads so each one builds on the latest registry.
    writer: Mutex<()>,
}

impl AppState {
    /// Opens (or creates) the data directory and rebuilds its overlays.
    pub fn open(graph: MapGraph, fares: FareConfig, data_dir: &std::path::Path) -> Result<Self, store::StoreError> {
        let store = Store::open(data_dir)?;
        let registry = store.load(&graph)?;
        Ok(AppState {
            graph,
            fares,
            options: SearchOptions::default(),
            store,
            registry: RwLock::new(Arc::new(registry)),
            writer: Mutex::new(()),
        })
    }

    /// The current datasets and profiles; later uploads do not affect it.
    pub fn snapshot(&self) -> Arc<Registry> {
        self.registry.read().expect("registry lock").clone()
    }

    fn publish(&self, next: Registry) {
        *self.registry.write().expect("registry lock") = Arc::new(next);
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", get(list_datasets).post(upload_dataset))
        .route("/elicitation/questions", get(questions))
        .route("/elicitation/answers", post(answers))
        .route("/profiles/{id}", get(get_profile))
        .route("/plan", post(plan))
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "nodes": state.graph.node_count(),
        "edges": state.graph.edge_count(),
        "datasets": state.snapshot().datasets.len(),
    }))
}

async fn list_datasets(State(state): State<Arc<AppState>>) -> Json<Vec<DatasetRecord>> {
    Json(state.snapshot().datasets.values().cloned().collect())
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    name: Option<String>,
    radius: Option<f64>,
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(500, "InternalError", e.to_string())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

async fn upload_dataset(
    State(state): State<Arc<AppState>>,
    Query(query): Query<UploadQuery>,
    body: Bytes,
) -> Result<(StatusCode, Json<DatasetRecord>), ApiError> {
    let name = query
        .name
        .ok_or_else(|| ApiError::bad_request("missing query parameter `name`").with_field("name"))?;
    if !valid_dataset_name(&name) {
        return Err(ApiError::bad_request(format!(
            "dataset name `{name}` must start with a letter and use only letters, digits, `_` and `-`"
        ))
        .with_field("name"));
    }
    let radius = query.radius.unwrap_or(DEFAULT_RADIUS_M);
    if !(radius.is_finite() && radius > 0.0) {
        return Err(
            ApiError::unprocessable("NonpositiveRadius", format!("radius must be positive, got {radius}"))
                .with_field("radius"),
        );
    }
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::new(400, "MalformedCSV", "body is not UTF-8"))?;
    let points = parse_aux_csv(text).map_err(|e| ApiError::new(400, "MalformedCSV", e.to_string()))?;

    let task = tokio::task::spawn_blocking(move || {
        let _writer = state.writer.lock().expect("writer lock");
        let current = state.snapshot();
        let (id, version) = Store::next_dataset_id(&current, &name);
        let dataset = AuxDataset::new(&id, &name, points, radius)
            .map_err(|e| ApiError::new(400, "MalformedCSV", e.to_string()))?;
        let overlay = build_overlay(&state.graph, &dataset, radius).map_err(internal)?;
        let record = DatasetRecord {
            id,
            name,
            point_count: dataset.points.len(),
            radius,
            uploaded_at: unix_now(),
            overlay_version: version,
        };
        let next = state.store.add_dataset(&current, record.clone(), &body, overlay).map_err(internal)?;
        state.publish(next);
        Ok::<_, ApiError>(record)
    });
    let record = task.await.map_err(internal)??;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn questions(State(state): State<Arc<AppState>>) -> Json<Value> {
    let modes: Vec<&str> = Mode::ALL.iter().filter(|&&m| m != Mode::Car).map(|m| m.name()).collect();
    let datasets: Vec<String> = state.snapshot().datasets.keys().cloned().collect();
    Json(json!({
        "questions": [
            {
                "id": "hours_equivalent",
                "text": "How many hours of driving do you think are equivalent to one hour of each mode?",
                "per": "mode",
                "keys": modes,
                "unit": "hours of driving",
                "constraint": "positive",
            },
            {
                "id": "dollars_per_hour",
                "text": "How much in dollars would you pay to save an hour in traveling?",
                "unit": "dollars per hour",
                "constraint": "positive",
            },
            {
                "id": "dollars_per_aux",
                "text": "How much in dollars would you pay to avoid one unit of each auxiliary dataset's score?",
                "per": "dataset",
                "keys": datasets,
                "unit": "dollars per score unit",
                "constraint": "nonnegative",
                "optional": true,
            },
        ]
    }))
}

async fn answers(State(state): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<Value>), ApiError> {
    let doc: Value = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let profile = profile_from_answers(&doc)?;
    let task = tokio::task::spawn_blocking(move || {
        let _writer = state.writer.lock().expect("writer lock");
        let current = state.snapshot();
        let (next, stored) = state.store.add_profile(&current, profile, doc).map_err(internal)?;
        state.publish(next);
        Ok::<_, ApiError>(stored)
    });
    let stored = task.await.map_err(internal)??;
    let body = serde_json::to_value(&stored).map_err(internal)?;
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_profile(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let reg = state.snapshot();
    let (doc, _) = reg
        .profiles
        .get(&id)
        .ok_or_else(|| ApiError::not_found("UnknownProfile", format!("no profile `{id}`")))?;
    Ok(Json(serde_json::to_value(doc).map_err(internal)?))
}

#[derive(Debug, Default, Deserialize)]
struct PlanQuery {
    /// `itinerary` answers with the bare itinerary document, exactly as
    /// the CLI prints it with `--json`.
    view: Option<String>,
}

async fn plan(
    State(state): State<Arc<AppState>>,
    Query(query): Query<PlanQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let doc: PlanRequestDoc =
        serde_json::from_slice(&body).map_err(|e| ApiError::new(400, "InvalidRequest", e.to_string()))?;
    let bare = match query.view.as_deref() {
        None | Some("full") => false,
        Some("itinerary") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown view `{other}`")).with_field("view")),
    };
    let registry = state.snapshot();
    let task = tokio::task::spawn_blocking(move || {
        let profiles = |id: &str| registry.profiles.get(id).map(|(_, p)| p.clone());
        let ctx = PlanContext {
            graph: &state.graph,
            fares: &state.fares,
            overlays: &registry.overlays,
            profiles: &profiles,
            options: state.options,
        };
        plan_request(&ctx, &doc)
    });
    let response = task.await.map_err(internal)??;
    Ok(match (&response.itinerary, bare) {
        (Some(it), true) => ([(header::CONTENT_TYPE, "application/json")], itinerary_json(it)).into_response(),
        _ => Json(response).into_response(),
    })
}

/// Settings for [`serve`].
#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub graph_dir: PathBuf,
    pub data_dir: PathBuf,
    pub addr: SocketAddr,
}

pub async fn serve(config: ServeConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let bundle = load_graph_dir(&config.graph_dir)?;
    let state = Arc::new(AppState::open(bundle.graph, bundle.fares, &config.data_dir)?);
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

