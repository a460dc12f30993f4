//! HTTP front end over [`Workbench`]. Handlers parse the request, run the
//! workbench call on the blocking pool and map [`ApiError`] codes onto
//! status codes.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Multipart, Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use causeway_core::api::{
    ApiError, ChildrenRequest, CreateProject, DiscoverRequest, EditRequest, EnvironmentRequest,
    ErrorCode, Workbench,
};
use causeway_core::Id;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

pub struct AppState {
    pub workbench: Arc<Workbench>,
    /// Shared bearer token; `None` leaves the API open.
    pub token: Option<String>,
    /// Limit on synchronous battery calls.
    pub battery_timeout: Duration,
}

pub struct Failure(pub ApiError);

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure(e)
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0)).into_response()
    }
}

type Reply = Result<Response, Failure>;
type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>, assets: Option<PathBuf>) -> Router {
    let models = "/projects/{p}/models/{m}";
    let api = Router::new()
        .route("/config", get(config))
        .route("/openapi.json", get(|| async { Json(crate::openapi::document()) }))
        .route("/projects", get(list_projects).post(create_project))
        .route("/projects/{p}", get(project_summary))
        .route("/projects/{p}/document", get(project_document))
        .route("/projects/{p}/dataset/columns", post(upload_columns))
        .route(models, get(model))
        .route(&format!("{models}/discover"), post(discover))
        .route(&format!("{models}/edges"), patch(edit))
        .route(&format!("{models}/edges/{{e}}/debate"), post(debate))
        .route(&format!("{models}/edges/{{e}}/environment"), post(environment))
        .route(&format!("{models}/variables/{{v}}/latent"), post(latent))
        .route(&format!("{models}/children"), post(children))
        .route(&format!("{models}/sem"), post(sem))
        .route("/jobs/{id}", get(job))
        .layer(middleware::from_fn_with_state(state.clone(), authorize))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn authorize(State(state): Shared, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            let e = ApiError::new(ErrorCode::BadRequest, "missing or wrong bearer token");
            return (StatusCode::UNAUTHORIZED, Json(e)).into_response();
        }
    }
    next.run(req).await
}

fn body<T: DeserializeOwned + Default>(bytes: &Bytes) -> Result<T, Failure> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    required(bytes)
}

fn required<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, Failure> {
    serde_json::from_slice(bytes).map_err(|e| Failure(ApiError::bad_request(format!("request body: {e}"))))
}

/// Runs `f` on the blocking pool.
async fn blocking<T, F>(state: &AppState, status: StatusCode, f: F) -> Reply
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Workbench) -> Result<T, ApiError> + Send + 'static,
{
    let wb = state.workbench.clone();
    let out = tokio::task::spawn_blocking(move || f(&wb))
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))??;
    Ok((status, Json(out)).into_response())
}

/// Prompt batteries: synchronous under a timeout when answers come from
/// fixtures, otherwise a background job answered with `202`.
async fn battery<T, F>(state: &AppState, f: F) -> Reply
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Workbench) -> Result<T, ApiError> + Send + 'static,
{
    if state.workbench.async_batteries() {
        let wb = state.workbench.clone();
        let id = state.workbench.jobs().spawn(move || {
            let out = f(&wb)?;
            serde_json::to_value(out).map_err(|e| ApiError::internal(e.to_string()))
        });
        let location = format!("/jobs/{id}");
        let body = json!({ "job": id, "status": "pending" });
        return Ok((StatusCode::ACCEPTED, [(header::LOCATION, location)], Json(body)).into_response());
    }
    match tokio::time::timeout(state.battery_timeout, blocking(state, StatusCode::OK, f)).await {
        Ok(reply) => reply,
        Err(_) => Err(Failure(ApiError::new(
            ErrorCode::LlmFailure,
            format!("battery did not finish within {:?}", state.battery_timeout),
        ))),
    }
}

async fn config(State(s): Shared) -> Json<Value> {
    Json(serde_json::to_value(s.workbench.client_config()).unwrap_or(Value::Null))
}

async fn list_projects(State(s): Shared) -> Reply {
    blocking(&s, StatusCode::OK, |wb| wb.list_projects()).await
}

/// Multipart form: `file` (CSV), `name`, optional `domain` and
/// `schema_hints` (JSON object of column to kind).
async fn create_project(State(s): Shared, mut form: Multipart) -> Reply {
    let mut req = CreateProject::default();
    let mut csv = None;
    while let Some(field) = form.next_field().await.map_err(multipart)? {
        let name = field.name().unwrap_or_default().to_owned();
        let file_name = field.file_name().map(str::to_owned);
        let data = field.bytes().await.map_err(multipart)?;
        match name.as_str() {
            "file" => {
                if req.name.is_empty() {
                    if let Some(f) = file_name {
                        req.name = f.trim_end_matches(".csv").to_owned();
                    }
                }
                csv = Some(data);
            }
            "name" => req.name = text(&data)?,
            "domain" => req.domain = text(&data)?,
            "schema_hints" => req.schema_hints = required(&data)?,
            _ => {}
        }
    }
    let csv = csv.ok_or_else(|| ApiError::bad_request("form field `file` with the CSV is required"))?;
    blocking(&s, StatusCode::CREATED, move |wb| wb.create_project(&req, &csv)).await
}

fn multipart(e: axum::extract::multipart::MultipartError) -> Failure {
    Failure(ApiError::bad_request(format!("multipart body: {e}")))
}

fn text(data: &Bytes) -> Result<String, Failure> {
    String::from_utf8(data.to_vec()).map_err(|_| Failure(ApiError::bad_request("form field is not UTF-8")))
}

async fn project_summary(State(s): Shared, Path(p): Path<Id>) -> Reply {
    blocking(&s, StatusCode::OK, move |wb| wb.summary(&p)).await
}

async fn project_document(State(s): Shared, Path(p): Path<Id>) -> Reply {
    let wb = s.workbench.clone();
    let text = tokio::task::spawn_blocking(move || wb.export(&p))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

async fn upload_columns(State(s): Shared, Path(p): Path<Id>, mut form: Multipart) -> Reply {
    let mut csv = None;
    while let Some(field) = form.next_field().await.map_err(multipart)? {
        if field.name() == Some("file") {
            csv = Some(field.bytes().await.map_err(multipart)?);
        }
    }
    let csv = csv.ok_or_else(|| ApiError::bad_request("form field `file` with the CSV is required"))?;
    blocking(&s, StatusCode::OK, move |wb| wb.upload_columns(&p, &csv)).await
}

async fn model(State(s): Shared, Path((p, m)): Path<(Id, Id)>) -> Reply {
    blocking(&s, StatusCode::OK, move |wb| wb.model(&p, &m)).await
}

async fn discover(State(s): Shared, Path((p, m)): Path<(Id, Id)>, bytes: Bytes) -> Reply {
    let req: DiscoverRequest = body(&bytes)?;
    blocking(&s, StatusCode::OK, move |wb| wb.discover(&p, &m, &req)).await
}

async fn edit(State(s): Shared, Path((p, m)): Path<(Id, Id)>, headers: HeaderMap, bytes: Bytes) -> Reply {
    let req: EditRequest = required(&bytes)?;
    let key = headers
        .get(IDEMPOTENCY_HEADER)
        .map(|v| v.to_str().map(str::to_owned))
        .transpose()
        .map_err(|_| ApiError::bad_request("idempotency key is not visible ASCII"))?;
    blocking(&s, StatusCode::OK, move |wb| wb.edit(&p, &m, &req, key.as_deref())).await
}

async fn debate(State(s): Shared, Path((p, m, e)): Path<(Id, Id, Id)>) -> Reply {
    battery(&s, move |wb| wb.debate(&p, &m, &e)).await
}

async fn environment(State(s): Shared, Path((p, m, e)): Path<(Id, Id, Id)>, bytes: Bytes) -> Reply {
    let req: EnvironmentRequest = required(&bytes)?;
    battery(&s, move |wb| wb.environment(&p, &m, &e, &req)).await
}

async fn latent(State(s): Shared, Path((p, m, v)): Path<(Id, Id, Id)>) -> Reply {
    battery(&s, move |wb| wb.latent(&p, &m, &v)).await
}

async fn children(State(s): Shared, Path((p, m)): Path<(Id, Id)>, bytes: Bytes) -> Reply {
    let req: ChildrenRequest = required(&bytes)?;
    blocking(&s, StatusCode::CREATED, move |wb| wb.children(&p, &m, &req)).await
}

async fn sem(State(s): Shared, Path((p, m)): Path<(Id, Id)>) -> Reply {
    blocking(&s, StatusCode::OK, move |wb| wb.sem(&p, &m)).await
}

async fn job(State(s): Shared, Path(id): Path<Id>) -> Reply {
    match s.workbench.jobs().get(&id) {
        Some(state) => Ok(Json(state).into_response()),
        None => Err(Failure(ApiError::not_found(format!("no job {id}")))),
    }
}
