//! HTTP routes over [`Service`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use midas_core::CoreError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::{Service, ServiceError};

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Core(e) => match e {
                CoreError::Invalid(_) | CoreError::Case(_) | CoreError::Json(_) => StatusCode::BAD_REQUEST,
                CoreError::OutOfOrder { .. } => StatusCode::CONFLICT,
                CoreError::Contradictory => StatusCode::UNPROCESSABLE_ENTITY,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
            ServiceError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type Reply = Result<Response, ServiceError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

/// Runs blocking work off the async executor.
async fn run<T, F>(service: Arc<Service>, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&service)).await.map_err(|e| ServiceError::Store(std::io::Error::other(e)))?
}

fn ok<T: Serialize>(status: StatusCode, value: T) -> Reply {
    Ok((status, Json(value)).into_response())
}

async fn healthz() -> Response {
    Json(json!({ "status": "ok" })).into_response()
}

async fn create(State(s): State<Arc<Service>>, body: Bytes) -> Reply {
    let input = parse(&body)?;
    ok(StatusCode::CREATED, run(s, move |s| s.create(input)).await?)
}

async fn get_case(State(s): State<Arc<Service>>, Path(id): Path<String>) -> Reply {
    ok(StatusCode::OK, run(s, move |s| s.get(&id)).await?)
}

async fn observe(State(s): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> Reply {
    let entry = parse(&body)?;
    ok(StatusCode::OK, run(s, move |s| s.observe(&id, entry)).await?)
}

async fn recommend(State(s): State<Arc<Service>>, Path(id): Path<String>) -> Reply {
    ok(StatusCode::OK, run(s, move |s| s.recommend(&id)).await?)
}

async fn what_if(State(s): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> Reply {
    let request = parse(&body)?;
    ok(StatusCode::OK, run(s, move |s| s.what_if(&id, &request)).await?)
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/cases", post(create))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/observations", post(observe))
        .route("/cases/{id}/recommendation", post(recommend))
        .route("/cases/{id}/whatif", post(what_if))
        .with_state(service)
}

pub async fn serve(service: Arc<Service>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}
