//! HTTP adapter. Every request goes through a single fallback handler that
//! hands the raw parts to [`Api::handle`] on the blocking pool.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::extract::State;
use axum::http::{header, Request, Response, StatusCode};
use axum::Router;

use crate::service::{Api, ApiRequest};

/// Request bodies above this size are rejected with 413.
pub const MAX_BODY_BYTES: usize = 32 * 1024 * 1024;

pub fn router(api: Arc<Api>) -> Router {
    Router::new().fallback(handle).with_state(api)
}

async fn handle(State(api): State<Arc<Api>>, req: Request<Body>) -> Response<Body> {
    let (parts, body) = req.into_parts();
    let body = match to_bytes(body, MAX_BODY_BYTES).await {
        Ok(b) => b.to_vec(),
        Err(_) => return plain(StatusCode::PAYLOAD_TOO_LARGE, "request body too large"),
    };
    let request = ApiRequest {
        method: parts.method.as_str().to_string(),
        path: parts.uri.path().to_string(),
        query: parts.uri.query().unwrap_or("").to_string(),
        authorization: parts.headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).map(str::to_string),
        body,
    };
    let method = request.method.clone();
    let path = request.path.clone();
    let result = tokio::task::spawn_blocking(move || api.handle(&request)).await;
    match result {
        Ok(resp) => {
            tracing::debug!(%method, %path, status = resp.status, "request");
            Response::builder()
                .status(resp.status)
                .header(header::CONTENT_TYPE, resp.content_type)
                .body(Body::from(resp.body))
                .unwrap_or_else(|_| plain(StatusCode::INTERNAL_SERVER_ERROR, "bad response"))
        }
        Err(e) => {
            tracing::error!(%method, %path, "handler panicked: {e}");
            plain(StatusCode::INTERNAL_SERVER_ERROR, "internal error")
        }
    }
}

fn plain(status: StatusCode, msg: &'static str) -> Response<Body> {
    let mut resp = Response::new(Body::from(msg));
    *resp.status_mut() = status;
    resp
}

/// Binds `addr` and serves until the future is dropped.
pub async fn serve(api: Arc<Api>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_listener(api, listener).await
}

pub async fn serve_listener(api: Arc<Api>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(api)).await
}
