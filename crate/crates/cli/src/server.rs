//! HTTP JSON front end for [`qarena_core::play`].

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use qarena_core::play::{self, Catalog, PlayError, SessionStore, SessionView};
use serde::Deserialize;
use serde_json::json;

use crate::commands::ServeArgs;
use crate::{write_json, CliError, CliResult, Context};

pub struct ApiError(PlayError);

impl From<PlayError> for ApiError {
    fn from(e: PlayError) -> Self {
        ApiError(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(PlayError::bad_request("bad_request", e.body_text()))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0)).into_response()
    }
}

type ApiResult = Result<Json<SessionView>, ApiError>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewMatch {
    pub game: String,
    pub seat: String,
    pub agent: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewMove {
    pub action: String,
}

async fn agents(State(store): State<Arc<SessionStore>>) -> Json<Catalog> {
    Json(store.catalog().clone())
}

async fn games() -> Json<serde_json::Value> {
    Json(json!({ "api_version": play::API_VERSION, "games": play::games() }))
}

async fn create(State(store): State<Arc<SessionStore>>, body: Result<Json<NewMatch>, JsonRejection>) -> ApiResult {
    let Json(m) = body?;
    Ok(Json(store.create_match(&m.game, &m.seat, &m.agent)?))
}

async fn state(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult {
    Ok(Json(store.get_state(&id)?))
}

async fn make_move(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Result<Json<NewMove>, JsonRejection>,
) -> ApiResult {
    let Json(m) = body?;
    // Agent replies run minimax; keep them off the async workers.
    let view = tokio::task::spawn_blocking(move || store.post_move(&id, &m.action))
        .await
        .map_err(|e| PlayError { status: 500, error: "internal", detail: e.to_string(), legal_actions: None })??;
    Ok(Json(view))
}

async fn not_found() -> ApiError {
    ApiError(PlayError::not_found("not_found", "no such endpoint"))
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/api/agents", get(agents))
        .route("/api/games", get(games))
        .route("/api/match", post(create))
        .route("/api/match/{id}", get(state))
        .route("/api/match/{id}/move", post(make_move))
        .fallback(not_found)
        .with_state(store)
}

pub fn serve(ctx: &Context, args: ServeArgs) -> CliResult {
    let catalog = match &args.snapshots {
        Some(dir) => Catalog::scan(dir).map_err(|e| CliError::invalid(e.detail))?,
        None => Catalog::builtins(),
    };
    for w in &catalog.warnings {
        eprintln!("warning: {w}");
    }
    let seed = ctx.seed_or_default();
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(CliError::invalid)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| CliError::invalid(format!("cannot bind {}:{}: {e}", args.host, args.port)))?;
        let addr: SocketAddr = listener.local_addr().map_err(CliError::invalid)?;
        write_json(
            &ctx.out_dir("play", seed),
            "serve.json",
            &json!({ "address": addr.to_string(), "seed": seed, "agents": &catalog.agents, "warnings": &catalog.warnings }),
        )?;
        let store = Arc::new(SessionStore::new(catalog, seed));
        println!("listening on http://{addr}");
        axum::serve(listener, router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(CliError::invalid)?;
        println!("shut down");
        Ok(())
    })
}
