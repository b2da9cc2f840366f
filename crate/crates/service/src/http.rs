//! HTTP endpoints: repository management, job control, and term
//! suggestion, all under `/v1`. Every route except the health check
//! requires a valid API key; suggest additionally honors a per-repository
//! anonymous-read flag (off by default).

use std::sync::Arc;

use axum::body::Body;
use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequestParts, Json, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use serde::Serialize;

use termsuggest_core::engine::resolve_metric;
use termsuggest_core::repo::{RepoSource, RepositoryRecord};
use termsuggest_core::store::{Serving, Storage, StoreError};
use termsuggest_core::text::tokenize_free_text;
use termsuggest_pipeline::{PipelineError, Scheduler};

use crate::auth::{ApiKeyRecord, KeyStore};
use crate::ratelimit::RateLimiter;
use crate::wire::{
    self, ExportResponse, HealthResponse, RegisterRequest, RepositoryView, ScheduleResponse,
    SuggestResponse, SuggestionItem,
};

/// Maximum suggestions per request; larger asks are clamped. Bulk
/// consumers use the export endpoint instead.
pub const MAX_SUGGEST_K: u64 = 100;
pub const DEFAULT_SUGGEST_K: u64 = 10;

#[derive(Clone)]
pub struct AppState {
    pub storage: Arc<dyn Storage>,
    pub serving: Arc<Serving>,
    pub scheduler: Arc<Scheduler>,
    pub keys: Arc<KeyStore>,
    pub limiter: Arc<RateLimiter>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/repositories", post(register_repository))
        .route("/v1/repositories/{repo_id}", get(get_repository))
        .route("/v1/repositories/{repo_id}/schedule", post(schedule))
        .route("/v1/repositories/{repo_id}/suggest", get(suggest))
        .route("/v1/repositories/{repo_id}/export", get(export))
        .route("/v1/jobs/{job_id}", get(job_status))
        .fallback(unknown_route)
        .with_state(state)
}

// ---------------------------------------------------------------- errors

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    retry_after: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            retry_after: None,
        }
    }

    fn unauthorized(message: &str) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "invalid_key", message)
    }

    fn forbidden() -> Self {
        Self::new(
            StatusCode::FORBIDDEN,
            "forbidden",
            "the key does not own this resource",
        )
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    fn rate_limited(wait: std::time::Duration) -> Self {
        ApiError {
            retry_after: Some(wait.as_secs().max(1)),
            ..Self::new(
                StatusCode::TOO_MANY_REQUESTS,
                "rate_limited",
                "request rate exceeds the per-key limit",
            )
        }
    }

    fn internal(detail: impl std::fmt::Display) -> Self {
        Self::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            detail.to_string(),
        )
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownRepository(id) => Self::not_found(format!("repository '{id}'")),
            StoreError::UnknownSnapshot(id) => Self::not_found(format!("snapshot '{id}'")),
            StoreError::DuplicateName { owner: _, name } => Self::new(
                StatusCode::CONFLICT,
                "repository_exists",
                format!("a repository named '{name}' already exists for this owner"),
            ),
            other => Self::internal(other),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::UnknownRepository(id) => {
                Self::not_found(format!("repository '{id}'"))
            }
            PipelineError::UnknownJob(id) => Self::not_found(format!("job '{id}'")),
            PipelineError::JobAlreadyActive(id) => Self::new(
                StatusCode::CONFLICT,
                "job_active",
                format!("a job is already active for repository '{id}'"),
            ),
            other => Self::internal(other),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = wire::ErrorBody {
            error: wire::ErrorDetail {
                code: self.code.to_string(),
                message: self.message,
            },
        };
        let mut response = json_response(self.status, &body);
        if let Some(seconds) = self.retry_after {
            if let Ok(value) = seconds.to_string().parse() {
                response.headers_mut().insert(header::RETRY_AFTER, value);
            }
        }
        response
    }
}

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let bytes = serde_json::to_vec(body).expect("wire types serialize");
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, wire::CONTENT_TYPE)
        .body(Body::from(bytes))
        .expect("static response parts")
}

// ------------------------------------------------------------ extractors

/// A validated, rate-limited API key.
pub struct Authed(pub ApiKeyRecord);

/// Like [`Authed`], but an absent Authorization header yields `None`
/// instead of 401 (the suggest route decides based on the repository's
/// anonymous flag). A present-but-invalid key still fails.
pub struct OptionalAuthed(pub Option<ApiKeyRecord>);

fn bearer_token(parts: &Parts) -> Option<String> {
    let value = parts.headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    value
        .strip_prefix("Bearer ")
        .or_else(|| value.strip_prefix("bearer "))
        .map(|token| token.trim().to_string())
}

fn validate_key(state: &AppState, token: &str) -> Result<ApiKeyRecord, ApiError> {
    let record = state
        .keys
        .authenticate(token)
        .ok_or_else(|| ApiError::unauthorized("unknown, revoked, or malformed API key"))?;
    state
        .limiter
        .check(&record.key_id)
        .map_err(ApiError::rate_limited)?;
    Ok(record)
}

impl FromRequestParts<AppState> for Authed {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        match bearer_token(parts) {
            Some(token) => validate_key(state, &token).map(Authed),
            None => Err(ApiError::unauthorized(
                "missing Authorization: Bearer <api key> header",
            )),
        }
    }
}

impl FromRequestParts<AppState> for OptionalAuthed {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        match bearer_token(parts) {
            Some(token) => validate_key(state, &token).map(|r| OptionalAuthed(Some(r))),
            None => Ok(OptionalAuthed(None)),
        }
    }
}

fn owned_repository(
    state: &AppState,
    key: &ApiKeyRecord,
    repo_id: &str,
) -> Result<RepositoryRecord, ApiError> {
    let record = state.storage.get_repository(repo_id)?;
    if record.owner != key.owner {
        return Err(ApiError::forbidden());
    }
    Ok(record)
}

// -------------------------------------------------------------- handlers

async fn health() -> Response {
    json_response(
        StatusCode::OK,
        &HealthResponse {
            status: "ok".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    )
}

async fn unknown_route() -> ApiError {
    ApiError::not_found("unknown endpoint")
}

fn invalid_source(detail: impl std::fmt::Display) -> ApiError {
    ApiError::new(
        StatusCode::UNPROCESSABLE_ENTITY,
        "invalid_source",
        detail.to_string(),
    )
}

async fn register_repository(
    State(state): State<AppState>,
    Authed(key): Authed,
    body: Result<Json<RegisterRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(request) = body.map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.body_text())
    })?;
    if request.name.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_name",
            "repository name must not be empty",
        ));
    }

    let source = match (request.endpoint, request.files) {
        (Some(endpoint), None) => {
            let config = endpoint.into_config().map_err(invalid_source)?;
            // Validate the endpoint before accepting the registration.
            let probe = config.clone();
            let description = tokio::task::spawn_blocking(move || {
                termsuggest_harvest::OaiClient::new(probe)?.identify()
            })
            .await
            .map_err(ApiError::internal)?
            .map_err(|e| invalid_source(format!("endpoint validation failed: {e}")))?;
            tracing::info!(repository = %description.name, "validated OAI endpoint");
            RepoSource::Endpoint(config)
        }
        (None, Some(files)) => {
            if files.is_empty() {
                return Err(invalid_source("file source lists no files"));
            }
            let paths: Vec<std::path::PathBuf> =
                files.into_iter().map(std::path::PathBuf::from).collect();
            for path in &paths {
                if !path.is_file() {
                    return Err(invalid_source(format!(
                        "file '{}' is not readable on the server",
                        path.display()
                    )));
                }
            }
            RepoSource::Files { paths }
        }
        _ => {
            return Err(invalid_source(
                "exactly one of 'endpoint' or 'files' must be given",
            ))
        }
    };

    let mapping = match request.mapping {
        Some(spec) => spec.into_mapping().map_err(|e| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_mapping", e)
        })?,
        None => Default::default(),
    };
    let pipeline = match request.pipeline {
        Some(spec) => spec.into_config().map_err(|e| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_pipeline", e)
        })?,
        None => Default::default(),
    };

    let repo_id = format!("r-{}", &uuid::Uuid::new_v4().simple().to_string()[..12]);
    let mut record = RepositoryRecord::new(
        repo_id,
        request.name.trim(),
        &key.owner,
        source,
        mapping,
        pipeline,
    );
    if let Some(flag) = request.allow_anonymous_suggest {
        record.allow_anonymous_suggest = flag;
    }
    if let Some(flag) = request.retain_raw {
        record.retain_raw = flag;
    }
    state.storage.create_repository(&record)?;
    Ok(json_response(
        StatusCode::CREATED,
        &RepositoryView::from_record(&record),
    ))
}

async fn get_repository(
    State(state): State<AppState>,
    Authed(key): Authed,
    Path(repo_id): Path<String>,
) -> Result<Response, ApiError> {
    let record = owned_repository(&state, &key, &repo_id)?;
    Ok(json_response(
        StatusCode::OK,
        &RepositoryView::from_record(&record),
    ))
}

async fn schedule(
    State(state): State<AppState>,
    Authed(key): Authed,
    Path(repo_id): Path<String>,
) -> Result<Response, ApiError> {
    owned_repository(&state, &key, &repo_id)?;
    let job = state.scheduler.schedule(&repo_id)?;
    Ok(json_response(
        StatusCode::ACCEPTED,
        &ScheduleResponse {
            status_url: format!("/v1/jobs/{}", job.job_id),
            job_id: job.job_id,
            repo_id,
        },
    ))
}

async fn job_status(
    State(state): State<AppState>,
    Authed(key): Authed,
    Path(job_id): Path<String>,
) -> Result<Response, ApiError> {
    let job = state.scheduler.job_status(&job_id)?;
    owned_repository(&state, &key, &job.repo_id)?;
    Ok(json_response(StatusCode::OK, &job))
}

#[derive(Debug, Deserialize)]
struct SuggestParams {
    term: Option<String>,
    k: Option<u64>,
    metric: Option<String>,
    min_df: Option<u64>,
}

async fn suggest(
    State(state): State<AppState>,
    OptionalAuthed(key): OptionalAuthed,
    Path(repo_id): Path<String>,
    Query(params): Query<SuggestParams>,
) -> Result<Response, ApiError> {
    // Keyless callers learn nothing, not even whether the repository
    // exists, unless it opted into anonymous reads.
    let record = match state.storage.get_repository(&repo_id) {
        Ok(record) => record,
        Err(e) => {
            return Err(match &key {
                None => ApiError::unauthorized(
                    "missing Authorization: Bearer <api key> header",
                ),
                Some(_) => ApiError::from(e),
            })
        }
    };
    match &key {
        Some(key) => {
            if record.owner != key.owner {
                return Err(ApiError::forbidden());
            }
        }
        None => {
            if !record.allow_anonymous_suggest {
                return Err(ApiError::unauthorized(
                    "missing Authorization: Bearer <api key> header",
                ));
            }
            state
                .limiter
                .check(&format!("anon:{repo_id}"))
                .map_err(ApiError::rate_limited)?;
        }
    }

    let term = params.term.unwrap_or_default();
    let tokens = tokenize_free_text(&term, &record.pipeline);
    if tokens.is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "empty_term",
            "the term is empty after normalization",
        ));
    }
    let k = params.k.unwrap_or(DEFAULT_SUGGEST_K);
    if k == 0 {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_k",
            "k must be at least 1",
        ));
    }
    let k = k.min(MAX_SUGGEST_K) as usize;
    let metric_name = params.metric.unwrap_or_else(|| "jaccard".to_string());
    let metric = resolve_metric(&metric_name).ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "unknown_metric",
            format!("unknown metric '{metric_name}'; valid: jaccard, dice, nwd"),
        )
    })?;
    let min_df = params.min_df.unwrap_or(1).max(1);

    let published = state
        .storage
        .published_snapshot(&repo_id)?
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::CONFLICT,
                "no_published_snapshot",
                "the repository has no published snapshot yet",
            )
        })?;
    let served = state.serving.get_current(&published, state.storage.as_ref())?;

    let result = if tokens.len() == 1 {
        served.index.recommend(&tokens[0], k, metric, min_df)
    } else {
        served.index.recommend_multi(&tokens, k, metric, min_df)
    };
    let response = SuggestResponse {
        query: tokens.join(" "),
        repo_id,
        metric: metric.name().to_string(),
        snapshot: served.id.clone(),
        corpus_size: served.index.n_docs(),
        term_found: result.query_in_corpus,
        suggestions: result.recommendations.iter().map(SuggestionItem::from).collect(),
    };
    Ok(json_response(StatusCode::OK, &response))
}

#[derive(Debug, Deserialize)]
struct ExportParams {
    metric: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Authed(key): Authed,
    Path(repo_id): Path<String>,
    Query(params): Query<ExportParams>,
) -> Result<Response, ApiError> {
    owned_repository(&state, &key, &repo_id)?;
    let metric_name = params.metric.unwrap_or_else(|| "jaccard".to_string());
    let metric = resolve_metric(&metric_name).ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "unknown_metric",
            format!("unknown metric '{metric_name}'; valid: jaccard, dice, nwd"),
        )
    })?;
    let published = state
        .storage
        .published_snapshot(&repo_id)?
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::CONFLICT,
                "no_published_snapshot",
                "the repository has no published snapshot yet",
            )
        })?;
    let served = state.serving.get_current(&published, state.storage.as_ref())?;
    let response = ExportResponse {
        repo_id,
        snapshot: served.id.clone(),
        metric: metric.name().to_string(),
        corpus_size: served.index.n_docs(),
        rows: wire::export_rows(&served.index, metric),
    };
    Ok(json_response(StatusCode::OK, &response))
}
