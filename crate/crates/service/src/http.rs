//! JSON-over-HTTP surface of [`Service`].
//!
//! Every route except registration and login requires
//! `Authorization: Bearer <token>`. Failures are returned as
//! `application/problem+json` documents carrying a stable `code`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::header::{AUTHORIZATION, CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use paramsus::dataset::{DatasetFormat, Scope};
use paramsus::export::{delta_csv, delta_json};

use crate::error::ServiceError;
use crate::model::{AccountStatus, Decision, ReportId, SubmissionId, SubmissionStatus, UserId};
use crate::service::{ExportFormat, SearchRequest, Service};

pub type AppState = Arc<Service>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let code = self.code();
        let mut body = json!({
            "type": format!("urn:paramsus:problem:{code}"),
            "title": status.canonical_reason().unwrap_or("error"),
            "status": status.as_u16(),
            "code": code,
            "detail": self.to_string(),
        });
        match &self {
            ServiceError::DatasetInvalid(findings) => {
                body["findings"] = json!(findings.iter().map(|f| f.to_string()).collect::<Vec<_>>());
            }
            ServiceError::Scope(paramsus::ScopeError::YearUnavailable { available, .. }) => {
                body["available_years"] = json!(available);
            }
            _ => {}
        }
        let mut response = (status, Json(body)).into_response();
        response.headers_mut().insert(CONTENT_TYPE, HeaderValue::from_static("application/problem+json"));
        response
    }
}

/// The authenticated caller.
pub struct Caller {
    pub user_id: UserId,
    pub token: String,
}

impl FromRequestParts<AppState> for Caller {
    type Rejection = ServiceError;

    async fn from_request_parts(parts: &mut Parts, service: &AppState) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or(ServiceError::Unauthenticated)?;
        let user_id = service.authenticate(token)?;
        Ok(Caller { user_id, token: token.to_string() })
    }
}

type ApiResult<T> = Result<T, ServiceError>;

pub fn router(service: AppState) -> Router {
    Router::new()
        .route("/auth/register", post(register))
        .route("/auth/login", post(login))
        .route("/auth/logout", post(logout))
        .route("/auth/me", get(me))
        .route("/admin/registrations", get(list_registrations).post(review_registration))
        .route("/admin/datasets", get(list_datasets).post(review_dataset))
        .route("/datasets", post(submit_dataset).get(my_datasets))
        .route("/scopes/states", get(states))
        .route("/scopes/{key}/regions", get(regions))
        .route("/scopes/{key}/municipalities", get(municipalities))
        .route("/scopes/{key}/years", get(years))
        .route("/searches", post(search))
        .route("/searches/{id}", get(fetch_report))
        .route("/searches/{id}/export", get(export))
        .route("/searches/{id}/compare/{other}", get(compare))
        .route("/ledger", get(ledger))
        .fallback(|| async { ServiceError::NotFound("route".into()) })
        .with_state(service)
}

/// JSON body extractor whose rejections are problem documents too.
pub struct JsonBody<T>(pub T);

impl<T, S> axum::extract::FromRequest<S> for JsonBody<T>
where
    T: serde::de::DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| JsonBody(v))
            .map_err(|e| ServiceError::BadRequest(e.body_text()))
    }
}

#[derive(Deserialize)]
struct Credentials {
    login: String,
    password: String,
}

async fn register(State(service): State<AppState>, JsonBody(body): JsonBody<Credentials>) -> ApiResult<impl IntoResponse> {
    let account = service.register_user(&body.login, &body.password)?;
    Ok((StatusCode::CREATED, Json(account)))
}

async fn login(State(service): State<AppState>, JsonBody(body): JsonBody<Credentials>) -> ApiResult<impl IntoResponse> {
    let token = service.login(&body.login, &body.password)?;
    let user_id = service.authenticate(&token)?;
    let who = service.whoami(user_id)?;
    Ok(Json(json!({
        "token": token,
        "expires_after_inactivity_secs": service.config().session_timeout.num_seconds(),
        "account": who.account,
        "role": who.role,
    })))
}

async fn logout(State(service): State<AppState>, caller: Caller) -> StatusCode {
    service.logout(&caller.token);
    StatusCode::NO_CONTENT
}

async fn me(State(service): State<AppState>, caller: Caller) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.whoami(caller.user_id)?))
}

#[derive(Deserialize)]
struct StatusFilter<S> {
    status: Option<S>,
}

async fn list_registrations(
    State(service): State<AppState>,
    caller: Caller,
    Query(filter): Query<StatusFilter<AccountStatus>>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.registrations(caller.user_id, filter.status)?))
}

#[derive(Deserialize)]
struct RegistrationReview {
    account_id: UserId,
    decision: Decision,
    note: Option<String>,
}

async fn review_registration(
    State(service): State<AppState>,
    caller: Caller,
    JsonBody(body): JsonBody<RegistrationReview>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.review_registration(caller.user_id, body.account_id, body.decision, body.note)?))
}

async fn list_datasets(
    State(service): State<AppState>,
    caller: Caller,
    Query(filter): Query<StatusFilter<SubmissionStatus>>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.review_queue(caller.user_id, filter.status)?))
}

async fn my_datasets(State(service): State<AppState>, caller: Caller) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.submissions(caller.user_id, None)?))
}

#[derive(Deserialize)]
struct DatasetReview {
    submission_id: SubmissionId,
    decision: Decision,
    note: Option<String>,
}

async fn review_dataset(
    State(service): State<AppState>,
    caller: Caller,
    JsonBody(body): JsonBody<DatasetReview>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.review_dataset(caller.user_id, body.submission_id, body.decision, body.note)?))
}

#[derive(Deserialize)]
struct SubmitQuery {
    format: Option<DatasetFormat>,
}

async fn submit_dataset(
    State(service): State<AppState>,
    caller: Caller,
    Query(query): Query<SubmitQuery>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let text = std::str::from_utf8(&body).map_err(|_| ServiceError::BadRequest("dataset must be UTF-8 text".into()))?;
    let submission = service.submit_dataset(caller.user_id, text, query.format)?;
    Ok((StatusCode::ACCEPTED, Json(submission)))
}

fn parse_state(key: &str) -> ApiResult<u8> {
    key.parse().map_err(|_| ServiceError::BadRequest(format!("state code expected, got {key:?}")))
}

async fn states(State(service): State<AppState>, _caller: Caller) -> impl IntoResponse {
    Json(service.states())
}

async fn regions(State(service): State<AppState>, _caller: Caller, Path(key): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.regions(parse_state(&key)?)?))
}

async fn municipalities(State(service): State<AppState>, _caller: Caller, Path(key): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.municipalities(parse_state(&key)?)?))
}

async fn years(State(service): State<AppState>, _caller: Caller, Path(key): Path<String>) -> ApiResult<impl IntoResponse> {
    let scope: Scope = key.parse().map_err(|e: paramsus::dataset::ScopeSyntaxError| ServiceError::BadRequest(e.to_string()))?;
    Ok(Json(json!({ "scope": scope, "years": service.years(scope)? })))
}

async fn search(State(service): State<AppState>, caller: Caller, JsonBody(request): JsonBody<SearchRequest>) -> ApiResult<impl IntoResponse> {
    let outcome = service.execute_search(caller.user_id, &request)?;
    Ok((StatusCode::CREATED, Json(outcome)))
}

async fn fetch_report(State(service): State<AppState>, caller: Caller, Path(id): Path<ReportId>) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.report(caller.user_id, id)?))
}

#[derive(Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

fn download(bytes: Vec<u8>, format: ExportFormat, filename: String) -> Response {
    let mut response = bytes.into_response();
    let headers = response.headers_mut();
    headers.insert(CONTENT_TYPE, HeaderValue::from_static(format.content_type()));
    if let Ok(value) = HeaderValue::from_str(&format!("attachment; filename=\"{filename}.{}\"", format.extension())) {
        headers.insert(CONTENT_DISPOSITION, value);
    }
    response
}

async fn export(
    State(service): State<AppState>,
    caller: Caller,
    Path(id): Path<ReportId>,
    Query(query): Query<FormatQuery>,
) -> ApiResult<Response> {
    let format: ExportFormat = query.format.as_deref().unwrap_or("csv").parse()?;
    let bytes = service.export_report(caller.user_id, id, format)?;
    Ok(download(bytes, format, format!("report-{id}")))
}

async fn compare(
    State(service): State<AppState>,
    caller: Caller,
    Path((id, other)): Path<(ReportId, ReportId)>,
    Query(query): Query<FormatQuery>,
) -> ApiResult<Response> {
    let format: ExportFormat = query.format.as_deref().unwrap_or("json").parse()?;
    let delta = service.compare(caller.user_id, id, other)?;
    let bytes = match format {
        ExportFormat::Csv => delta_csv(&delta),
        ExportFormat::Json => delta_json(&delta),
    };
    Ok(download(bytes, format, format!("compare-{id}-{other}")))
}

async fn ledger(State(service): State<AppState>, caller: Caller) -> ApiResult<impl IntoResponse> {
    Ok(Json(service.ledger(caller.user_id)?))
}
