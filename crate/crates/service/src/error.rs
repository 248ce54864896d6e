use paramsus::catalog::CatalogError;
use paramsus::dataset::{DatasetFinding, IndexError, ScopeError};
use paramsus::EngineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("login or password is wrong")]
    InvalidCredentials,
    #[error("account is awaiting administrator approval")]
    AccountPending,
    #[error("account registration was rejected")]
    AccountRejected,
    #[error("missing or unknown session token")]
    Unauthenticated,
    #[error("session expired")]
    SessionExpired,
    #[error("{0}")]
    Forbidden(String),
    #[error("login {0:?} is already taken")]
    DuplicateLogin(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0}")]
    InvalidTransition(String),
    #[error("dataset rejected: {} problem(s)", .0.len())]
    DatasetInvalid(Vec<DatasetFinding>),
    #[error("dataset conflicts with the live data: {0}")]
    DatasetConflict(#[from] IndexError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error("premium searches require payment authorization")]
    PaymentRequired,
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl ServiceError {
    /// Stable machine-readable code for problem documents.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::InvalidCredentials => "invalid_credentials",
            ServiceError::AccountPending => "account_pending",
            ServiceError::AccountRejected => "account_rejected",
            ServiceError::Unauthenticated => "unauthenticated",
            ServiceError::SessionExpired => "session_expired",
            ServiceError::Forbidden(_) => "forbidden",
            ServiceError::DuplicateLogin(_) => "duplicate_login",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::InvalidTransition(_) => "invalid_state_transition",
            ServiceError::DatasetInvalid(_) => "dataset_invalid",
            ServiceError::DatasetConflict(_) => "dataset_conflict",
            ServiceError::Scope(ScopeError::YearUnavailable { .. }) => "year_unavailable",
            ServiceError::Scope(ScopeError::UnknownScope(_)) => "unknown_scope",
            ServiceError::Scope(ScopeError::UnknownState(_)) => "unknown_state",
            ServiceError::PaymentRequired => "payment_required",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Engine(EngineError::CatalogVersionMismatch { .. }) => "catalog_version_mismatch",
            ServiceError::Engine(_) => "engine_error",
            ServiceError::Catalog(_) => "catalog_invalid",
            ServiceError::Storage(_) => "storage_error",
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            ServiceError::InvalidCredentials | ServiceError::Unauthenticated | ServiceError::SessionExpired => 401,
            ServiceError::PaymentRequired => 402,
            ServiceError::AccountPending | ServiceError::AccountRejected | ServiceError::Forbidden(_) => 403,
            ServiceError::NotFound(_) | ServiceError::Scope(ScopeError::UnknownScope(_) | ScopeError::UnknownState(_)) => 404,
            ServiceError::DuplicateLogin(_)
            | ServiceError::InvalidTransition(_)
            | ServiceError::DatasetConflict(_)
            | ServiceError::Engine(EngineError::CatalogVersionMismatch { .. }) => 409,
            ServiceError::DatasetInvalid(_) | ServiceError::Scope(ScopeError::YearUnavailable { .. }) => 422,
            ServiceError::BadRequest(_) => 400,
            ServiceError::Engine(_) | ServiceError::Catalog(_) | ServiceError::Storage(_) => 500,
        }
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;
