//! Pay-per-search planning service: account approval, dataset approval,
//! search billing and report export over HTTP.

pub mod clock;
pub mod config;
pub mod error;
pub mod http;
pub mod model;
pub mod service;

pub use clock::{Clock, ManualClock, SystemClock};
pub use config::ServiceConfig;
pub use error::{ServiceError, ServiceResult};
pub use model::{effective_role, AccountStatus, Decision, SearchLedgerEntry, SubmissionStatus, UserId};
pub use service::{ExportFormat, SearchOutcome, SearchRequest, Service, Snapshot};
