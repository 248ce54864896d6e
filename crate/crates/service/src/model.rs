//! Accounts, the search ledger, dataset submissions and stored reports.

use chrono::{DateTime, Duration, Utc};
use paramsus::dataset::{DatasetFormat, Scope};
use paramsus::{Report, Tier};
use serde::{Deserialize, Serialize};

pub type UserId = u64;
pub type ReportId = u64;
pub type SubmissionId = u64;

/// Window during which one premium search keeps a user premium.
pub const PREMIUM_WINDOW_DAYS: i64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AccountStatus {
    Pending,
    Active,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub id: UserId,
    pub login: String,
    pub credential_hash: String,
    pub status: AccountStatus,
    pub is_admin: bool,
    pub created_at: DateTime<Utc>,
    pub reviewed_by: Option<UserId>,
    pub review_note: Option<String>,
}

/// What clients see of an account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountView {
    pub id: UserId,
    pub login: String,
    pub status: AccountStatus,
    pub is_admin: bool,
    pub created_at: DateTime<Utc>,
    pub reviewed_by: Option<UserId>,
    pub review_note: Option<String>,
}

impl From<&UserAccount> for AccountView {
    fn from(a: &UserAccount) -> Self {
        AccountView {
            id: a.id,
            login: a.login.clone(),
            status: a.status,
            is_admin: a.is_admin,
            created_at: a.created_at,
            reviewed_by: a.reviewed_by,
            review_note: a.review_note.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Approve,
    Reject,
}

/// One billed (or free) search. Entries are only ever appended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLedgerEntry {
    pub id: u64,
    pub user_id: UserId,
    pub timestamp: DateTime<Utc>,
    pub tier: Tier,
    pub scope: Scope,
    pub year: u16,
    pub catalog_version: String,
    pub price_cents: u64,
    pub report_id: ReportId,
}

/// PREMIUM iff the user has a premium search in `(now - 30 days, now]`.
pub fn effective_role(user_id: UserId, ledger: &[SearchLedgerEntry], now: DateTime<Utc>) -> Tier {
    let window_start = now - Duration::days(PREMIUM_WINDOW_DAYS);
    let premium = ledger
        .iter()
        .any(|e| e.user_id == user_id && e.tier == Tier::Premium && e.timestamp > window_start && e.timestamp <= now);
    if premium {
        Tier::Premium
    } else {
        Tier::Beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubmissionStatus {
    Pending,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSubmission {
    pub id: SubmissionId,
    pub submitter_id: UserId,
    pub submitted_at: DateTime<Utc>,
    pub format: DatasetFormat,
    pub raw_file: String,
    pub record_count: usize,
    pub status: SubmissionStatus,
    pub reviewer_id: Option<UserId>,
    pub review_note: Option<String>,
    pub reviewed_at: Option<DateTime<Utc>>,
}

/// Submission metadata without the file body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionView {
    pub id: SubmissionId,
    pub submitter_id: UserId,
    pub submitted_at: DateTime<Utc>,
    pub format: DatasetFormat,
    pub record_count: usize,
    pub status: SubmissionStatus,
    pub reviewer_id: Option<UserId>,
    pub review_note: Option<String>,
    pub reviewed_at: Option<DateTime<Utc>>,
}

impl From<&DatasetSubmission> for SubmissionView {
    fn from(s: &DatasetSubmission) -> Self {
        SubmissionView {
            id: s.id,
            submitter_id: s.submitter_id,
            submitted_at: s.submitted_at,
            format: s.format,
            record_count: s.record_count,
            status: s.status,
            reviewer_id: s.reviewer_id,
            review_note: s.review_note.clone(),
            reviewed_at: s.reviewed_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredReport {
    pub id: ReportId,
    pub owner_id: UserId,
    pub report: Report,
}
