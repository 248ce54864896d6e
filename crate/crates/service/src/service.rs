//! The service core: everything the HTTP layer exposes, without HTTP.
//!
//! Mutable state (accounts, submissions, ledger, stored reports) sits behind
//! one mutex so writes are serialized and ledger appends are linearizable.
//! The live dataset index is an immutable [`Snapshot`] behind an `ArcSwap`;
//! a search loads the pointer once and computes against that snapshot only.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, MutexGuard};

use arc_swap::ArcSwap;
use rand::rngs::OsRng;
use rand::RngCore;
use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use paramsus::catalog::parse_catalog_text;
use paramsus::dataset::{merge_records, parse_dataset_text, DatasetFormat, DatasetIndex, Scope};
use paramsus::engine::{build_report, compare_reports, DeltaReport};
use paramsus::export::{report_csv, report_json};
use paramsus::fixtures::reference_catalog;
use paramsus::{ParameterCatalog, Section, Tier};

use crate::clock::Clock;
use crate::config::ServiceConfig;
use crate::error::{ServiceError, ServiceResult};
use crate::model::{
    effective_role, AccountStatus, AccountView, DatasetSubmission, Decision, ReportId, SearchLedgerEntry, StoredReport, SubmissionId,
    SubmissionStatus, SubmissionView, UserAccount, UserId,
};

const STATE_FILE: &str = "state.json";

/// An immutable view of the approved demographic data.
#[derive(Debug, Default)]
pub struct Snapshot {
    pub generation: u64,
    pub index: DatasetIndex,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct State {
    users: Vec<UserAccount>,
    submissions: Vec<DatasetSubmission>,
    approval_order: Vec<SubmissionId>,
    ledger: Vec<SearchLedgerEntry>,
    reports: Vec<StoredReport>,
}

impl State {
    fn user(&self, id: UserId) -> ServiceResult<&UserAccount> {
        self.users.get((id as usize).wrapping_sub(1)).ok_or_else(|| ServiceError::NotFound(format!("account {id}")))
    }

    fn user_mut(&mut self, id: UserId) -> ServiceResult<&mut UserAccount> {
        self.users.get_mut((id as usize).wrapping_sub(1)).ok_or_else(|| ServiceError::NotFound(format!("account {id}")))
    }

    fn active_user(&self, id: UserId) -> ServiceResult<&UserAccount> {
        let user = self.user(id).map_err(|_| ServiceError::Unauthenticated)?;
        match user.status {
            AccountStatus::Active => Ok(user),
            AccountStatus::Pending => Err(ServiceError::AccountPending),
            AccountStatus::Rejected => Err(ServiceError::AccountRejected),
        }
    }

    fn admin(&self, id: UserId) -> ServiceResult<&UserAccount> {
        let user = self.active_user(id)?;
        if user.is_admin {
            Ok(user)
        } else {
            Err(ServiceError::Forbidden("administrator role required".into()))
        }
    }

    fn report(&self, caller: UserId, id: ReportId) -> ServiceResult<&StoredReport> {
        let user = self.active_user(caller)?;
        let stored = self
            .reports
            .get((id as usize).wrapping_sub(1))
            .ok_or_else(|| ServiceError::NotFound(format!("report {id}")))?;
        if stored.owner_id != caller && !user.is_admin {
            return Err(ServiceError::Forbidden(format!("report {id} belongs to another account")));
        }
        Ok(stored)
    }
}

#[derive(Debug, Clone, Copy)]
struct Session {
    user_id: UserId,
    last_seen: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRequest {
    pub tier: Tier,
    pub scope: Scope,
    pub year: u16,
    /// Sections to compute; all sections when absent. Ignored for beta.
    #[serde(default)]
    pub sections: Option<Vec<Section>>,
    #[serde(default)]
    pub payment_authorized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub report: StoredReport,
    pub ledger_entry: SearchLedgerEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ExportFormat::Csv => "text/csv; charset=utf-8",
            ExportFormat::Json => "application/json",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(ServiceError::BadRequest(format!("unknown export format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateListing {
    pub code: u8,
    pub abbrev: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionListing {
    pub code: u32,
    pub name: String,
    pub members: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MunicipalityListing {
    pub code: u32,
    pub name: String,
    pub region_code: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Whoami {
    pub account: AccountView,
    pub role: Tier,
}

fn hash_password(password: &str) -> ServiceResult<String> {
    let salt = SaltString::generate(&mut OsRng);
    Argon2::default()
        .hash_password(password.as_bytes(), &salt)
        .map(|h| h.to_string())
        .map_err(|e| ServiceError::Storage(format!("password hashing failed: {e}")))
}

fn verify_password(password: &str, hash: &str) -> bool {
    PasswordHash::new(hash)
        .map(|parsed| Argon2::default().verify_password(password.as_bytes(), &parsed).is_ok())
        .unwrap_or(false)
}

fn new_token() -> String {
    let mut bytes = [0u8; 32];
    OsRng.fill_bytes(&mut bytes);
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn check_login(login: &str, password: &str) -> ServiceResult<()> {
    if login.is_empty() || login.len() > 64 || login.chars().any(char::is_whitespace) {
        return Err(ServiceError::BadRequest("login must be 1-64 characters without whitespace".into()));
    }
    if password.is_empty() {
        return Err(ServiceError::BadRequest("password must not be empty".into()));
    }
    Ok(())
}

pub struct Service {
    config: ServiceConfig,
    clock: Arc<dyn Clock>,
    catalog: ArcSwap<ParameterCatalog>,
    snapshot: ArcSwap<Snapshot>,
    state: Mutex<State>,
    sessions: Mutex<HashMap<String, Session>>,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Service {
    /// Opens the service: loads the catalog, restores persisted state when a
    /// storage directory is configured, and seeds the bootstrap admin.
    pub fn open(config: ServiceConfig, clock: Arc<dyn Clock>) -> ServiceResult<Self> {
        let catalog = match &config.catalog {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
                parse_catalog_text(&text)?
            }
            None => reference_catalog(),
        };
        let state = match &config.storage {
            Some(dir) => load_state(dir)?,
            None => State::default(),
        };
        let service = Service {
            clock,
            catalog: ArcSwap::from_pointee(catalog),
            snapshot: ArcSwap::from_pointee(Snapshot::default()),
            state: Mutex::new(State::default()),
            sessions: Mutex::new(HashMap::new()),
            config,
        };
        service.restore(state)?;
        Ok(service)
    }

    fn restore(&self, state: State) -> ServiceResult<()> {
        let mut records = Vec::new();
        for id in &state.approval_order {
            let submission = state
                .submissions
                .iter()
                .find(|s| s.id == *id)
                .ok_or_else(|| ServiceError::Storage(format!("approved submission {id} missing from state")))?;
            let parsed = parse_dataset_text(&submission.raw_file, Some(submission.format))
                .map_err(|e| ServiceError::Storage(format!("stored submission {id} no longer parses: {e}")))?;
            records = merge_records(&records, &parsed);
        }
        let index = DatasetIndex::build(&records)?;
        self.snapshot.store(Arc::new(Snapshot { generation: state.approval_order.len() as u64, index }));

        let mut guard = self.lock_state();
        *guard = state;
        if !guard.users.iter().any(|u| u.login == self.config.admin_login) {
            let id = guard.users.len() as UserId + 1;
            guard.users.push(UserAccount {
                id,
                login: self.config.admin_login.clone(),
                credential_hash: hash_password(&self.config.admin_password)?,
                status: AccountStatus::Active,
                is_admin: true,
                created_at: self.clock.now(),
                reviewed_by: None,
                review_note: Some("bootstrap administrator".into()),
            });
            self.persist(&guard)?;
        }
        Ok(())
    }

    fn lock_state(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    fn lock_sessions(&self) -> MutexGuard<'_, HashMap<String, Session>> {
        self.sessions.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    fn persist(&self, state: &State) -> ServiceResult<()> {
        let Some(dir) = &self.config.storage else { return Ok(()) };
        save_state(dir, state)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn catalog(&self) -> Arc<ParameterCatalog> {
        self.catalog.load_full()
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.load_full()
    }

    pub fn register_user(&self, login: &str, password: &str) -> ServiceResult<AccountView> {
        check_login(login, password)?;
        let credential_hash = hash_password(password)?;
        let mut state = self.lock_state();
        if state.users.iter().any(|u| u.login == login) {
            return Err(ServiceError::DuplicateLogin(login.to_string()));
        }
        let account = UserAccount {
            id: state.users.len() as UserId + 1,
            login: login.to_string(),
            credential_hash,
            status: AccountStatus::Pending,
            is_admin: false,
            created_at: self.clock.now(),
            reviewed_by: None,
            review_note: None,
        };
        let view = AccountView::from(&account);
        state.users.push(account);
        if let Err(e) = self.persist(&state) {
            state.users.pop();
            return Err(e);
        }
        Ok(view)
    }

    /// Creates an already-active administrator. Only admins may do this.
    pub fn create_admin(&self, caller: UserId, login: &str, password: &str) -> ServiceResult<AccountView> {
        check_login(login, password)?;
        let credential_hash = hash_password(password)?;
        let mut state = self.lock_state();
        state.admin(caller)?;
        if state.users.iter().any(|u| u.login == login) {
            return Err(ServiceError::DuplicateLogin(login.to_string()));
        }
        let account = UserAccount {
            id: state.users.len() as UserId + 1,
            login: login.to_string(),
            credential_hash,
            status: AccountStatus::Active,
            is_admin: true,
            created_at: self.clock.now(),
            reviewed_by: Some(caller),
            review_note: None,
        };
        let view = AccountView::from(&account);
        state.users.push(account);
        if let Err(e) = self.persist(&state) {
            state.users.pop();
            return Err(e);
        }
        Ok(view)
    }

    /// Verifies credentials and opens a session. Only active accounts may
    /// log in.
    pub fn login(&self, login: &str, password: &str) -> ServiceResult<String> {
        let (user_id, hash, status) = {
            let state = self.lock_state();
            let user = state.users.iter().find(|u| u.login == login).ok_or(ServiceError::InvalidCredentials)?;
            (user.id, user.credential_hash.clone(), user.status)
        };
        if !verify_password(password, &hash) {
            return Err(ServiceError::InvalidCredentials);
        }
        match status {
            AccountStatus::Active => {}
            AccountStatus::Pending => return Err(ServiceError::AccountPending),
            AccountStatus::Rejected => return Err(ServiceError::AccountRejected),
        }
        let token = new_token();
        self.lock_sessions().insert(token.clone(), Session { user_id, last_seen: self.clock.now() });
        Ok(token)
    }

    pub fn logout(&self, token: &str) {
        self.lock_sessions().remove(token);
    }

    /// Resolves a session token, sliding its inactivity deadline forward.
    pub fn authenticate(&self, token: &str) -> ServiceResult<UserId> {
        let now = self.clock.now();
        let user_id = {
            let mut sessions = self.lock_sessions();
            let session = sessions.get_mut(token).ok_or(ServiceError::Unauthenticated)?;
            if now - session.last_seen > self.config.session_timeout {
                sessions.remove(token);
                return Err(ServiceError::SessionExpired);
            }
            session.last_seen = now;
            session.user_id
        };
        self.lock_state().active_user(user_id)?;
        Ok(user_id)
    }

    pub fn whoami(&self, caller: UserId) -> ServiceResult<Whoami> {
        let state = self.lock_state();
        let user = state.active_user(caller)?;
        Ok(Whoami { account: user.into(), role: effective_role(caller, &state.ledger, self.clock.now()) })
    }

    pub fn effective_role(&self, user_id: UserId) -> Tier {
        effective_role(user_id, &self.lock_state().ledger, self.clock.now())
    }

    pub fn registrations(&self, caller: UserId, status: Option<AccountStatus>) -> ServiceResult<Vec<AccountView>> {
        let state = self.lock_state();
        state.admin(caller)?;
        Ok(state.users.iter().filter(|u| status.is_none_or(|s| u.status == s)).map(AccountView::from).collect())
    }

    pub fn review_registration(
        &self,
        caller: UserId,
        account: UserId,
        decision: Decision,
        note: Option<String>,
    ) -> ServiceResult<AccountView> {
        let mut state = self.lock_state();
        state.admin(caller)?;
        let previous = state.user(account)?.clone();
        if previous.status != AccountStatus::Pending {
            return Err(ServiceError::InvalidTransition(format!(
                "account {account} is {:?}, only pending registrations can be reviewed",
                previous.status
            )));
        }
        let user = state.user_mut(account)?;
        user.status = match decision {
            Decision::Approve => AccountStatus::Active,
            Decision::Reject => AccountStatus::Rejected,
        };
        user.reviewed_by = Some(caller);
        user.review_note = note;
        let view = AccountView::from(&*user);
        if let Err(e) = self.persist(&state) {
            *state.user_mut(account)? = previous;
            return Err(e);
        }
        Ok(view)
    }

    /// Parses and validates a dataset, then queues it for review. Only
    /// premium users and admins may submit.
    pub fn submit_dataset(&self, caller: UserId, raw_file: &str, format: Option<DatasetFormat>) -> ServiceResult<SubmissionView> {
        {
            let state = self.lock_state();
            let user = state.active_user(caller)?;
            if !user.is_admin && effective_role(caller, &state.ledger, self.clock.now()) != Tier::Premium {
                return Err(ServiceError::Forbidden("dataset submission requires a premium account".into()));
            }
        }
        let format = format.unwrap_or_else(|| paramsus::dataset::detect_format(raw_file));
        let records = parse_dataset_text(raw_file, Some(format)).map_err(|e| ServiceError::DatasetInvalid(e.findings().to_vec()))?;
        let mut state = self.lock_state();
        let submission = DatasetSubmission {
            id: state.submissions.len() as SubmissionId + 1,
            submitter_id: caller,
            submitted_at: self.clock.now(),
            format,
            raw_file: raw_file.to_string(),
            record_count: records.len(),
            status: SubmissionStatus::Pending,
            reviewer_id: None,
            review_note: None,
            reviewed_at: None,
        };
        let view = SubmissionView::from(&submission);
        state.submissions.push(submission);
        if let Err(e) = self.persist(&state) {
            state.submissions.pop();
            return Err(e);
        }
        Ok(view)
    }

    pub fn submissions(&self, caller: UserId, status: Option<SubmissionStatus>) -> ServiceResult<Vec<SubmissionView>> {
        let state = self.lock_state();
        let user = state.active_user(caller)?;
        Ok(state
            .submissions
            .iter()
            .filter(|s| user.is_admin || s.submitter_id == caller)
            .filter(|s| status.is_none_or(|st| s.status == st))
            .map(SubmissionView::from)
            .collect())
    }

    /// Every submission, for administrators.
    pub fn review_queue(&self, caller: UserId, status: Option<SubmissionStatus>) -> ServiceResult<Vec<SubmissionView>> {
        self.lock_state().admin(caller)?;
        self.submissions(caller, status)
    }

    /// Approves or rejects a pending submission. Approval merges its records
    /// over the live data (newest approval wins per municipality and year)
    /// and swaps in a new snapshot.
    pub fn review_dataset(
        &self,
        caller: UserId,
        submission_id: SubmissionId,
        decision: Decision,
        note: Option<String>,
    ) -> ServiceResult<SubmissionView> {
        let mut state = self.lock_state();
        state.admin(caller)?;
        let idx = (submission_id as usize).wrapping_sub(1);
        let submission = state
            .submissions
            .get(idx)
            .ok_or_else(|| ServiceError::NotFound(format!("submission {submission_id}")))?
            .clone();
        if submission.status != SubmissionStatus::Pending {
            return Err(ServiceError::InvalidTransition(format!(
                "submission {submission_id} is {:?}, only pending submissions can be reviewed",
                submission.status
            )));
        }
        let next_snapshot = match decision {
            Decision::Approve => {
                let incoming = parse_dataset_text(&submission.raw_file, Some(submission.format))
                    .map_err(|e| ServiceError::DatasetInvalid(e.findings().to_vec()))?;
                let current = self.snapshot.load();
                let merged = merge_records(&current.index.records(), &incoming);
                let index = DatasetIndex::build(&merged)?;
                Some(Snapshot { generation: current.generation + 1, index })
            }
            Decision::Reject => None,
        };
        {
            let entry = &mut state.submissions[idx];
            entry.status = match decision {
                Decision::Approve => SubmissionStatus::Approved,
                Decision::Reject => SubmissionStatus::Rejected,
            };
            entry.reviewer_id = Some(caller);
            entry.review_note = note;
            entry.reviewed_at = Some(self.clock.now());
        }
        if next_snapshot.is_some() {
            state.approval_order.push(submission_id);
        }
        if let Err(e) = self.persist(&state) {
            state.submissions[idx] = submission;
            if next_snapshot.is_some() {
                state.approval_order.pop();
            }
            return Err(e);
        }
        if let Some(snapshot) = next_snapshot {
            self.snapshot.store(Arc::new(snapshot));
        }
        Ok(SubmissionView::from(&state.submissions[idx]))
    }

    /// Runs a search against the current snapshot.
    pub fn execute_search(&self, caller: UserId, request: &SearchRequest) -> ServiceResult<SearchOutcome> {
        let snapshot = self.snapshot.load_full();
        self.execute_search_on(&snapshot, caller, request)
    }

    /// Runs a search against a specific snapshot. The report and its ledger
    /// entry are recorded together or not at all.
    pub fn execute_search_on(&self, snapshot: &Snapshot, caller: UserId, request: &SearchRequest) -> ServiceResult<SearchOutcome> {
        self.lock_state().active_user(caller)?;
        if request.tier == Tier::Premium && !request.payment_authorized {
            return Err(ServiceError::PaymentRequired);
        }
        let demo = snapshot.index.resolve_scope(request.scope, request.year)?;
        let catalog = self.catalog.load_full();
        let sections: BTreeSet<Section> = match &request.sections {
            Some(list) => list.iter().copied().collect(),
            None => Section::ALL.into_iter().collect(),
        };
        let now = self.clock.now();
        let report = build_report(&catalog, &demo, &sections, request.tier, now)?;

        let mut state = self.lock_state();
        state.active_user(caller)?;
        let report_id = state.reports.len() as ReportId + 1;
        let ledger_entry = SearchLedgerEntry {
            id: state.ledger.len() as u64 + 1,
            user_id: caller,
            timestamp: now,
            tier: request.tier,
            scope: request.scope,
            year: request.year,
            catalog_version: catalog.version.clone(),
            price_cents: match request.tier {
                Tier::Beta => 0,
                Tier::Premium => self.config.tariff_cents,
            },
            report_id,
        };
        let stored = StoredReport { id: report_id, owner_id: caller, report };
        state.reports.push(stored.clone());
        state.ledger.push(ledger_entry.clone());
        if let Err(e) = self.persist(&state) {
            state.reports.pop();
            state.ledger.pop();
            return Err(e);
        }
        Ok(SearchOutcome { report: stored, ledger_entry })
    }

    pub fn report(&self, caller: UserId, id: ReportId) -> ServiceResult<StoredReport> {
        self.lock_state().report(caller, id).cloned()
    }

    pub fn export_report(&self, caller: UserId, id: ReportId, format: ExportFormat) -> ServiceResult<Vec<u8>> {
        let state = self.lock_state();
        let stored = state.report(caller, id)?;
        Ok(match format {
            ExportFormat::Csv => report_csv(&stored.report),
            ExportFormat::Json => report_json(&stored.report),
        })
    }

    pub fn compare(&self, caller: UserId, a: ReportId, b: ReportId) -> ServiceResult<DeltaReport> {
        let state = self.lock_state();
        let ra = state.report(caller, a)?;
        let rb = state.report(caller, b)?;
        Ok(compare_reports(&ra.report, &rb.report)?)
    }

    /// The caller's ledger entries; administrators see every entry.
    pub fn ledger(&self, caller: UserId) -> ServiceResult<Vec<SearchLedgerEntry>> {
        let state = self.lock_state();
        let user = state.active_user(caller)?;
        Ok(state.ledger.iter().filter(|e| user.is_admin || e.user_id == caller).cloned().collect())
    }

    pub fn total_charged_cents(&self) -> u64 {
        self.lock_state().ledger.iter().map(|e| e.price_cents).sum()
    }

    pub fn states(&self) -> Vec<StateListing> {
        self.snapshot
            .load()
            .index
            .states()
            .map(|s| StateListing { code: s.code, abbrev: s.abbrev.clone(), name: s.name.clone() })
            .collect()
    }

    pub fn regions(&self, state: u8) -> ServiceResult<Vec<RegionListing>> {
        let snapshot = self.snapshot.load();
        Ok(snapshot
            .index
            .regions_of(state)?
            .into_iter()
            .map(|r| RegionListing { code: r.code, name: r.name.clone(), members: r.members.iter().copied().collect() })
            .collect())
    }

    pub fn municipalities(&self, state: u8) -> ServiceResult<Vec<MunicipalityListing>> {
        let snapshot = self.snapshot.load();
        Ok(snapshot
            .index
            .municipalities_of(state)?
            .into_iter()
            .map(|m| MunicipalityListing { code: m.code, name: m.name.clone(), region_code: m.region_code })
            .collect())
    }

    pub fn years(&self, scope: Scope) -> ServiceResult<Vec<u16>> {
        Ok(self.snapshot.load().index.year_availability(scope)?)
    }
}

fn state_path(dir: &Path) -> PathBuf {
    dir.join(STATE_FILE)
}

fn load_state(dir: &Path) -> ServiceResult<State> {
    let path = state_path(dir);
    match fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(State::default()),
        Err(e) => Err(ServiceError::Storage(format!("{}: {e}", path.display()))),
    }
}

fn save_state(dir: &Path, state: &State) -> ServiceResult<()> {
    let storage_err = |e: std::io::Error| ServiceError::Storage(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(storage_err)?;
    let tmp = dir.join(format!("{STATE_FILE}.tmp"));
    let bytes = serde_json::to_vec(state).map_err(|e| ServiceError::Storage(e.to_string()))?;
    fs::write(&tmp, bytes).map_err(storage_err)?;
    fs::rename(&tmp, state_path(dir)).map_err(storage_err)
}
