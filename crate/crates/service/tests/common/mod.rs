#![allow(dead_code)]

use std::sync::Arc;

use chrono::{DateTime, TimeZone, Utc};
use paramsus::fixtures::CASE_DEMOGRAPHICS_CSV;
use paramsus::{Scope, Section, Tier};
use paramsus_service::model::UserId;
use paramsus_service::{Decision, ManualClock, SearchRequest, Service, ServiceConfig};

pub const ADMIN: &str = "root";
pub const ADMIN_PASSWORD: &str = "root-secret";

pub fn start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 5, 1, 9, 0, 0).unwrap()
}

pub struct Fixture {
    pub service: Arc<Service>,
    pub clock: Arc<ManualClock>,
    pub admin: UserId,
}

pub fn config() -> ServiceConfig {
    let mut config = ServiceConfig::new(ADMIN, ADMIN_PASSWORD);
    config.tariff_cents = 1_990;
    config
}

pub fn open(config: ServiceConfig) -> Fixture {
    let clock = Arc::new(ManualClock::new(start()));
    let service = Arc::new(Service::open(config, clock.clone()).unwrap());
    let token = service.login(ADMIN, ADMIN_PASSWORD).unwrap();
    let admin = service.authenticate(&token).unwrap();
    Fixture { service, clock, admin }
}

/// A service whose live snapshot holds the bundled case demographics.
pub fn seeded() -> Fixture {
    let fixture = open(config());
    fixture.approve_dataset(CASE_DEMOGRAPHICS_CSV);
    fixture
}

impl Fixture {
    pub fn approve_dataset(&self, text: &str) {
        let submission = self.service.submit_dataset(self.admin, text, None).unwrap();
        self.service.review_dataset(self.admin, submission.id, Decision::Approve, None).unwrap();
    }

    /// Registers and approves an ordinary account, returning its id.
    pub fn active_user(&self, login: &str) -> UserId {
        let account = self.service.register_user(login, "pw").unwrap();
        self.service.review_registration(self.admin, account.id, Decision::Approve, None).unwrap();
        account.id
    }
}

pub fn premium(scope: Scope, year: u16, sections: &[Section]) -> SearchRequest {
    SearchRequest { tier: Tier::Premium, scope, year, sections: Some(sections.to_vec()), payment_authorized: true }
}

pub fn beta(scope: Scope, year: u16) -> SearchRequest {
    SearchRequest { tier: Tier::Beta, scope, year, sections: None, payment_authorized: false }
}

pub const ANANINDEUA: u32 = 150080;
pub const AGUA_AZUL: u32 = 150013;
pub const JACUNDA: u32 = 150380;
