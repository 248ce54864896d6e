//! Environment-driven configuration.

use std::env;
use std::net::SocketAddr;
use std::path::PathBuf;

use chrono::Duration;

use crate::error::{ServiceError, ServiceResult};

pub const ENV_LISTEN: &str = "PARAMSUS_LISTEN";
pub const ENV_TARIFF_CENTS: &str = "PARAMSUS_TARIFF_CENTS";
pub const ENV_SESSION_TIMEOUT_SECS: &str = "PARAMSUS_SESSION_TIMEOUT_SECS";
pub const ENV_ADMIN_LOGIN: &str = "PARAMSUS_ADMIN_LOGIN";
pub const ENV_ADMIN_PASSWORD: &str = "PARAMSUS_ADMIN_PASSWORD";
pub const ENV_STORAGE: &str = "PARAMSUS_STORAGE";
pub const ENV_CATALOG: &str = "PARAMSUS_CATALOG";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    /// Price charged per premium search, in cents. Must be positive.
    pub tariff_cents: u64,
    /// Sessions expire after this much inactivity.
    pub session_timeout: Duration,
    pub admin_login: String,
    pub admin_password: String,
    /// Directory for persisted state; `None` keeps everything in memory.
    pub storage: Option<PathBuf>,
    /// Catalog file; `None` uses the bundled reference catalog.
    pub catalog: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(admin_login: impl Into<String>, admin_password: impl Into<String>) -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            tariff_cents: 2_500,
            session_timeout: Duration::minutes(30),
            admin_login: admin_login.into(),
            admin_password: admin_password.into(),
            storage: None,
            catalog: None,
        }
    }

    pub fn from_env() -> ServiceResult<Self> {
        Self::from_lookup(|key| env::var(key).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> ServiceResult<Self> {
        let bad = |key: &str, value: &str| ServiceError::BadRequest(format!("invalid {key}={value:?}"));
        let admin_password = lookup(ENV_ADMIN_PASSWORD)
            .filter(|p| !p.is_empty())
            .ok_or_else(|| ServiceError::BadRequest(format!("{ENV_ADMIN_PASSWORD} must be set to seed the bootstrap administrator")))?;
        let mut config = ServiceConfig::new(lookup(ENV_ADMIN_LOGIN).unwrap_or_else(|| "admin".into()), admin_password);
        if let Some(v) = lookup(ENV_LISTEN) {
            config.listen = v.parse().map_err(|_| bad(ENV_LISTEN, &v))?;
        }
        if let Some(v) = lookup(ENV_TARIFF_CENTS) {
            config.tariff_cents = v.parse().ok().filter(|&c: &u64| c > 0).ok_or_else(|| bad(ENV_TARIFF_CENTS, &v))?;
        }
        if let Some(v) = lookup(ENV_SESSION_TIMEOUT_SECS) {
            let secs: i64 = v.parse().ok().filter(|&s: &i64| s > 0).ok_or_else(|| bad(ENV_SESSION_TIMEOUT_SECS, &v))?;
            config.session_timeout = Duration::seconds(secs);
        }
        config.storage = lookup(ENV_STORAGE).filter(|s| !s.is_empty()).map(PathBuf::from);
        config.catalog = lookup(ENV_CATALOG).filter(|s| !s.is_empty()).map(PathBuf::from);
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn lookup(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn reads_environment() {
        let config = ServiceConfig::from_lookup(lookup(&[
            (ENV_ADMIN_PASSWORD, "s3cret"),
            (ENV_LISTEN, "0.0.0.0:9000"),
            (ENV_TARIFF_CENTS, "1500"),
            (ENV_SESSION_TIMEOUT_SECS, "60"),
            (ENV_STORAGE, "/tmp/x"),
        ]))
        .unwrap();
        assert_eq!(config.listen.port(), 9000);
        assert_eq!(config.tariff_cents, 1500);
        assert_eq!(config.session_timeout, Duration::seconds(60));
        assert_eq!(config.admin_login, "admin");
        assert_eq!(config.storage, Some(PathBuf::from("/tmp/x")));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ServiceConfig::from_lookup(lookup(&[])).is_err());
        assert!(ServiceConfig::from_lookup(lookup(&[(ENV_ADMIN_PASSWORD, "x"), (ENV_TARIFF_CENTS, "0")])).is_err());
        assert!(ServiceConfig::from_lookup(lookup(&[(ENV_ADMIN_PASSWORD, "x"), (ENV_SESSION_TIMEOUT_SECS, "-5")])).is_err());
        assert!(ServiceConfig::from_lookup(lookup(&[(ENV_ADMIN_PASSWORD, "x"), (ENV_LISTEN, "nope")])).is_err());
    }
}
