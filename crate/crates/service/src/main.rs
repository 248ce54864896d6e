use std::process::ExitCode;
use std::sync::Arc;

use paramsus_service::{http, Service, ServiceConfig, SystemClock};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"))).init();

    let config = match ServiceConfig::from_env() {
        Ok(c) => c,
        Err(e) => {
            tracing::error!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let listen = config.listen;
    let service = match Service::open(config, Arc::new(SystemClock)) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            tracing::error!("startup failed: {e}");
            return ExitCode::from(3);
        }
    };
    tracing::info!(catalog = %service.catalog().version, "catalog loaded");

    let listener = match tokio::net::TcpListener::bind(listen).await {
        Ok(l) => l,
        Err(e) => {
            tracing::error!("cannot bind {listen}: {e}");
            return ExitCode::from(3);
        }
    };
    tracing::info!("listening on {listen}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, http::router(service)).with_graceful_shutdown(shutdown).await {
        tracing::error!("server error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
