// SPDX-License-Identifier: Apache-2.0

//! HTTP service for the circuit exercise platform: server-side simulation of
//! circuits too large for the browser, exercise delivery with answers
//! redacted, grading, and an append-only attempt log for instructors.

pub mod api;
pub mod auth;
pub mod catalog;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

pub use api::{router, AppState, Limits};
pub use auth::{Principal, Role, TokenTable};
pub use catalog::Catalog;
pub use store::{AttemptStore, MemoryStore, SqliteStore};

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub exercise_dir: PathBuf,
    /// SQLite file; `None` keeps attempts in memory.
    pub storage: Option<PathBuf>,
    pub limits: Limits,
    pub tokens: TokenTable,
    /// Poll interval for exercise changes; `None` disables reloading.
    pub reload_every: Option<Duration>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("exercise directory {0}: {1}")]
    Exercises(PathBuf, std::io::Error),
    #[error(transparent)]
    Store(#[from] store::StoreError),
    #[error("cannot listen on {0}: {1}")]
    Bind(SocketAddr, std::io::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Runs the service until interrupted.
pub async fn serve(config: ServeConfig) -> Result<(), ServeError> {
    let (catalog, report) =
        Catalog::load_dir(&config.exercise_dir).map_err(|e| ServeError::Exercises(config.exercise_dir.clone(), e))?;
    tracing::info!(
        loaded = report.loaded.len(),
        failed = report.failed.len(),
        "exercises loaded"
    );
    let catalog = Arc::new(catalog);
    let store: Arc<dyn AttemptStore> = match &config.storage {
        Some(path) => Arc::new(SqliteStore::open(path)?),
        None => Arc::new(MemoryStore::new()),
    };
    if config.tokens.is_empty() {
        tracing::warn!("no tokens configured; every request will be rejected");
    }
    if let Some(every) = config.reload_every {
        catalog::spawn_reloader(Arc::clone(&catalog), every);
    }
    let app = router(AppState {
        catalog,
        store,
        tokens: Arc::new(config.tokens),
        limits: config.limits,
    });
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|e| ServeError::Bind(config.addr, e))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
