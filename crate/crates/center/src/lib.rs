//! Control center for the patrol robot.
//!
//! Agents connect over TCP with the framed protocol from `patrol_core`;
//! every frame is stored in a per-session log before it takes effect.
//! Operators use the HTTP API in [`api`].

pub mod alarm;
pub mod api;
pub mod config;
pub mod hub;
pub mod ingest;
pub mod storage;

use std::sync::Arc;

use thiserror::Error;
use tokio::net::TcpListener;

pub use alarm::{AlarmState, AlarmStatus};
pub use config::CenterConfig;
pub use hub::{Center, CommandRequest, SessionInfo, SessionStatus};
pub use storage::Storage;

#[derive(Debug, Error)]
pub enum CenterError {
    #[error("storage {path}: {source}")]
    Storage { path: String, source: std::io::Error },
    #[error("map: {0}")]
    Map(#[from] patrol_core::world::WorldError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn build(cfg: CenterConfig) -> Result<Arc<Center>, CenterError> {
    let storage_err = |source| CenterError::Storage {
        path: cfg.storage_dir.display().to_string(),
        source,
    };
    let storage = Storage::open(&cfg.storage_dir).map_err(storage_err)?;
    let map = cfg.map.as_ref().map(patrol_core::world::WorldMap::load).transpose()?;
    let center = Center::new(cfg.clone(), storage, map).map_err(storage_err)?;
    Ok(Arc::new(center))
}

/// Runs both listeners until one of them fails.
pub async fn serve(cfg: CenterConfig) -> Result<(), CenterError> {
    let center = build(cfg.clone())?;
    let bind = |addr: std::net::SocketAddr| async move {
        TcpListener::bind(addr).await.map_err(|source| CenterError::Bind {
            addr: addr.to_string(),
            source,
        })
    };
    let agents = bind(cfg.agent_addr).await?;
    let http = bind(cfg.http_addr).await?;
    tracing::info!("agents on {}, operators on http://{}", cfg.agent_addr, cfg.http_addr);
    let app = api::router(Arc::clone(&center));
    tokio::select! {
        r = ingest::serve_agents(center, agents) => r?,
        r = axum::serve(http, app) => r?,
    }
    Ok(())
}
