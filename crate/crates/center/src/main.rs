use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use patrol_center::CenterConfig;

/// Patrol control center: agent ingest on one port, operator API on another.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Address for robot agents.
    #[arg(long, env = "PATROL_AGENT_ADDR", default_value = "0.0.0.0:7710")]
    agent_addr: SocketAddr,
    /// Address for the operator HTTP API.
    #[arg(long, env = "PATROL_HTTP_ADDR", default_value = "0.0.0.0:7780")]
    http_addr: SocketAddr,
    /// Directory for session logs and the event log.
    #[arg(long, env = "PATROL_STORAGE", default_value = "center-data")]
    storage: PathBuf,
    /// Map file served at /api/map.
    #[arg(long, env = "PATROL_MAP")]
    map: Option<PathBuf>,
    /// Queue commands while no agent is connected instead of rejecting them.
    #[arg(long, env = "PATROL_QUEUE_OFFLINE")]
    queue_offline: bool,
    /// Keep at most this many stored sessions.
    #[arg(long, env = "PATROL_RETENTION")]
    retention: Option<usize>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let a = Args::parse();
    let cfg = CenterConfig {
        agent_addr: a.agent_addr,
        http_addr: a.http_addr,
        storage_dir: a.storage,
        map: a.map,
        queue_when_offline: a.queue_offline,
        retention: a.retention,
    };
    patrol_center::serve(cfg).await?;
    Ok(())
}
