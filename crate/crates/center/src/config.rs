use std::net::SocketAddr;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct CenterConfig {
    pub agent_addr: SocketAddr,
    pub http_addr: SocketAddr,
    pub storage_dir: PathBuf,
    /// Map served to operator consoles.
    pub map: Option<PathBuf>,
    /// Queue operator commands while no agent is connected instead of
    /// rejecting them.
    pub queue_when_offline: bool,
    /// Number of stored sessions to keep; older ones are pruned at startup.
    pub retention: Option<usize>,
}

impl Default for CenterConfig {
    fn default() -> Self {
        Self {
            agent_addr: SocketAddr::from(([0, 0, 0, 0], 7710)),
            http_addr: SocketAddr::from(([0, 0, 0, 0], 7780)),
            storage_dir: PathBuf::from("center-data"),
            map: None,
            queue_when_offline: false,
            retention: None,
        }
    }
}
