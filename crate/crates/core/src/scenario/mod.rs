//! Scenario loading, the mission loop, and run artifacts.

mod batch;
mod config;
mod metrics;
mod runner;
mod surface;
pub mod trace;

pub use batch::{run_batch, BatchResult};
pub use config::{ConfigError, Scenario, ScenarioConfig};
pub use metrics::{wall_regulation, WallRegulation};
pub use runner::{
    run, run_from, CommandSource, Directive, RunOutcome, RunResult, RunSummary, Supervisor,
    TickRecord, Unsupervised, IDLE_TICK,
};
pub use surface::{control_surface, surface_csv, SurfacePoint};
