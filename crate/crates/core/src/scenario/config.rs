use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{FuzzyConfig, FuzzyController, FuzzyError};
use crate::pilot::{PilotConfig, PilotError};
use crate::world::{RobotParams, RobotState, WorldError, WorldMap};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Map { path: String, source: WorldError },
    #[error("fuzzy: {0}")]
    Fuzzy(#[from] FuzzyError),
    #[error("pilot: {0}")]
    Pilot(#[from] PilotError),
    #[error("robot: {0}")]
    Robot(WorldError),
    #[error("{0}")]
    Invalid(String),
}

fn default_duration() -> f64 {
    1200.0
}

fn default_telemetry_hz() -> f64 {
    10.0
}

fn default_video_fps() -> f64 {
    15.0
}

fn default_link_buffer() -> usize {
    4096
}

/// Scenario file (TOML). Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub map: PathBuf,
    #[serde(default = "default_duration")]
    pub duration_limit: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// `host:port` of a control center; headless when absent.
    #[serde(default)]
    pub center: Option<String>,
    #[serde(default = "default_telemetry_hz")]
    pub telemetry_hz: f64,
    #[serde(default = "default_video_fps")]
    pub video_fps: f64,
    /// Outgoing message queue length before the oldest telemetry is dropped.
    #[serde(default = "default_link_buffer")]
    pub link_buffer: usize,
    #[serde(default)]
    pub robot: RobotParams,
    #[serde(default)]
    pub pilot: PilotConfig,
    /// Separate fuzzy config file; overrides `[fuzzy]` when set.
    #[serde(default)]
    pub fuzzy_file: Option<PathBuf>,
    #[serde(default)]
    pub fuzzy: FuzzyConfig,
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf), ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let config = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }
}

/// A fully loaded and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    /// Config file as given on the command line, recorded in trace headers.
    pub source: Option<String>,
    pub map: WorldMap,
    pub robot: RobotParams,
    pub pilot: PilotConfig,
    pub fuzzy: FuzzyController,
    pub duration_limit: f64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub center: Option<String>,
    pub telemetry_hz: f64,
    pub video_fps: f64,
    pub link_buffer: usize,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let (config, base) = ScenarioConfig::load(path)?;
        let mut s = Self::from_config(config, &base)?;
        s.source = Some(path.display().to_string());
        Ok(s)
    }

    pub fn from_config(config: ScenarioConfig, base: &Path) -> Result<Self, ConfigError> {
        let map_path = resolve(base, &config.map);
        let map = WorldMap::load(&map_path).map_err(|source| ConfigError::Map {
            path: map_path.display().to_string(),
            source,
        })?;
        let fuzzy_config = match &config.fuzzy_file {
            Some(p) => FuzzyConfig::load(resolve(base, p))?,
            None => config.fuzzy.clone(),
        };
        let output_dir = config.output_dir.as_ref().map(|p| resolve(base, p));
        Self::assemble(
            map,
            config.robot,
            config.pilot,
            fuzzy_config,
            config.duration_limit,
            config.seed,
        )
        .map(|mut s| {
            s.output_dir = output_dir;
            s.center = config.center;
            s.telemetry_hz = config.telemetry_hz;
            s.video_fps = config.video_fps;
            s.link_buffer = config.link_buffer;
            s
        })
        .and_then(Self::check_rates)
    }

    /// Scenario with default robot, pilot and fuzzy settings on `map`.
    pub fn with_map(map: WorldMap) -> Result<Self, ConfigError> {
        Self::assemble(
            map,
            RobotParams::default(),
            PilotConfig::default(),
            FuzzyConfig::canonical(),
            default_duration(),
            0,
        )
    }

    fn assemble(
        map: WorldMap,
        robot: RobotParams,
        pilot: PilotConfig,
        fuzzy: FuzzyConfig,
        duration_limit: f64,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        if !(duration_limit.is_finite() && duration_limit > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "duration_limit must be positive, got {duration_limit}"
            )));
        }
        robot.validate().map_err(ConfigError::Robot)?;
        pilot.validate()?;
        let fuzzy = FuzzyController::new(fuzzy)?;
        let start = RobotState::new(map.start, robot.clone()).map_err(ConfigError::Robot)?;
        let clearance = map.clearance(start.pose.position(), 0.0);
        if clearance <= robot.body_radius {
            return Err(ConfigError::Invalid(format!(
                "robot body overlaps geometry at the start pose (clearance {clearance:.1} cm)"
            )));
        }
        Ok(Self {
            name: map.name().to_owned(),
            source: None,
            map,
            robot,
            pilot,
            fuzzy,
            duration_limit,
            seed,
            output_dir: None,
            center: None,
            telemetry_hz: default_telemetry_hz(),
            video_fps: default_video_fps(),
            link_buffer: default_link_buffer(),
        })
    }

    fn check_rates(self) -> Result<Self, ConfigError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.telemetry_hz) || !ok(self.video_fps) || self.link_buffer == 0 {
            return Err(ConfigError::Invalid(
                "telemetry_hz, video_fps and link_buffer must be positive".into(),
            ));
        }
        Ok(self)
    }
}
