use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Pose, WorldError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SonarMount {
    /// Beam axis relative to the heading, degrees (positive = right).
    pub angle: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmsMount {
    pub angle: f64,
    pub half_width: f64,
    pub range: f64,
}

pub const SONAR_LEFT: usize = 0;
pub const SONAR_FRONT: usize = 1;
pub const SONAR_RIGHT: usize = 2;
pub const HMS_LEFT: usize = 0;
pub const HMS_RIGHT: usize = 1;

/// Physical description of the robot. All fields are configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    pub body_radius: f64,
    /// cm/s
    pub speed_forward: f64,
    /// degrees/s
    pub speed_turn: f64,
    /// Battery budget in seconds of commanded motion.
    pub battery: f64,
    /// Left, front, right.
    pub sonar: [SonarMount; 3],
    /// Left, right.
    pub hms: [HmsMount; 2],
    pub rays_per_beam: usize,
    /// Half-amplitude of uniform sonar jitter, cm. Zero disables noise.
    pub sonar_noise: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            body_radius: 18.0,
            speed_forward: 10.0,
            speed_turn: 30.0,
            battery: 5400.0,
            sonar: [
                SonarMount { angle: -90.0, half_width: 20.0 },
                SonarMount { angle: 0.0, half_width: 20.0 },
                SonarMount { angle: 60.0, half_width: 20.0 },
            ],
            hms: [
                HmsMount { angle: -45.0, half_width: 60.0, range: 150.0 },
                HmsMount { angle: 45.0, half_width: 60.0, range: 150.0 },
            ],
            rays_per_beam: 9,
            sonar_noise: 0.0,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |what: &str| Err(WorldError::InvalidRobot(what.to_owned()));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.body_radius) {
            return bad("body_radius must be positive");
        }
        if !positive(self.speed_forward) || !positive(self.speed_turn) {
            return bad("speeds must be positive");
        }
        if !(self.battery.is_finite() && self.battery >= 0.0) {
            return bad("battery must be non-negative");
        }
        if self.rays_per_beam == 0 {
            return bad("rays_per_beam must be at least 1");
        }
        if !(self.sonar_noise.is_finite() && self.sonar_noise >= 0.0) {
            return bad("sonar_noise must be non-negative");
        }
        for m in &self.sonar {
            if !(m.angle.is_finite() && m.half_width.is_finite() && m.half_width >= 0.0) {
                return bad("sonar mount angles must be finite, half widths non-negative");
            }
        }
        for m in &self.hms {
            if !(m.angle.is_finite() && m.half_width >= 0.0 && positive(m.range)) {
                return bad("hms mounts need a finite angle, non-negative half width, positive range");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose,
    pub battery_remaining: f64,
    /// Forward distance actually travelled, cm.
    pub odometer: f64,
    pub params: RobotParams,
}

impl RobotState {
    pub fn new(pose: Pose, params: RobotParams) -> Result<Self, WorldError> {
        params.validate()?;
        Ok(Self {
            pose,
            battery_remaining: params.battery,
            odometer: 0.0,
            params,
        })
    }
}

/// A discrete motion primitive. Positive turns are to the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MotionCommand {
    Turn(f64),
    Forward(f64),
    Stop,
}

impl MotionCommand {
    pub fn validate(&self) -> Result<(), WorldError> {
        match *self {
            MotionCommand::Turn(d) if !(-180.0..=180.0).contains(&d) => {
                Err(WorldError::InvalidCommand(*self))
            }
            MotionCommand::Forward(d) if !(d.is_finite() && d >= 0.0) => {
                Err(WorldError::InvalidCommand(*self))
            }
            _ => Ok(()),
        }
    }

    pub fn is_turn(&self) -> bool {
        matches!(self, MotionCommand::Turn(_))
    }

    /// Inverse of the `Display` form: `TURN:<deg>`, `FORWARD:<cm>`, `STOP`.
    pub fn parse(s: &str) -> Option<Self> {
        if s == "STOP" {
            return Some(MotionCommand::Stop);
        }
        let (kind, value) = s.split_once(':')?;
        let value: f64 = value.parse().ok()?;
        match kind {
            "TURN" => Some(MotionCommand::Turn(value)),
            "FORWARD" => Some(MotionCommand::Forward(value)),
            _ => None,
        }
    }
}

impl fmt::Display for MotionCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotionCommand::Turn(d) => write!(f, "TURN:{d}"),
            MotionCommand::Forward(d) => write!(f, "FORWARD:{d}"),
            MotionCommand::Stop => f.write_str("STOP"),
        }
    }
}
