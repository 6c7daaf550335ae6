//! Deterministic 2D corridor world: wall segments, obstacles, people,
//! discrete-primitive robot motion and the sonar / human-motion sensors.

mod map;
mod motion;
mod robot;
mod sensors;

use thiserror::Error;

pub use map::{HumanEvent, Obstacle, Pose, WorldMap, HUMAN_RADIUS};
pub use motion::{step, StepOutcome, SWEEP_STEP};
pub use robot::{
    HmsMount, MotionCommand, RobotParams, RobotState, SonarMount, HMS_LEFT, HMS_RIGHT, SONAR_FRONT,
    SONAR_LEFT, SONAR_RIGHT,
};
pub use sensors::{
    hms_read, sense, sense_with_noise, sonar_read, HmsPair, SensorFrame, SonarNoise, SonarTriple,
    SONAR_MIN, SONAR_NO_ECHO,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{entity}: {message}")]
    Geometry { entity: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid robot parameters: {0}")]
    InvalidRobot(String),
    #[error("invalid motion command {0}")]
    InvalidCommand(MotionCommand),
    #[error("no sensor mount #{0}")]
    NoSuchMount(usize),
    #[error("battery exhausted")]
    BatteryDepleted,
}
