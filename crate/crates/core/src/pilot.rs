//! Patrol controller.
//!
//! Each tick takes one [`SensorFrame`] and yields one [`MotionCommand`]:
//! left-wall following at a fixed setpoint, overridden by fuzzy avoidance
//! when the front/right band demands a real turn, and by a human-motion
//! alarm above everything. Every turn is followed by a short straight move
//! on the next tick, before sensors are consulted again. A run of no-echo
//! reads on the left marks the doorway just before the start point and ends
//! the loop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::FuzzyController;
use crate::world::{MotionCommand, Pose, SensorFrame, SONAR_NO_ECHO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Follow,
    Avoid,
    Alarm,
    Done,
    BatteryOut,
}

impl Mode {
    pub fn is_terminal(self) -> bool {
        matches!(self, Mode::Alarm | Mode::Done | Mode::BatteryOut)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Follow => "FOLLOW",
            Mode::Avoid => "AVOID",
            Mode::Alarm => "ALARM",
            Mode::Done => "DONE",
            Mode::BatteryOut => "BATTERY_OUT",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "FOLLOW" => Mode::Follow,
            "AVOID" => Mode::Avoid,
            "ALARM" => Mode::Alarm,
            "DONE" => Mode::Done,
            "BATTERY_OUT" => Mode::BatteryOut,
            other => return Err(format!("unknown mode `{other}`")),
        })
    }
}

/// Agent-level mode as reported to the control center: the patrol mode, or
/// operator control after a remote stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentMode {
    Patrol(Mode),
    Manual,
}

impl AgentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentMode::Patrol(m) => m.as_str(),
            AgentMode::Manual => "MANUAL",
        }
    }
}

impl fmt::Display for AgentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "MANUAL" {
            Ok(AgentMode::Manual)
        } else {
            s.parse().map(AgentMode::Patrol)
        }
    }
}

impl Serialize for AgentMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AgentMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlarmCause {
    HmsLeft,
    HmsRight,
}

impl AlarmCause {
    pub fn as_str(self) -> &'static str {
        match self {
            AlarmCause::HmsLeft => "HMS_LEFT",
            AlarmCause::HmsRight => "HMS_RIGHT",
        }
    }
}

impl fmt::Display for AlarmCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlarmCause {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "HMS_LEFT" => Ok(AlarmCause::HmsLeft),
            "HMS_RIGHT" => Ok(AlarmCause::HmsRight),
            other => Err(format!("unknown alarm cause `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotConfig {
    /// Target left-wall distance, cm.
    pub wall_setpoint: f64,
    pub wall_deadband: f64,
    /// Heading correction per wall-following turn, degrees.
    pub follow_turn_step: f64,
    /// Straight move after every turn, cm.
    pub straight_step: f64,
    /// Fuzzy outputs within ± this many degrees leave wall-following in charge.
    pub avoid_deadband: f64,
    /// Consecutive left no-echo reads that mark the end of the loop.
    pub end_detect_count: u32,
    pub end_turn: f64,
    /// Reads of lookahead when comparing the left distance with the band:
    /// the error is extrapolated by the change since the previous read. Zero
    /// gives plain bang-bang on the current reading.
    pub wall_lookahead: f64,
    /// Bound on the distance error before the lookahead term is added, cm.
    /// Keeps a large error (an outside corner) from demanding an ever
    /// steeper approach.
    pub wall_error_limit: f64,
    /// Negate fuzzy outputs, for a rule base written with positive = left.
    pub mirror_avoidance: bool,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self {
            wall_setpoint: 30.0,
            wall_deadband: 2.0,
            follow_turn_step: 5.0,
            straight_step: 10.0,
            avoid_deadband: 2.0,
            end_detect_count: 5,
            end_turn: 90.0,
            wall_lookahead: 2.0,
            wall_error_limit: 8.0,
            mirror_avoidance: false,
        }
    }
}

impl PilotConfig {
    pub fn validate(&self) -> Result<(), PilotError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let ok = positive(self.wall_setpoint)
            && positive(self.wall_deadband)
            && positive(self.follow_turn_step)
            && self.follow_turn_step <= 180.0
            && positive(self.straight_step)
            && positive(self.avoid_deadband)
            && self.avoid_deadband < 20.0
            && self.end_detect_count > 0
            && positive(self.end_turn)
            && self.end_turn <= 180.0
            && self.wall_lookahead.is_finite()
            && self.wall_lookahead >= 0.0
            && positive(self.wall_error_limit);
        if ok {
            Ok(())
        } else {
            Err(PilotError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PilotError {
    #[error("patrol_tick called in terminal mode {0}")]
    TerminalMode(Mode),
    #[error("invalid pilot config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
enum Pending {
    #[default]
    None,
    /// The mandatory straight move after a turn.
    Forward,
    /// The straight move after the end-of-loop turn; completes the loop.
    Finish,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatrolState {
    mode: Mode,
    no_echo_count: u32,
    loops_completed: u32,
    last_command: Option<MotionCommand>,
    /// Previous left reading taken while wall following.
    last_left: Option<f64>,
    pending: Pending,
    config: PilotConfig,
}

impl PatrolState {
    pub fn new(config: PilotConfig) -> Result<Self, PilotError> {
        config.validate()?;
        Ok(Self {
            mode: Mode::Follow,
            no_echo_count: 0,
            loops_completed: 0,
            last_command: None,
            last_left: None,
            pending: Pending::None,
            config,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn no_echo_count(&self) -> u32 {
        self.no_echo_count
    }

    pub fn loops_completed(&self) -> u32 {
        self.loops_completed
    }

    pub fn last_command(&self) -> Option<MotionCommand> {
        self.last_command
    }

    pub fn config(&self) -> &PilotConfig {
        &self.config
    }

    /// Fresh mission from the start point, keeping the loop count.
    pub fn restart(&self) -> Self {
        Self {
            loops_completed: self.loops_completed,
            ..Self::new(self.config.clone()).expect("config already validated")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PatrolEvent {
    ModeChanged { from: Mode, to: Mode },
    AlarmRaised { cause: AlarmCause, t: f64, pose: Pose },
    EndDetected { t: f64 },
    LoopCompleted { loops: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intent {
    Follow,
    Avoid(f64),
    Alarm(AlarmCause),
}

/// Bang-bang wall following on the left sonar.
pub fn wall_follow_step(left: f64, cfg: &PilotConfig) -> MotionCommand {
    wall_follow_with_trend(left, 0.0, cfg)
}

/// Wall following on the left reading extrapolated by `trend`, the change
/// in the reading since the previous straight step.
pub fn wall_follow_with_trend(left: f64, trend: f64, cfg: &PilotConfig) -> MotionCommand {
    let limit = cfg.wall_error_limit;
    let error = (left - cfg.wall_setpoint).clamp(-limit, limit) + cfg.wall_lookahead * trend;
    if error.abs() <= cfg.wall_deadband {
        MotionCommand::Forward(cfg.straight_step)
    } else if error < 0.0 {
        MotionCommand::Turn(cfg.follow_turn_step)
    } else {
        MotionCommand::Turn(-cfg.follow_turn_step)
    }
}

/// Decides who drives this tick. A human-motion detection beats everything;
/// otherwise fuzzy avoidance wins when its angle leaves the deadband.
pub fn arbitrate(frame: &SensorFrame, fuzzy_out: f64, cfg: &PilotConfig) -> Intent {
    if frame.hms.left {
        Intent::Alarm(AlarmCause::HmsLeft)
    } else if frame.hms.right {
        Intent::Alarm(AlarmCause::HmsRight)
    } else if fuzzy_out.abs() > cfg.avoid_deadband {
        Intent::Avoid(fuzzy_out)
    } else {
        Intent::Follow
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub state: PatrolState,
    pub command: MotionCommand,
    pub events: Vec<PatrolEvent>,
}

/// One decision cycle.
pub fn patrol_tick(
    state: &PatrolState,
    frame: &SensorFrame,
    fuzzy: &FuzzyController,
) -> Result<TickOutput, PilotError> {
    if state.mode.is_terminal() {
        return Err(PilotError::TerminalMode(state.mode));
    }
    let cfg = &state.config;
    let mut next = state.clone();
    let mut events = Vec::new();
    let set_mode = |next: &mut PatrolState, to: Mode, events: &mut Vec<PatrolEvent>| {
        if next.mode != to {
            events.push(PatrolEvent::ModeChanged { from: next.mode, to });
            next.mode = to;
        }
    };

    // Stopping conditions come first, even in the middle of a turn/forward pair.
    let command = if let Some(cause) = alarm_cause(frame) {
        events.push(PatrolEvent::AlarmRaised {
            cause,
            t: frame.t,
            pose: frame.pose,
        });
        set_mode(&mut next, Mode::Alarm, &mut events);
        next.pending = Pending::None;
        MotionCommand::Stop
    } else if frame.battery_remaining <= 0.0 {
        set_mode(&mut next, Mode::BatteryOut, &mut events);
        next.pending = Pending::None;
        MotionCommand::Stop
    } else {
        match state.pending {
            Pending::Forward => {
                next.pending = Pending::None;
                MotionCommand::Forward(cfg.straight_step)
            }
            Pending::Finish => {
                next.pending = Pending::None;
                next.loops_completed += 1;
                set_mode(&mut next, Mode::Done, &mut events);
                events.push(PatrolEvent::LoopCompleted {
                    loops: next.loops_completed,
                });
                MotionCommand::Forward(cfg.straight_step)
            }
            Pending::None => {
                let left = frame.sonar.left;
                if left >= SONAR_NO_ECHO {
                    next.no_echo_count += 1;
                } else {
                    next.no_echo_count = 0;
                }
                // A jump larger than one straight step can only be a corner,
                // a doorway or an obstacle, not heading drift.
                let trend = match state.last_left {
                    Some(prev) if (left - prev).abs() <= cfg.straight_step => left - prev,
                    _ => 0.0,
                };
                next.last_left = (left < SONAR_NO_ECHO).then_some(left);
                if next.no_echo_count >= cfg.end_detect_count {
                    events.push(PatrolEvent::EndDetected { t: frame.t });
                    next.last_left = None;
                    next.pending = Pending::Finish;
                    MotionCommand::Turn(cfg.end_turn)
                } else {
                    let alpha = fuzzy.avoidance_angle(frame.sonar.front, frame.sonar.right);
                    let alpha = if cfg.mirror_avoidance { -alpha } else { alpha };
                    match arbitrate(frame, alpha, cfg) {
                        Intent::Avoid(angle) => {
                            next.last_left = None;
                            set_mode(&mut next, Mode::Avoid, &mut events);
                            next.pending = Pending::Forward;
                            MotionCommand::Turn(angle)
                        }
                        // HMS was handled above; arbitrate cannot raise it here.
                        Intent::Follow | Intent::Alarm(_) => {
                            set_mode(&mut next, Mode::Follow, &mut events);
                            let cmd = wall_follow_with_trend(left, trend, cfg);
                            if cmd.is_turn() {
                                next.pending = Pending::Forward;
                            }
                            cmd
                        }
                    }
                }
            }
        }
    };
    next.last_command = Some(command);
    Ok(TickOutput {
        state: next,
        command,
        events,
    })
}

/// Left sensor wins when both fire.
pub fn alarm_cause(frame: &SensorFrame) -> Option<AlarmCause> {
    if frame.hms.left {
        Some(AlarmCause::HmsLeft)
    } else if frame.hms.right {
        Some(AlarmCause::HmsRight)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{HmsPair, SonarTriple};

    fn frame(left: f64, front: f64, right: f64) -> SensorFrame {
        SensorFrame {
            t: 0.0,
            sonar: SonarTriple { left, front, right },
            hms: HmsPair::default(),
            battery_remaining: 100.0,
            pose: Pose::default(),
        }
    }

    fn fresh() -> PatrolState {
        PatrolState::new(PilotConfig::default()).unwrap()
    }

    #[test]
    fn wall_follow_directions() {
        let cfg = PilotConfig::default();
        assert_eq!(wall_follow_step(30.0, &cfg), MotionCommand::Forward(10.0));
        assert_eq!(wall_follow_step(32.0, &cfg), MotionCommand::Forward(10.0));
        assert_eq!(wall_follow_step(20.0, &cfg), MotionCommand::Turn(5.0));
        assert_eq!(wall_follow_step(40.0, &cfg), MotionCommand::Turn(-5.0));
        assert_eq!(wall_follow_step(255.0, &cfg), MotionCommand::Turn(-5.0));
    }

    #[test]
    fn arbitration() {
        let cfg = PilotConfig::default();
        let f = frame(30.0, 255.0, 255.0);
        assert_eq!(arbitrate(&f, 0.3, &cfg), Intent::Follow);
        assert_eq!(arbitrate(&f, 42.0, &cfg), Intent::Avoid(42.0));
        assert_eq!(arbitrate(&f, -7.0, &cfg), Intent::Avoid(-7.0));
        let mut alarm = f;
        alarm.hms.left = true;
        assert_eq!(arbitrate(&alarm, 42.0, &cfg), Intent::Alarm(AlarmCause::HmsLeft));
    }

    #[test]
    fn clear_corridor_goes_straight() {
        let fuzzy = FuzzyController::canonical();
        let out = patrol_tick(&fresh(), &frame(30.0, 255.0, 255.0), &fuzzy).unwrap();
        assert_eq!(out.command, MotionCommand::Forward(10.0));
        assert_eq!(out.state.mode(), Mode::Follow);
        assert!(out.events.is_empty());
    }

    #[test]
    fn turn_is_followed_by_forward_without_reading() {
        let fuzzy = FuzzyController::canonical();
        let a = patrol_tick(&fresh(), &frame(20.0, 255.0, 255.0), &fuzzy).unwrap();
        assert_eq!(a.command, MotionCommand::Turn(5.0));
        // Even a reading that would demand another turn gets the straight step.
        let b = patrol_tick(&a.state, &frame(10.0, 255.0, 255.0), &fuzzy).unwrap();
        assert_eq!(b.command, MotionCommand::Forward(10.0));
    }

    #[test]
    fn obstacle_ahead_switches_to_avoid() {
        let fuzzy = FuzzyController::canonical();
        let out = patrol_tick(&fresh(), &frame(30.0, 10.0, 255.0), &fuzzy).unwrap();
        match out.command {
            MotionCommand::Turn(a) => assert!(a > 2.0, "{a}"),
            other => panic!("expected a turn, got {other}"),
        }
        assert_eq!(out.state.mode(), Mode::Avoid);
        assert_eq!(
            out.events,
            vec![PatrolEvent::ModeChanged { from: Mode::Follow, to: Mode::Avoid }]
        );
        let next = patrol_tick(&out.state, &frame(30.0, 10.0, 255.0), &fuzzy).unwrap();
        assert_eq!(next.command, MotionCommand::Forward(10.0));
        assert_eq!(next.state.mode(), Mode::Avoid);
    }

    #[test]
    fn end_detection_after_five_no_echo_reads() {
        let fuzzy = FuzzyController::canonical();
        let mut s = fresh();
        let mut commands = Vec::new();
        let mut reads = 0;
        while s.mode() != Mode::Done {
            let out = patrol_tick(&s, &frame(255.0, 255.0, 255.0), &fuzzy).unwrap();
            if s.pending == Pending::None {
                reads += 1;
            }
            commands.push(out.command);
            s = out.state;
        }
        assert_eq!(reads, 5);
        let tail = &commands[commands.len() - 2..];
        assert_eq!(tail, [MotionCommand::Turn(90.0), MotionCommand::Forward(10.0)]);
        assert_eq!(s.loops_completed(), 1);
        assert!(matches!(
            patrol_tick(&s, &frame(30.0, 255.0, 255.0), &fuzzy),
            Err(PilotError::TerminalMode(Mode::Done))
        ));
    }

    #[test]
    fn single_echo_resets_the_counter() {
        let fuzzy = FuzzyController::canonical();
        let mut s = fresh();
        for left in [255.0, 255.0, 255.0, 255.0, 30.0] {
            // skip the forced straight steps
            loop {
                let read = s.pending == Pending::None;
                s = patrol_tick(&s, &frame(left, 255.0, 255.0), &fuzzy).unwrap().state;
                if read {
                    break;
                }
            }
        }
        assert_eq!(s.no_echo_count(), 0);
        assert_eq!(s.mode(), Mode::Follow);
    }

    #[test]
    fn human_motion_stops_the_patrol() {
        let fuzzy = FuzzyController::canonical();
        let mut f = frame(30.0, 10.0, 10.0);
        f.hms.right = true;
        let out = patrol_tick(&fresh(), &f, &fuzzy).unwrap();
        assert_eq!(out.command, MotionCommand::Stop);
        assert_eq!(out.state.mode(), Mode::Alarm);
        assert!(out.events.iter().any(|e| matches!(
            e,
            PatrolEvent::AlarmRaised { cause: AlarmCause::HmsRight, .. }
        )));
    }

    #[test]
    fn empty_battery_is_terminal() {
        let fuzzy = FuzzyController::canonical();
        let mut f = frame(30.0, 255.0, 255.0);
        f.battery_remaining = 0.0;
        let out = patrol_tick(&fresh(), &f, &fuzzy).unwrap();
        assert_eq!(out.command, MotionCommand::Stop);
        assert_eq!(out.state.mode(), Mode::BatteryOut);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PilotConfig::default();
        cfg.avoid_deadband = 25.0;
        assert!(PatrolState::new(cfg).is_err());
        let mut cfg = PilotConfig::default();
        cfg.end_detect_count = 0;
        assert!(cfg.validate().is_err());
    }
}
