use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::pilot::{alarm_cause, patrol_tick, AgentMode, AlarmCause, Mode, PatrolEvent, PatrolState};
use crate::world::{self, sense_with_noise, MotionCommand, Pose, RobotState, SensorFrame, SonarNoise};

/// Simulated seconds that pass per idle tick while waiting for an operator.
pub const IDLE_TICK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunOutcome {
    LoopComplete,
    Alarm,
    Collision,
    Timeout,
    BatteryOut,
}

impl RunOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            RunOutcome::LoopComplete => "LOOP_COMPLETE",
            RunOutcome::Alarm => "ALARM",
            RunOutcome::Collision => "COLLISION",
            RunOutcome::Timeout => "TIMEOUT",
            RunOutcome::BatteryOut => "BATTERY_OUT",
        }
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Who produced a tick's command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandSource {
    Pilot,
    Operator,
    Idle,
}

impl CommandSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandSource::Pilot => "pilot",
            CommandSource::Operator => "operator",
            CommandSource::Idle => "idle",
        }
    }
}

impl FromStr for CommandSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pilot" => Ok(CommandSource::Pilot),
            "operator" => Ok(CommandSource::Operator),
            "idle" => Ok(CommandSource::Idle),
            other => Err(format!("unknown command source `{other}`")),
        }
    }
}

/// An instruction from outside the robot, applied between ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Directive {
    /// Stop autonomous patrol and hand control to the operator.
    Halt,
    /// Resume autonomous patrol from the current position.
    Resume,
    /// Execute a motion primitive; honored only under operator control.
    Drive(MotionCommand),
    CameraPan(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    /// Time at which the frame was sensed and the command issued.
    pub t: f64,
    pub frame: SensorFrame,
    /// Ground-truth clearance between the robot body and the followed wall.
    pub wall_distance: Option<f64>,
    pub mode: AgentMode,
    pub command: MotionCommand,
    pub source: CommandSource,
    pub elapsed: f64,
    pub collision: bool,
    /// Pose after the command.
    pub end_pose: Pose,
    pub odometer: f64,
    pub events: Vec<PatrolEvent>,
}

/// Observer and command source for a running mission.
pub trait Supervisor {
    /// Pending instructions at time `t`.
    fn poll(&mut self, _t: f64) -> Vec<Directive> {
        Vec::new()
    }

    fn record(&mut self, _record: &TickRecord) {}

    /// Whether an alarm leaves the robot stopped under operator control,
    /// waiting for [`Directive::Resume`], instead of ending the mission.
    fn hold_on_alarm(&self) -> bool {
        false
    }
}

/// Headless runs.
#[derive(Debug, Default)]
pub struct Unsupervised;

impl Supervisor for Unsupervised {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub outcome: RunOutcome,
    pub sim_duration: f64,
    pub distance: f64,
    pub min_wall_distance: Option<f64>,
    pub mean_wall_error: Option<f64>,
    pub ticks: u64,
    pub collisions: u32,
    pub avoid_ticks: u64,
    pub loops_completed: u32,
    pub start_pose: Pose,
    pub final_pose: Pose,
    pub final_mode: AgentMode,
    pub battery_remaining: f64,
    pub alarm: Option<AlarmCause>,
    /// Messages the network link dropped on overflow (0 when headless).
    pub telemetry_dropped: u64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub records: Vec<TickRecord>,
    pub robot: RobotState,
    pub patrol: PatrolState,
}

pub fn run(scenario: &Scenario, supervisor: &mut dyn Supervisor) -> RunResult {
    let robot = RobotState::new(scenario.map.start, scenario.robot.clone())
        .expect("scenario validated the robot parameters");
    let patrol = PatrolState::new(scenario.pilot.clone()).expect("scenario validated the pilot");
    run_from(scenario, robot, patrol, 0.0, supervisor)
}

/// Runs one mission from an arbitrary robot state and clock.
///
/// The mission ends on loop completion, alarm, collision, battery
/// exhaustion, or when `scenario.duration_limit` seconds have passed since
/// `t0`.
pub fn run_from(
    scenario: &Scenario,
    mut robot: RobotState,
    mut patrol: PatrolState,
    t0: f64,
    supervisor: &mut dyn Supervisor,
) -> RunResult {
    let noise = SonarNoise {
        seed: scenario.seed,
        amplitude: scenario.robot.sonar_noise,
    };
    let map = &scenario.map;
    let radius = robot.params.body_radius;
    let start_pose = robot.pose;
    let odometer0 = robot.odometer;
    let mut t = t0;
    let mut records: Vec<TickRecord> = Vec::new();
    let mut manual = false;
    let mut manual_queue: VecDeque<MotionCommand> = VecDeque::new();
    let mut alarm = None;
    let mut collisions = 0;
    let hold = supervisor.hold_on_alarm();
    // While latched, a person still in view does not raise a fresh alarm.
    let mut latched = false;

    let outcome = loop {
        if t - t0 >= scenario.duration_limit {
            break RunOutcome::Timeout;
        }
        let mut operator_stop = false;
        let mut events = Vec::new();
        for d in supervisor.poll(t) {
            match d {
                Directive::Halt if !manual => {
                    manual = true;
                    operator_stop = true;
                    manual_queue.clear();
                }
                Directive::Halt => operator_stop = true,
                Directive::Resume if manual => {
                    manual = false;
                    latched = false;
                    manual_queue.clear();
                    patrol = patrol.restart();
                }
                Directive::Drive(cmd) if manual && cmd.validate().is_ok() => {
                    manual_queue.push_back(cmd)
                }
                Directive::CameraPan(_) | Directive::Resume | Directive::Drive(_) => {}
            }
        }

        let frame = sense_with_noise(map, &robot, t, noise);
        let wall_distance = map.followed_wall(robot.pose).map(|(d, _)| d - radius);
        let tick = records.len() as u64;

        let (command, source, mode) = if manual {
            if let Some(cause) = alarm_cause(&frame).filter(|_| !latched) {
                events.push(PatrolEvent::AlarmRaised { cause, t, pose: robot.pose });
                (MotionCommand::Stop, CommandSource::Pilot, AgentMode::Manual)
            } else if operator_stop {
                (MotionCommand::Stop, CommandSource::Operator, AgentMode::Manual)
            } else if let Some(cmd) = manual_queue.pop_front() {
                (cmd, CommandSource::Operator, AgentMode::Manual)
            } else {
                (MotionCommand::Stop, CommandSource::Idle, AgentMode::Manual)
            }
        } else {
            let out = patrol_tick(&patrol, &frame, &scenario.fuzzy)
                .expect("terminal modes end the mission before the next tick");
            patrol = out.state;
            events.extend(out.events);
            (out.command, CommandSource::Pilot, AgentMode::Patrol(patrol.mode()))
        };
        let raised = events.iter().find_map(|e| match e {
            PatrolEvent::AlarmRaised { cause, .. } => Some(*cause),
            _ => None,
        });
        if let Some(cause) = raised {
            alarm.get_or_insert(cause);
        }

        let mut record = TickRecord {
            tick,
            t,
            frame,
            wall_distance,
            mode,
            command,
            source,
            elapsed: 0.0,
            collision: false,
            end_pose: robot.pose,
            odometer: robot.odometer,
            events,
        };

        let finished = match record.mode {
            AgentMode::Patrol(Mode::BatteryOut) => Some(RunOutcome::BatteryOut),
            _ if raised.is_some() && !hold => Some(RunOutcome::Alarm),
            _ => None,
        };
        if let Some(outcome) = finished {
            supervisor.record(&record);
            records.push(record);
            break outcome;
        }
        if raised.is_some() {
            latched = true;
            manual = true;
            manual_queue.clear();
        }

        if source == CommandSource::Idle || raised.is_some() {
            record.elapsed = IDLE_TICK;
            t += IDLE_TICK;
            supervisor.record(&record);
            records.push(record);
            continue;
        }
        if robot.battery_remaining <= 0.0 {
            supervisor.record(&record);
            records.push(record);
            break RunOutcome::BatteryOut;
        }

        let step = world::step(map, &robot, command, t)
            .expect("commands are validated and the battery is checked above");
        robot = step.state;
        t += step.elapsed;
        record.elapsed = step.elapsed;
        record.collision = step.collision;
        record.end_pose = robot.pose;
        record.odometer = robot.odometer;
        supervisor.record(&record);
        records.push(record);

        if step.collision {
            collisions += 1;
            break RunOutcome::Collision;
        }
        if !manual && patrol.mode() == Mode::Done {
            break RunOutcome::LoopComplete;
        }
    };

    let walls: Vec<f64> = records.iter().filter_map(|r| r.wall_distance).collect();
    let setpoint = scenario.pilot.wall_setpoint;
    let summary = RunSummary {
        scenario: scenario.name.clone(),
        outcome,
        sim_duration: t - t0,
        distance: robot.odometer - odometer0,
        min_wall_distance: walls.iter().copied().reduce(f64::min),
        mean_wall_error: (!walls.is_empty())
            .then(|| walls.iter().map(|w| (w - setpoint).abs()).sum::<f64>() / walls.len() as f64),
        ticks: records.len() as u64,
        collisions,
        avoid_ticks: records
            .iter()
            .filter(|r| r.mode == AgentMode::Patrol(Mode::Avoid))
            .count() as u64,
        loops_completed: u32::from(outcome == RunOutcome::LoopComplete),
        start_pose,
        final_pose: robot.pose,
        final_mode: records
            .last()
            .map_or(AgentMode::Patrol(Mode::Follow), |r| r.mode),
        battery_remaining: robot.battery_remaining,
        alarm,
        telemetry_dropped: 0,
    };
    RunResult {
        summary,
        records,
        robot,
        patrol,
    }
}
