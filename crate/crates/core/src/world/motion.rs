use super::{MotionCommand, RobotState, WorldError, WorldMap};
use crate::geometry::{normalize_deg, Vec2};

/// Sampling interval of the swept collision check, cm.
pub const SWEEP_STEP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: RobotState,
    /// Simulated seconds the command took.
    pub elapsed: f64,
    /// Motion was cut short by contact with geometry.
    pub collision: bool,
    /// The battery ran out during the command.
    pub battery_out: bool,
}

/// Executes one motion primitive starting at time `t`.
///
/// Forward motion is swept in 1 cm increments; the robot stops at the last
/// position where its disc was clear. People present at `t` count as
/// obstacles. Turns happen in place and never collide.
pub fn step(map: &WorldMap, state: &RobotState, cmd: MotionCommand, t: f64) -> Result<StepOutcome, WorldError> {
    cmd.validate()?;
    if state.battery_remaining <= 0.0 {
        return Err(WorldError::BatteryDepleted);
    }
    let mut next = state.clone();
    let battery = state.battery_remaining;
    let p = &state.params;
    let outcome = match cmd {
        MotionCommand::Stop => StepOutcome {
            state: next,
            elapsed: 0.0,
            collision: false,
            battery_out: false,
        },
        MotionCommand::Turn(delta) => {
            let needed = delta.abs() / p.speed_turn;
            let (turned, elapsed, battery_out) = if needed > battery {
                (delta * battery / needed, battery, true)
            } else {
                (delta, needed, false)
            };
            next.pose.heading = normalize_deg(state.pose.heading + turned);
            next.battery_remaining = if battery_out { 0.0 } else { battery - elapsed };
            StepOutcome {
                state: next,
                elapsed,
                collision: false,
                battery_out,
            }
        }
        MotionCommand::Forward(distance) => {
            let reach = battery * p.speed_forward;
            let (target, battery_out) = if distance > reach {
                (reach, true)
            } else {
                (distance, false)
            };
            let origin = state.pose.position();
            let dir = Vec2::from_heading(state.pose.heading);
            let (travelled, collision) = sweep(map, origin, dir, target, p.body_radius, t);
            let battery_out = battery_out && !collision;
            let end = origin + dir * travelled;
            next.pose.x = end.x;
            next.pose.y = end.y;
            next.odometer += travelled;
            let elapsed = if battery_out {
                battery
            } else {
                travelled / p.speed_forward
            };
            next.battery_remaining = if battery_out { 0.0 } else { battery - elapsed };
            StepOutcome {
                state: next,
                elapsed,
                collision,
                battery_out,
            }
        }
    };
    Ok(outcome)
}

/// Furthest distance along `dir` (up to `target`) the disc can travel
/// without touching geometry, and whether it was stopped by contact.
fn sweep(map: &WorldMap, origin: Vec2, dir: Vec2, target: f64, radius: f64, t: f64) -> (f64, bool) {
    let mut free = 0.0;
    while free < target {
        let probe = (free + SWEEP_STEP).min(target);
        if map.clearance(origin + dir * probe, t) <= radius {
            return (free, true);
        }
        free = probe;
    }
    (free, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Pose, RobotParams};

    fn robot() -> RobotState {
        RobotState::new(Pose::new(0.0, 0.0, 0.0), RobotParams::default()).unwrap()
    }

    #[test]
    fn forward_in_open_plane() {
        let map = WorldMap::default();
        let out = step(&map, &robot(), MotionCommand::Forward(100.0), 0.0).unwrap();
        assert_eq!(out.elapsed, 10.0);
        assert!(!out.collision);
        assert!((out.state.pose.x - 100.0).abs() < 1e-12);
        assert_eq!(out.state.odometer, 100.0);
        assert_eq!(out.state.battery_remaining, 5390.0);
    }

    #[test]
    fn turn_costs_angle_over_turn_speed() {
        let map = WorldMap::default();
        let out = step(&map, &robot(), MotionCommand::Turn(90.0), 0.0).unwrap();
        assert_eq!(out.state.pose.heading, 90.0);
        assert_eq!(out.elapsed, 3.0);
        assert_eq!(out.state.odometer, 0.0);
        let back = step(&map, &out.state, MotionCommand::Turn(-180.0), 3.0).unwrap();
        assert_eq!(back.state.pose.heading, -90.0);
    }

    #[test]
    fn stops_short_of_a_wall() {
        // Wall 50 cm ahead of the centre, radius 18: contact at 32 cm.
        let map = WorldMap::parse("start 0 0 0\nwall 50 -100 50 100").unwrap();
        let out = step(&map, &robot(), MotionCommand::Forward(100.0), 0.0).unwrap();
        assert!(out.collision);
        assert!((out.state.pose.x - 32.0).abs() <= 1.0, "{}", out.state.pose.x);
        assert!(map.clearance(out.state.pose.position(), 0.0) > 18.0);
        assert_eq!(out.state.odometer, out.state.pose.x);
        assert!((out.elapsed - out.state.pose.x / 10.0).abs() < 1e-12);
    }

    #[test]
    fn battery_runs_out_mid_command() {
        let map = WorldMap::default();
        let mut s = robot();
        s.battery_remaining = 2.5;
        let out = step(&map, &s, MotionCommand::Forward(100.0), 0.0).unwrap();
        assert!(out.battery_out);
        assert_eq!(out.state.battery_remaining, 0.0);
        assert_eq!(out.elapsed, 2.5);
        assert!((out.state.pose.x - 25.0).abs() < 1e-12);
        assert!(matches!(
            step(&map, &out.state, MotionCommand::Forward(1.0), 2.5),
            Err(WorldError::BatteryDepleted)
        ));

        let mut s = robot();
        s.battery_remaining = 1.0;
        let out = step(&map, &s, MotionCommand::Turn(-90.0), 0.0).unwrap();
        assert!(out.battery_out);
        assert_eq!(out.state.pose.heading, -30.0);
    }

    #[test]
    fn stop_is_free() {
        let out = step(&WorldMap::default(), &robot(), MotionCommand::Stop, 0.0).unwrap();
        assert_eq!(out.elapsed, 0.0);
        assert_eq!(out.state, robot());
    }

    #[test]
    fn rejects_invalid_commands() {
        let map = WorldMap::default();
        assert!(step(&map, &robot(), MotionCommand::Forward(-3.0), 0.0).is_err());
        assert!(step(&map, &robot(), MotionCommand::Turn(270.0), 0.0).is_err());
    }
}
