use serde::{Deserialize, Serialize};

use super::{run_from, RunOutcome, RunSummary, Scenario, Supervisor, TickRecord};
use crate::pilot::PatrolState;
use crate::world::RobotState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub loops: Vec<RunSummary>,
    pub completed: u32,
    /// Outcome of the last mission.
    pub outcome: RunOutcome,
    pub total_time: f64,
    pub battery_remaining: f64,
}

/// Back-to-back missions. Each one restarts at the start pose with the
/// battery, odometer and clock carried over; stops at the first mission that
/// does not complete its loop, or after `max_loops`.
pub fn run_batch(
    scenario: &Scenario,
    max_loops: Option<u32>,
    supervisor: &mut dyn Supervisor,
    mut on_loop: impl FnMut(&RunSummary, &[TickRecord]),
) -> BatchResult {
    let mut robot = RobotState::new(scenario.map.start, scenario.robot.clone())
        .expect("scenario validated the robot parameters");
    let mut patrol = PatrolState::new(scenario.pilot.clone()).expect("scenario validated the pilot");
    let mut t = 0.0;
    let mut loops = Vec::new();
    let mut completed = 0;
    let outcome = loop {
        let result = run_from(scenario, robot.clone(), patrol.restart(), t, supervisor);
        let mut summary = result.summary;
        t += summary.sim_duration;
        if summary.outcome == RunOutcome::LoopComplete {
            completed += 1;
        }
        summary.loops_completed = completed;
        on_loop(&summary, &result.records);
        let outcome = summary.outcome;
        loops.push(summary);
        robot = result.robot;
        robot.pose = scenario.map.start;
        patrol = result.patrol;
        if outcome != RunOutcome::LoopComplete || max_loops.is_some_and(|m| completed >= m) {
            break outcome;
        }
    };
    BatchResult {
        loops,
        completed,
        outcome,
        total_time: t,
        battery_remaining: robot.battery_remaining,
    }
}
