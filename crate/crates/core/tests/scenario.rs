use std::path::PathBuf;

use patrol_core::pilot::{AgentMode, Mode, PatrolEvent};
use patrol_core::scenario::trace::{self, TraceHeader, TraceKind};
use patrol_core::scenario::{
    run, run_batch, CommandSource, Directive, RunOutcome, Scenario, Supervisor, TickRecord, Unsupervised,
};
use patrol_core::world::{MotionCommand, WorldMap};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(map: &str) -> Scenario {
    Scenario::with_map(WorldMap::load(root().join("maps").join(map)).unwrap()).unwrap()
}

#[test]
fn loop_complete_implies_done_near_start() {
    let sc = scenario("corridor_g2.map");
    let r = run(&sc, &mut Unsupervised).summary;
    assert_eq!(r.outcome, RunOutcome::LoopComplete);
    assert_eq!(r.final_mode, AgentMode::Patrol(Mode::Done));
    let d = (r.final_pose.position() - r.start_pose.position()).norm();
    assert!(d <= 30.0, "{d}");
    assert_eq!(r.loops_completed, 1);
    assert_eq!(r.collisions, 0);
}

#[test]
fn summary_agrees_with_records() {
    for map in ["corridor_g2.map", "corridor_obstacle.map", "corridor_intruder.map", "expected_failure/thin_edge.map"] {
        let result = run(&scenario(map), &mut Unsupervised);
        let s = &result.summary;
        let recs = &result.records;
        assert_eq!(s.ticks, recs.len() as u64, "{map}");
        let elapsed: f64 = recs.iter().map(|r| r.elapsed).sum();
        assert!((elapsed - s.sim_duration).abs() < 1e-6, "{map}");
        assert_eq!(s.collisions as usize, recs.iter().filter(|r| r.collision).count(), "{map}");
        assert_eq!(s.collisions > 0, s.outcome == RunOutcome::Collision, "{map}");
        let alarms = recs
            .iter()
            .flat_map(|r| &r.events)
            .filter(|e| matches!(e, PatrolEvent::AlarmRaised { .. }))
            .count();
        assert_eq!(alarms > 0, s.outcome == RunOutcome::Alarm, "{map}");
        for w in recs.windows(2) {
            assert!((w[1].t - (w[0].t + w[0].elapsed)).abs() < 1e-9);
            assert_eq!(w[1].frame.pose, w[0].end_pose);
        }
    }
}

#[test]
fn traces_are_byte_identical_across_runs_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    let map = root().join("maps/corridor_obstacle.map");
    std::fs::write(&cfg, format!("map = {:?}\nseed = 9\n[robot]\nsonar_noise = 1.5\n", map)).unwrap();
    let sc = Scenario::load(&cfg).unwrap();
    let header = TraceHeader::new(&sc, TraceKind::Run, false);
    let a = trace::regenerate(&sc, &header);
    let b = trace::regenerate(&sc, &header);
    assert_eq!(a, b);
    assert!(trace::replay(&a).unwrap().identical());

    let parsed = trace::parse(&a).unwrap();
    let result = run(&sc, &mut Unsupervised);
    assert_eq!(parsed.rows.len(), result.records.len());
    for (row, rec) in parsed.rows.iter().zip(&result.records) {
        assert_eq!(row.t, rec.t);
        assert_eq!(row.pose, rec.frame.pose);
        assert_eq!(row.command, rec.command);
        assert_eq!(row.left, rec.frame.sonar.left);
        assert_eq!(row.wall, rec.wall_distance);
    }

    let mut other = sc.clone();
    other.seed = 10;
    let c = trace::regenerate(&other, &header);
    assert!(!trace::compare(&a, &c).identical(), "seed drives the noise");
}

#[test]
fn tampered_trace_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(&cfg, format!("map = {:?}\n", root().join("maps/corridor_g2.map"))).unwrap();
    let sc = Scenario::load(&cfg).unwrap();
    let text = trace::regenerate(&sc, &TraceHeader::new(&sc, TraceKind::Run, false));
    let tampered = text.replacen("tick=5 t=", "tick=5 t=9", 1);
    let report = trace::replay(&tampered).unwrap();
    assert_eq!(report.mismatch.unwrap().0, 8);
}

#[test]
fn batch_budget_and_bound() {
    let mut sc = scenario("corridor_g2.map");
    let one = run_batch(&sc, Some(1), &mut Unsupervised, |_, _| {});
    assert_eq!(one.completed, 1);
    assert_eq!(one.loops.len(), 1);
    assert_eq!(one.outcome, RunOutcome::LoopComplete);

    sc.robot.battery = 0.0;
    let empty = run_batch(&sc, None, &mut Unsupervised, |_, _| {});
    assert_eq!(empty.completed, 0);
    assert_eq!(empty.outcome, RunOutcome::BatteryOut);
}

#[test]
fn batch_loops_share_one_battery() {
    let mut sc = scenario("corridor_g2.map");
    sc.robot.battery = 1500.0;
    let mut seen = Vec::new();
    let b = run_batch(&sc, None, &mut Unsupervised, |s, recs| seen.push((s.loops_completed, recs.len())));
    assert_eq!(b.completed, 2);
    assert_eq!(b.outcome, RunOutcome::BatteryOut);
    assert_eq!(b.battery_remaining, 0.0);
    assert!((b.total_time - 1500.0).abs() < 1e-6, "{}", b.total_time);
    assert_eq!(seen.iter().map(|s| s.0).collect::<Vec<_>>(), vec![1, 2, 2]);
}

/// Scripted directives keyed by tick number.
struct Script {
    at: Vec<(u64, Directive)>,
    tick: u64,
    hold: bool,
    log: Vec<TickRecord>,
}

impl Script {
    fn new(at: Vec<(u64, Directive)>, hold: bool) -> Self {
        Self { at, tick: 0, hold, log: Vec::new() }
    }
}

impl Supervisor for Script {
    fn poll(&mut self, _t: f64) -> Vec<Directive> {
        let now = self.tick;
        self.tick += 1;
        self.at.iter().filter(|(k, _)| *k == now).map(|(_, d)| *d).collect()
    }

    fn record(&mut self, r: &TickRecord) {
        self.log.push(r.clone());
    }

    fn hold_on_alarm(&self) -> bool {
        self.hold
    }
}

#[test]
fn manual_override_and_resume() {
    let mut sc = scenario("corridor_g2.map");
    sc.duration_limit = 100.0;
    let mut s = Script::new(
        vec![
            (3, Directive::Halt),
            (3, Directive::Drive(MotionCommand::Turn(-10.0))),
            (4, Directive::Drive(MotionCommand::Turn(10.0))),
            (4, Directive::Drive(MotionCommand::Forward(0.0))),
            (8, Directive::Resume),
            (8, Directive::Drive(MotionCommand::Forward(30.0))),
        ],
        false,
    );
    let r = run(&sc, &mut s);
    let src: Vec<CommandSource> = r.records[3..10].iter().map(|r| r.source).collect();
    use CommandSource::*;
    assert_eq!(src, vec![Operator, Operator, Operator, Operator, Idle, Pilot, Pilot]);
    assert_eq!(r.records[3].command, MotionCommand::Stop);
    assert_eq!(r.records[4].command, MotionCommand::Turn(-10.0));
    assert_eq!(r.records[5].command, MotionCommand::Turn(10.0));
    assert_eq!(r.records[7].elapsed, 0.1);
    assert_eq!(r.records[8].mode, AgentMode::Patrol(Mode::Follow));
    assert!(r.records[8..].iter().all(|r| r.command != MotionCommand::Forward(30.0)), "drive ignored outside manual");
    assert_eq!(s.log.len(), r.records.len());
}

#[test]
fn alarm_ends_the_mission_unless_held() {
    let sc = scenario("corridor_intruder.map");
    let plain = run(&sc, &mut Unsupervised);
    assert_eq!(plain.summary.outcome, RunOutcome::Alarm);
    let last = plain.records.last().unwrap();
    assert_eq!(last.command, MotionCommand::Stop);
    assert_eq!(last.mode, AgentMode::Patrol(Mode::Alarm));

    let mut sc = sc;
    let alarm_tick = plain.records.len() as u64 - 1;
    sc.duration_limit = plain.summary.sim_duration + 20.0;
    let mut s = Script::new(vec![(alarm_tick + 50, Directive::Resume)], true);
    let held = run(&sc, &mut s);
    assert_eq!(held.summary.outcome, RunOutcome::Timeout);
    assert_eq!(held.summary.alarm, plain.summary.alarm);
    let after: Vec<&TickRecord> = held.records[alarm_tick as usize + 1..].iter().collect();
    assert!(after[..49].iter().all(|r| r.mode == AgentMode::Manual && r.command == MotionCommand::Stop));
    assert!(after[..49].iter().all(|r| r.events.is_empty()), "latched alarm does not repeat");
    // the person is still there after resuming, so the alarm fires again
    assert!(after[49].events.iter().any(|e| matches!(e, PatrolEvent::AlarmRaised { .. })));
}

#[test]
fn shipped_maps_never_collide() {
    for map in ["corridor_g2.map", "corridor_obstacle.map", "corridor_intruder.map"] {
        let r = run(&scenario(map), &mut Unsupervised);
        assert!(r.records.iter().all(|t| !t.collision), "{map}");
    }
}
