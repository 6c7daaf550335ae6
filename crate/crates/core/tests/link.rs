use std::net::TcpListener;
use std::path::PathBuf;
use std::thread;

use patrol_core::link::{AgentLink, LinkConfig};
use patrol_core::pilot::AlarmCause;
use patrol_core::protocol::*;
use patrol_core::scenario::{run, CommandSource, RunOutcome, Scenario};
use patrol_core::world::{MotionCommand, WorldMap};

fn scenario(map: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../maps").join(map);
    Scenario::with_map(WorldMap::load(path).unwrap()).unwrap()
}

fn hello() -> Hello {
    Hello { agent_id: "test-agent".into(), scenario: "t".into(), map: "m".into() }
}

/// Accepts one agent, optionally sends `commands`, records every message,
/// and answers Bye with Bye.
fn fake_center(commands: Vec<OperatorCommand>) -> (String, thread::JoinHandle<Vec<Message>>) {
    scripted_center(commands, None)
}

/// Like [`fake_center`], plus a second batch sent once the ack for
/// command `after` arrives.
fn scripted_center(
    commands: Vec<OperatorCommand>,
    mut later: Option<(u64, Vec<OperatorCommand>)>,
) -> (String, thread::JoinHandle<Vec<Message>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let h = thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        for c in commands {
            write_frame(&mut s, &Message::Command(c)).unwrap();
        }
        let mut got = Vec::new();
        while let Ok(Some(m)) = read_frame(&mut s) {
            if let Message::CommandAck(a) = &m {
                if later.as_ref().is_some_and(|(id, _)| *id == a.id) {
                    for c in later.take().unwrap().1 {
                        write_frame(&mut s, &Message::Command(c)).unwrap();
                    }
                }
            }
            let bye = matches!(m, Message::Bye(_));
            got.push(m);
            if bye {
                write_frame(&mut s, &Message::Bye(Bye { reason: "flushed".into() })).unwrap();
                break;
            }
        }
        got
    });
    (addr, h)
}

#[test]
fn live_intruder_run_streams_telemetry_and_the_alarm() {
    let mut sc = scenario("corridor_intruder.map");
    sc.duration_limit = 400.0;
    let (addr, center) = fake_center(vec![]);
    let cfg = LinkConfig { buffer: 1 << 20, ..LinkConfig::default() };
    let mut link = AgentLink::connect(&addr, hello(), cfg).unwrap();
    let result = run(&sc, &mut link);
    assert_eq!(link.dropped(), 0);
    let report = link.finish("done");
    assert!(report.confirmed);
    let got = center.join().unwrap();

    // The session is held after the alarm instead of ending.
    assert_eq!(result.summary.outcome, RunOutcome::Timeout);
    let cause = result.summary.alarm.expect("alarm raised");

    assert_eq!(got.first(), Some(&Message::Hello(hello())));
    assert!(matches!(got.last(), Some(Message::Bye(_))));
    let tel: Vec<&TelemetryFrame> = got
        .iter()
        .filter_map(|m| match m {
            Message::Telemetry(t) => Some(t),
            _ => None,
        })
        .collect();
    for (i, f) in tel.iter().enumerate() {
        assert_eq!(f.seq, i as u64, "gapless seq");
        assert!((f.t_sim - i as f64 * 0.1).abs() < 1e-6, "10 Hz sim time at {i}: {}", f.t_sim);
    }
    let duration = result.summary.sim_duration;
    assert!((tel.len() as f64 - duration * 10.0).abs() <= 1.0, "{} frames over {duration} s", tel.len());
    let videos = got.iter().filter(|m| matches!(m, Message::Video(_))).count();
    assert!((videos as f64 - duration * 15.0).abs() <= 1.0, "{videos} video frames over {duration} s");

    let alarms: Vec<&AlarmSignal> = got
        .iter()
        .filter_map(|m| match m {
            Message::Alarm(a) => Some(a),
            _ => None,
        })
        .collect();
    assert_eq!(alarms.len(), 1, "latched alarm is sent once");
    assert_eq!(alarms[0].cause, cause);
    // cause matches the HMS bits of the frame that triggered it
    let trigger = result.records.iter().find(|r| r.t == alarms[0].t_sim).unwrap();
    match cause {
        AlarmCause::HmsLeft => assert!(trigger.frame.hms.left),
        AlarmCause::HmsRight => assert!(trigger.frame.hms.right && !trigger.frame.hms.left),
    }
}

#[test]
fn tiny_buffer_drops_telemetry_but_never_the_alarm() {
    let mut sc = scenario("corridor_intruder.map");
    sc.duration_limit = 400.0;
    let (addr, center) = fake_center(vec![]);
    let cfg = LinkConfig { buffer: 4, ..LinkConfig::default() };
    let mut link = AgentLink::connect(&addr, hello(), cfg).unwrap();
    let result = run(&sc, &mut link);
    let report = link.finish("done");
    let got = center.join().unwrap();
    assert!(result.summary.alarm.is_some());
    assert!(report.dropped > 0);
    assert_eq!(got.iter().filter(|m| matches!(m, Message::Alarm(_))).count(), 1);
    let seqs: Vec<u64> = got
        .iter()
        .filter_map(|m| match m {
            Message::Telemetry(t) => Some(t.seq),
            _ => None,
        })
        .collect();
    assert!(seqs.windows(2).all(|w| w[0] < w[1]), "order kept, gaps visible");
}

#[test]
fn operator_commands_take_priority_over_the_pilot() {
    let mut sc = scenario("corridor_g2.map");
    sc.duration_limit = 60.0;
    let cmd = |id, kind| OperatorCommand { id, kind, issued_at: 0, operator_id: "op".into() };
    let (addr, center) = scripted_center(
        vec![
            cmd(1, CommandKind::ManualForward(50.0)),
            cmd(2, CommandKind::Stop),
            cmd(3, CommandKind::ManualForward(50.0)),
        ],
        Some((3, vec![cmd(4, CommandKind::StartPatrol), cmd(5, CommandKind::StartPatrol)])),
    );
    let cfg = LinkConfig { buffer: 1 << 20, pace: Some(200.0), ..LinkConfig::default() };
    let mut link = AgentLink::connect(&addr, hello(), cfg).unwrap();
    let result = run(&sc, &mut link);
    let report = link.finish("done");
    let got = center.join().unwrap();

    let verdicts: Vec<(u64, bool)> = report.commands.iter().map(|c| (c.command.id, c.accepted)).collect();
    assert_eq!(verdicts, vec![(1, false), (2, true), (3, true), (4, true), (5, false)]);
    let acks: Vec<(u64, bool)> = got
        .iter()
        .filter_map(|m| match m {
            Message::CommandAck(a) => Some((a.id, a.accepted)),
            _ => None,
        })
        .collect();
    assert_eq!(acks, verdicts);

    let op: Vec<_> = result.records.iter().filter(|r| r.source == CommandSource::Operator).collect();
    assert!(op.iter().any(|r| r.command == MotionCommand::Forward(50.0)), "operator move executed");
    assert!(op.iter().any(|r| r.command == MotionCommand::Stop));
    assert!(result.records.iter().any(|r| r.source == CommandSource::Pilot && r.tick > op[0].tick));
}
