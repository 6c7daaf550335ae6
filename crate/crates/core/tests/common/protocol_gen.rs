//! Generators for every protocol message type.

#![allow(dead_code)]

use patrol_core::pilot::{AgentMode, AlarmCause, Mode};
use patrol_core::protocol::*;
use patrol_core::world::{HmsPair, Pose, SonarTriple};
use proptest::prelude::*;

pub fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        Just(0.0),
        Just(-0.0),
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ]
}

pub fn pose() -> impl Strategy<Value = Pose> {
    (finite(), finite(), finite()).prop_map(|(x, y, h)| Pose::new(x, y, h))
}

pub fn sonar() -> impl Strategy<Value = f64> {
    prop_oneof![4.0..=255.0f64, Just(255.0), Just(4.0)]
}

pub fn mode() -> impl Strategy<Value = AgentMode> {
    prop_oneof![
        Just(AgentMode::Manual),
        prop::sample::select(vec![
            Mode::Follow,
            Mode::Avoid,
            Mode::Done,
            Mode::Alarm,
            Mode::BatteryOut,
        ])
        .prop_map(AgentMode::Patrol),
    ]
}

pub fn text() -> impl Strategy<Value = String> {
    prop_oneof![".*", "[ =%\\n\\r\\ta-z]{0,20}"]
}

pub fn telemetry() -> impl Strategy<Value = Message> {
    (
        any::<u64>(),
        finite(),
        pose(),
        (sonar(), sonar(), sonar()),
        (any::<bool>(), any::<bool>()),
        0.0..1e5f64,
        mode(),
        0.0..1e7f64,
    )
        .prop_map(|(seq, t_sim, pose, (l, f, r), (hl, hr), battery, mode, odo)| {
            Message::Telemetry(TelemetryFrame {
                seq,
                t_sim,
                pose,
                sonar: SonarTriple { left: l, front: f, right: r },
                hms: HmsPair { left: hl, right: hr },
                battery_remaining: battery,
                mode,
                odometer: odo,
            })
        })
}

pub fn video() -> impl Strategy<Value = Message> {
    (any::<u64>(), finite(), prop::collection::vec(any::<u8>(), 0..600)).prop_map(|(seq, t, payload)| {
        Message::Video(VideoFrameStub {
            seq,
            t_sim: t,
            width: VIDEO_WIDTH,
            height: VIDEO_HEIGHT,
            payload,
        })
    })
}

pub fn alarm() -> impl Strategy<Value = Message> {
    (finite(), any::<bool>(), pose()).prop_map(|(t, left, pose)| {
        Message::Alarm(AlarmSignal {
            t_sim: t,
            cause: if left { AlarmCause::HmsLeft } else { AlarmCause::HmsRight },
            pose,
        })
    })
}

pub fn command_kind() -> impl Strategy<Value = CommandKind> {
    prop_oneof![
        Just(CommandKind::StartPatrol),
        Just(CommandKind::Stop),
        Just(CommandKind::AckAlarm),
        (-180.0..=180.0f64).prop_map(CommandKind::ManualTurn),
        (0.0..=MANUAL_FORWARD_MAX).prop_map(CommandKind::ManualForward),
        (-180.0..=180.0f64).prop_map(CommandKind::CameraPan),
    ]
}

pub fn command() -> impl Strategy<Value = Message> {
    (any::<u64>(), command_kind(), any::<u64>(), text()).prop_map(|(id, kind, issued_at, operator_id)| {
        Message::Command(OperatorCommand { id, kind, issued_at, operator_id })
    })
}

pub fn hello() -> impl Strategy<Value = Message> {
    (text(), text(), text()).prop_map(|(agent_id, scenario, map)| Message::Hello(Hello { agent_id, scenario, map }))
}

pub fn bye() -> impl Strategy<Value = Message> {
    text().prop_map(|reason| Message::Bye(Bye { reason }))
}

pub fn ack() -> impl Strategy<Value = Message> {
    (any::<u64>(), any::<bool>(), text())
        .prop_map(|(id, accepted, reason)| Message::CommandAck(CommandAck { id, accepted, reason }))
}

pub fn any_message() -> impl Strategy<Value = Message> {
    prop_oneof![telemetry(), video(), alarm(), command(), hello(), bye(), ack()]
}
