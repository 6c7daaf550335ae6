use std::path::PathBuf;

use patrol_core::world::*;
use proptest::prelude::*;

fn load(name: &str) -> WorldMap {
    WorldMap::load(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../maps").join(name)).unwrap()
}

fn command() -> impl Strategy<Value = MotionCommand> {
    prop_oneof![
        (-180.0..=180.0f64).prop_map(MotionCommand::Turn),
        (0.0..80.0f64).prop_map(MotionCommand::Forward),
        Just(MotionCommand::Stop),
    ]
}

fn map_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "corridor_g2.map",
        "corridor_obstacle.map",
        "corridor_intruder.map",
        "expected_failure/thin_edge.map",
    ])
}

struct Trajectory {
    states: Vec<RobotState>,
    steps: Vec<StepOutcome>,
}

fn drive(map: &WorldMap, battery: f64, cmds: &[MotionCommand]) -> Trajectory {
    let params = RobotParams { battery, ..RobotParams::default() };
    let mut state = RobotState::new(map.start, params).unwrap();
    let mut t = 0.0;
    let mut states = vec![state.clone()];
    let mut steps = Vec::new();
    for &c in cmds {
        if state.battery_remaining <= 0.0 {
            break;
        }
        let out = step(map, &state, c, t).unwrap();
        t += out.elapsed;
        state = out.state.clone();
        states.push(state.clone());
        steps.push(out);
    }
    Trajectory { states, steps }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn stepping_is_deterministic(name in map_name(), cmds in prop::collection::vec(command(), 1..60)) {
        let map = load(name);
        let a = drive(&map, 5400.0, &cmds);
        let b = drive(&map, 5400.0, &cmds);
        prop_assert_eq!(a.states, b.states);
    }

    #[test]
    fn robot_never_overlaps_geometry(name in map_name(), cmds in prop::collection::vec(command(), 1..80)) {
        let map = load(name);
        let tr = drive(&map, 5400.0, &cmds);
        let mut t = 0.0;
        for (w, out) in tr.states.windows(2).zip(&tr.steps) {
            let (a, b) = (w[0].pose.position(), w[1].pose.position());
            let len = a.distance(b);
            let n = len.ceil() as usize;
            for k in 0..=n {
                let p = a + (b - a) * (k as f64 / n.max(1) as f64);
                prop_assert!(map.clearance(p, t) > w[0].params.body_radius - 0.05,
                    "overlap at {:?} (clearance {})", p, map.clearance(p, t));
            }
            t += out.elapsed;
        }
    }

    #[test]
    fn sonar_stays_clamped(name in map_name(), x in 0.0..1940.0f64, y in 0.0..1440.0f64, h in -180.0..180.0f64, t in 0.0..1000.0f64, seed in any::<u64>()) {
        let map = load(name);
        let state = RobotState::new(Pose::new(x, y, h), RobotParams::default()).unwrap();
        let f = sense_with_noise(&map, &state, t, SonarNoise { seed, amplitude: 3.0 });
        for v in [f.sonar.left, f.sonar.front, f.sonar.right] {
            prop_assert!((4.0..=255.0).contains(&v), "{}", v);
        }
    }

    #[test]
    fn energy_and_odometer_accounting(
        name in map_name(),
        battery in 1.0..200.0f64,
        cmds in prop::collection::vec(command(), 1..80),
    ) {
        let map = load(name);
        let tr = drive(&map, battery, &cmds);
        let last = tr.states.last().unwrap();
        let spent: f64 = tr.steps.iter().map(|s| s.elapsed).sum();
        prop_assert!((spent - (battery - last.battery_remaining)).abs() <= 1e-9 * tr.steps.len().max(1) as f64);
        prop_assert!(last.battery_remaining >= 0.0);

        let mut travelled = 0.0;
        for w in tr.states.windows(2) {
            let d = w[0].pose.position().distance(w[1].pose.position());
            travelled += d;
            if w[0].pose.heading != w[1].pose.heading {
                prop_assert_eq!(d, 0.0, "turns happen in place");
            }
        }
        prop_assert!((last.odometer - travelled).abs() < 1e-6, "{} vs {}", last.odometer, travelled);
    }
}

#[test]
fn default_corridor_geometry() {
    let map = load("corridor_g2.map");
    let len = |w: &patrol_core::geometry::Segment| w.length();
    // inner ring: the four sides of the 1500 x 1000 rectangle minus the doorway
    let inner: f64 = map
        .walls
        .iter()
        .filter(|w| [w.a, w.b].iter().all(|p| p.x >= 200.0 && p.x <= 1740.0 && p.y >= 200.0 && p.y <= 1240.0))
        .map(len)
        .sum();
    assert!((inner + 60.0 - 5000.0).abs() < 1e-9, "inner perimeter {inner} + gap");
    assert_eq!(map.corridor_width(), Some(220.0));
    let outer_to_inner = 1440.0 - 1220.0;
    assert_eq!(outer_to_inner, 220.0);
    let start = map.start.position();
    assert!(map.clearance(start, 0.0) > 18.0);
}
