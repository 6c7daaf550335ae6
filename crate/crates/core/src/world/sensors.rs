use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Pose, RobotState, WorldError, WorldMap, HMS_LEFT, HMS_RIGHT, SONAR_FRONT, SONAR_LEFT, SONAR_RIGHT};
use crate::geometry::{normalize_deg, Segment, Vec2};

pub const SONAR_MIN: f64 = 4.0;
/// Reading reported when nothing echoes within range.
pub const SONAR_NO_ECHO: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SonarTriple {
    pub left: f64,
    pub front: f64,
    pub right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HmsPair {
    pub left: bool,
    pub right: bool,
}

impl HmsPair {
    pub fn any(&self) -> bool {
        self.left || self.right
    }
}

/// One tick's sensor snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub t: f64,
    pub sonar: SonarTriple,
    pub hms: HmsPair,
    pub battery_remaining: f64,
    /// Ground truth, for logging only.
    pub pose: Pose,
}

/// Seeded sonar jitter. The perturbation is a pure function of
/// `(seed, t, mount)`, so sensing stays deterministic for a given state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SonarNoise {
    pub seed: u64,
    pub amplitude: f64,
}

impl SonarNoise {
    fn sample(&self, t: f64, mount: usize) -> f64 {
        if self.amplitude <= 0.0 {
            return 0.0;
        }
        let key = self.seed ^ t.to_bits().rotate_left(17) ^ (mount as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.random_range(-self.amplitude..=self.amplitude)
    }
}

fn beam_origin(state: &RobotState, axis_deg: f64) -> Vec2 {
    state.pose.position() + Vec2::from_heading(axis_deg) * state.params.body_radius
}

fn nearest_hit(map: &WorldMap, origin: Vec2, dir: Vec2, t: f64) -> Option<f64> {
    let walls = map.walls.iter().filter_map(|w| w.ray_hit(origin, dir));
    let obstacles = map.obstacles.iter().filter_map(|o| o.ray_hit(origin, dir));
    let humans = map
        .active_humans(t)
        .filter_map(|h| h.body().ray_hit(origin, dir));
    walls
        .chain(obstacles)
        .chain(humans)
        .fold(None, |best, d| Some(best.map_or(d, |b: f64| b.min(d))))
}

/// Fan-beam ultrasonic range from the robot perimeter, without noise.
///
/// `rays_per_beam` rays are spread evenly across the cone; the reading is the
/// shortest hit, clamped to `[4, 255]`, and 255 when nothing is hit within
/// 255 cm.
pub fn sonar_read(map: &WorldMap, state: &RobotState, mount: usize, t: f64) -> Result<f64, WorldError> {
    let m = state
        .params
        .sonar
        .get(mount)
        .ok_or(WorldError::NoSuchMount(mount))?;
    let axis = state.pose.heading + m.angle;
    let origin = beam_origin(state, axis);
    let n = state.params.rays_per_beam;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let offset = if n == 1 {
            0.0
        } else {
            -m.half_width + 2.0 * m.half_width * i as f64 / (n - 1) as f64
        };
        if let Some(d) = nearest_hit(map, origin, Vec2::from_heading(axis + offset), t) {
            best = best.min(d);
        }
    }
    Ok(if best > SONAR_NO_ECHO {
        SONAR_NO_ECHO
    } else {
        best.max(SONAR_MIN)
    })
}

fn noisy_sonar(map: &WorldMap, state: &RobotState, mount: usize, t: f64, noise: SonarNoise) -> Result<f64, WorldError> {
    let clean = sonar_read(map, state, mount, t)?;
    if clean >= SONAR_NO_ECHO {
        return Ok(clean);
    }
    Ok((clean + noise.sample(t, mount)).clamp(SONAR_MIN, SONAR_NO_ECHO - 1.0))
}

/// Human-motion sensor: true if some person active at `t` is within range,
/// inside the field of view, and not hidden behind a wall.
pub fn hms_read(map: &WorldMap, state: &RobotState, mount: usize, t: f64) -> Result<bool, WorldError> {
    let m = state
        .params
        .hms
        .get(mount)
        .ok_or(WorldError::NoSuchMount(mount))?;
    let here = state.pose.position();
    let axis = state.pose.heading + m.angle;
    Ok(map.active_humans(t).any(|h| {
        let to = h.position - here;
        if to.norm() > m.range {
            return false;
        }
        if normalize_deg(to.heading() - axis).abs() > m.half_width {
            return false;
        }
        let sight = Segment::new(here, h.position);
        !map.walls.iter().any(|w| w.intersects(&sight))
    }))
}

pub fn sense(map: &WorldMap, state: &RobotState, t: f64) -> SensorFrame {
    sense_with_noise(map, state, t, SonarNoise::default())
}

pub fn sense_with_noise(map: &WorldMap, state: &RobotState, t: f64, noise: SonarNoise) -> SensorFrame {
    let sonar = |i| noisy_sonar(map, state, i, t, noise).expect("built-in mount index");
    let hms = |i| hms_read(map, state, i, t).expect("built-in mount index");
    SensorFrame {
        t,
        sonar: SonarTriple {
            left: sonar(SONAR_LEFT),
            front: sonar(SONAR_FRONT),
            right: sonar(SONAR_RIGHT),
        },
        hms: HmsPair {
            left: hms(HMS_LEFT),
            right: hms(HMS_RIGHT),
        },
        battery_remaining: state.battery_remaining,
        pose: state.pose,
    }
}
