use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::WorldError;
use crate::geometry::{Circle, Polygon, Segment, Vec2};

/// Robot pose: position in cm, heading in degrees (clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Obstacle {
    Circle(Circle),
    Polygon(Polygon),
}

impl Obstacle {
    pub fn distance_to(&self, p: Vec2) -> f64 {
        match self {
            Obstacle::Circle(c) => c.distance_to(p),
            Obstacle::Polygon(poly) => poly.distance_to(p),
        }
    }

    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            Obstacle::Circle(c) => c.ray_hit(origin, dir),
            Obstacle::Polygon(poly) => poly.ray_hit(origin, dir),
        }
    }
}

/// Radius of the disc a person occupies, cm.
pub const HUMAN_RADIUS: f64 = 25.0;

/// A person standing at `position` during `[appear_time, appear_time + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanEvent {
    pub appear_time: f64,
    pub position: Vec2,
    pub duration: f64,
}

impl HumanEvent {
    pub fn is_active(&self, t: f64) -> bool {
        self.appear_time <= t && t < self.appear_time + self.duration
    }

    pub fn body(&self) -> Circle {
        Circle::new(self.position, HUMAN_RADIUS)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldMap {
    pub walls: Vec<Segment>,
    pub obstacles: Vec<Obstacle>,
    pub humans: Vec<HumanEvent>,
    pub start: Pose,
    pub meta: BTreeMap<String, String>,
}

impl WorldMap {
    pub fn name(&self) -> &str {
        self.meta.get("name").map_or("unnamed", String::as_str)
    }

    pub fn corridor_width(&self) -> Option<f64> {
        self.meta.get("corridor_width").and_then(|v| v.parse().ok())
    }

    pub fn active_humans(&self, t: f64) -> impl Iterator<Item = &HumanEvent> {
        self.humans.iter().filter(move |h| h.is_active(t))
    }

    /// Distance from `p` to the nearest wall, obstacle, or person active at `t`.
    pub fn clearance(&self, p: Vec2, t: f64) -> f64 {
        let walls = self.walls.iter().map(|w| w.distance_to(p));
        let obstacles = self.obstacles.iter().map(|o| o.distance_to(p));
        let humans = self.active_humans(t).map(|h| h.body().distance_to(p));
        walls
            .chain(obstacles)
            .chain(humans)
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `p` to the nearest wall segment.
    pub fn wall_distance(&self, p: Vec2) -> Option<(f64, usize)> {
        self.walls
            .iter()
            .enumerate()
            .map(|(i, w)| (w.distance_to(p), i))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// Distance from the pose to the nearest wall point on its left, the
    /// side the patrol follows. Falls back to the nearest wall overall when
    /// nothing lies to the left.
    pub fn followed_wall(&self, pose: Pose) -> Option<(f64, usize)> {
        let p = pose.position();
        let ahead = Vec2::from_heading(pose.heading);
        self.walls
            .iter()
            .enumerate()
            .filter(|(_, w)| ahead.cross(w.point_at(w.project(p)) - p) < 0.0)
            .map(|(i, w)| (w.distance_to(p), i))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .or_else(|| self.wall_distance(p))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Parses the line-oriented map format and validates the geometry.
    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let mut map = WorldMap::default();
        let mut start_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let keyword = words.next().expect("non-empty line");
            let syntax = |message: String| WorldError::Syntax {
                line: line_no,
                message,
            };
            if keyword == "meta" {
                let key = words
                    .next()
                    .ok_or_else(|| syntax("meta needs a key".into()))?;
                let value = words.collect::<Vec<_>>().join(" ");
                map.meta.insert(key.to_owned(), value);
                continue;
            }
            let nums = words
                .map(|w| {
                    w.parse::<f64>()
                        .map_err(|_| syntax(format!("`{w}` is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let arity = |n: usize| {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(syntax(format!("`{keyword}` takes {n} numbers, got {}", nums.len())))
                }
            };
            match keyword {
                "wall" => {
                    arity(4)?;
                    map.walls.push(Segment::new(
                        Vec2::new(nums[0], nums[1]),
                        Vec2::new(nums[2], nums[3]),
                    ));
                }
                "circle" => {
                    arity(3)?;
                    map.obstacles
                        .push(Obstacle::Circle(Circle::new(Vec2::new(nums[0], nums[1]), nums[2])));
                }
                "poly" => {
                    if nums.len() < 6 || nums.len() % 2 != 0 {
                        return Err(syntax(format!(
                            "`poly` takes an even count of at least 6 numbers, got {}",
                            nums.len()
                        )));
                    }
                    let vertices = nums.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
                    map.obstacles.push(Obstacle::Polygon(Polygon::new(vertices)));
                }
                "human" => {
                    arity(4)?;
                    map.humans.push(HumanEvent {
                        appear_time: nums[0],
                        position: Vec2::new(nums[1], nums[2]),
                        duration: nums[3],
                    });
                }
                "start" => {
                    arity(3)?;
                    if start_seen {
                        return Err(syntax("duplicate `start`".into()));
                    }
                    start_seen = true;
                    map.start = Pose::new(nums[0], nums[1], nums[2]);
                }
                other => return Err(syntax(format!("unknown entity `{other}`"))),
            }
        }
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let geometry = |entity: String, message: &str| WorldError::Geometry {
            entity,
            message: message.to_owned(),
        };
        for (i, w) in self.walls.iter().enumerate() {
            if !(w.a.is_finite() && w.b.is_finite()) {
                return Err(geometry(format!("wall #{}", i + 1), "non-finite coordinate"));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            match o {
                Obstacle::Circle(c) => {
                    let name = format!("circle #{}", i + 1);
                    if !c.center.is_finite() || !c.radius.is_finite() {
                        return Err(geometry(name, "non-finite coordinate"));
                    }
                    if c.radius <= 0.0 {
                        return Err(geometry(name, "radius must be positive"));
                    }
                }
                Obstacle::Polygon(p) => {
                    let name = format!("poly #{}", i + 1);
                    if p.vertices.iter().any(|v| !v.is_finite()) {
                        return Err(geometry(name, "non-finite coordinate"));
                    }
                    if !(p.area() > 0.0) {
                        return Err(geometry(name, "polygon has zero area"));
                    }
                }
            }
        }
        for (i, h) in self.humans.iter().enumerate() {
            let name = format!("human #{}", i + 1);
            if !(h.appear_time.is_finite() && h.position.is_finite() && h.duration.is_finite()) {
                return Err(geometry(name, "non-finite value"));
            }
            if h.appear_time < 0.0 || h.duration < 0.0 {
                return Err(geometry(name, "times must be non-negative"));
            }
        }
        let s = self.start;
        if !(s.x.is_finite() && s.y.is_finite() && s.heading.is_finite()) {
            return Err(geometry("start".into(), "non-finite pose"));
        }
        let p = s.position();
        if self.walls.iter().any(|w| w.distance_to(p) == 0.0) {
            return Err(geometry("start".into(), "start lies on a wall"));
        }
        if self.obstacles.iter().any(|o| o.distance_to(p) == 0.0) {
            return Err(geometry("start".into(), "start lies inside an obstacle"));
        }
        Ok(())
    }

    /// Serializes back to the map text format.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for WorldMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.meta {
            writeln!(f, "meta {k} {v}")?;
        }
        let s = self.start;
        writeln!(f, "start {} {} {}", s.x, s.y, s.heading)?;
        for w in &self.walls {
            writeln!(f, "wall {} {} {} {}", w.a.x, w.a.y, w.b.x, w.b.y)?;
        }
        for o in &self.obstacles {
            match o {
                Obstacle::Circle(c) => writeln!(f, "circle {} {} {}", c.center.x, c.center.y, c.radius)?,
                Obstacle::Polygon(p) => {
                    f.write_str("poly")?;
                    for v in &p.vertices {
                        write!(f, " {} {}", v.x, v.y)?;
                    }
                    writeln!(f)?;
                }
            }
        }
        for h in &self.humans {
            writeln!(
                f,
                "human {} {} {} {}",
                h.appear_time, h.position.x, h.position.y, h.duration
            )?;
        }
        Ok(())
    }
}
