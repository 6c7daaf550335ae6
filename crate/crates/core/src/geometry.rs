//! Planar geometry in centimetres.
//!
//! The world frame is a floor plan: x to the right, y downward. Headings are
//! degrees measured clockwise from +x, so a positive turn is a right turn.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector for a heading in degrees.
    pub fn from_heading(deg: f64) -> Self {
        let r = deg.to_radians();
        Self::new(r.cos(), r.sin())
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Self) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Heading of this vector in degrees, in (-180, 180].
    pub fn heading(self) -> f64 {
        self.y.atan2(self.x).to_degrees()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle in degrees into (-180, 180].
pub fn normalize_deg(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a <= -180.0 {
        a += 360.0;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Parameter in [0, 1] of the point on the segment closest to `p`.
    pub fn project(&self, p: Vec2) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(d) / len2).clamp(0.0, 1.0)
    }

    pub fn point_at(&self, t: f64) -> Vec2 {
        self.a + (self.b - self.a) * t
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.point_at(self.project(p)).distance(p)
    }

    /// Distance along the ray `origin + t·dir` (|dir| = 1) to this segment.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let e = self.b - self.a;
        let denom = dir.cross(e);
        let w = self.a - origin;
        if denom.abs() < 1e-12 {
            // Parallel; a collinear overlap is hit at its nearest endpoint.
            if w.cross(dir).abs() > 1e-9 {
                return None;
            }
            let ta = w.dot(dir);
            let tb = (self.b - origin).dot(dir);
            let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
            return if hi < 0.0 { None } else { Some(lo.max(0.0)) };
        }
        let t = w.cross(e) / denom;
        let u = w.cross(dir) / denom;
        (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t)
    }

    /// True if the closed segments share a point.
    pub fn intersects(&self, other: &Segment) -> bool {
        let d1 = orient(other.a, other.b, self.a);
        let d2 = orient(other.a, other.b, self.b);
        let d3 = orient(self.a, self.b, other.a);
        let d4 = orient(self.a, self.b, other.b);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && on_segment(other, self.a))
            || (d2 == 0.0 && on_segment(other, self.b))
            || (d3 == 0.0 && on_segment(self, other.a))
            || (d4 == 0.0 && on_segment(self, other.b))
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(s: &Segment, p: Vec2) -> bool {
    p.x >= s.a.x.min(s.b.x)
        && p.x <= s.a.x.max(s.b.x)
        && p.y >= s.a.y.min(s.b.y)
        && p.y <= s.a.y.max(s.b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub const fn new(center: Vec2, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Distance from `p` to the circle boundary, zero inside.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        (self.center.distance(p) - self.radius).max(0.0)
    }

    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let oc = origin - self.center;
        let b = oc.dot(dir);
        let c = oc.dot(oc) - self.radius * self.radius;
        if c <= 0.0 {
            return Some(0.0);
        }
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let t = -b - disc.sqrt();
        (t >= 0.0).then_some(t)
    }
}

/// A simple polygon given by its vertices in order (either winding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        Self { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Unsigned shoelace area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let twice: f64 = (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum();
        0.5 * twice.abs()
    }

    /// Even-odd containment test.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        for e in self.edges() {
            if (e.a.y > p.y) != (e.b.y > p.y) {
                let x = e.a.x + (p.y - e.a.y) / (e.b.y - e.a.y) * (e.b.x - e.a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|e| e.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        if self.contains(origin) {
            return Some(0.0);
        }
        self.edges()
            .filter_map(|e| e.ray_hit(origin, dir))
            .fold(None, |best, t| Some(best.map_or(t, |b: f64| b.min(t))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headings_are_clockwise_in_a_y_down_frame() {
        let east = Vec2::from_heading(0.0);
        let south = Vec2::from_heading(90.0);
        assert!((east.x - 1.0).abs() < 1e-12 && east.y.abs() < 1e-12);
        assert!(south.x.abs() < 1e-12 && (south.y - 1.0).abs() < 1e-12);
        assert!((Vec2::new(0.0, -1.0).heading() + 90.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_wraps() {
        assert_eq!(normalize_deg(190.0), -170.0);
        assert_eq!(normalize_deg(-180.0), 180.0);
        assert_eq!(normalize_deg(720.0), 0.0);
    }

    #[test]
    fn ray_hits_perpendicular_wall() {
        let wall = Segment::new(Vec2::new(-100.0, 30.0), Vec2::new(100.0, 30.0));
        let t = wall.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        assert!((t - 30.0).abs() < 1e-12);
        assert!(wall.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(0.0, -1.0)).is_none());
        assert!(wall.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)).is_none());
    }

    #[test]
    fn ray_hits_circle_front_face() {
        let c = Circle::new(Vec2::new(50.0, 0.0), 10.0);
        let t = c.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)).unwrap();
        assert!((t - 40.0).abs() < 1e-12);
        assert!(c.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(-1.0, 0.0)).is_none());
        assert_eq!(c.ray_hit(Vec2::new(50.0, 0.0), Vec2::new(1.0, 0.0)), Some(0.0));
    }

    #[test]
    fn segment_intersection_cases() {
        let s = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0));
        assert!(s.intersects(&Segment::new(Vec2::new(0.0, 10.0), Vec2::new(10.0, 0.0))));
        assert!(!s.intersects(&Segment::new(Vec2::new(0.0, 1.0), Vec2::new(9.0, 10.0))));
        // touching at an endpoint
        assert!(s.intersects(&Segment::new(Vec2::new(10.0, 10.0), Vec2::new(20.0, 0.0))));
    }

    #[test]
    fn polygon_area_and_containment() {
        let sq = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 10.0),
            Vec2::new(0.0, 10.0),
        ]);
        assert_eq!(sq.area(), 100.0);
        assert!(sq.contains(Vec2::new(5.0, 5.0)));
        assert!(!sq.contains(Vec2::new(15.0, 5.0)));
        assert!((sq.distance_to(Vec2::new(15.0, 5.0)) - 5.0).abs() < 1e-12);
        let t = sq.ray_hit(Vec2::new(-5.0, 5.0), Vec2::new(1.0, 0.0)).unwrap();
        assert!((t - 5.0).abs() < 1e-12);
    }
}
