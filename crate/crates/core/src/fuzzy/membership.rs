use std::fmt;

use serde::{Deserialize, Serialize};

use super::FuzzyError;

/// Shape family of a piecewise-linear fuzzy set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Triangle,
    Trapezoid,
}

impl ShapeKind {
    fn arity(self) -> usize {
        match self {
            ShapeKind::Triangle => 3,
            ShapeKind::Trapezoid => 4,
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeKind::Triangle => f.write_str("triangle"),
            ShapeKind::Trapezoid => f.write_str("trapezoid"),
        }
    }
}

/// A triangular or trapezoidal membership function.
///
/// Internally every shape is stored as a trapezoid `(a, b, c, d)`; a triangle
/// `(a, b, c)` is the trapezoid `(a, b, b, c)`. The degree is 1 on the core
/// `[b, c]`, 0 outside `[a, d]` and linear on the two shoulders. Equal adjacent
/// breakpoints make a shoulder vertical, which evaluates as a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMembership", into = "RawMembership")]
pub struct MembershipFunction {
    kind: ShapeKind,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMembership {
    kind: ShapeKind,
    points: Vec<f64>,
}

impl TryFrom<RawMembership> for MembershipFunction {
    type Error = FuzzyError;

    fn try_from(raw: RawMembership) -> Result<Self, Self::Error> {
        MembershipFunction::new(raw.kind, &raw.points)
    }
}

impl From<MembershipFunction> for RawMembership {
    fn from(mf: MembershipFunction) -> Self {
        RawMembership {
            kind: mf.kind,
            points: mf.breakpoints(),
        }
    }
}

impl MembershipFunction {
    pub fn new(kind: ShapeKind, points: &[f64]) -> Result<Self, FuzzyError> {
        let malformed = || FuzzyError::MalformedBreakpoints {
            kind,
            points: points.to_vec(),
        };
        if points.len() != kind.arity() {
            return Err(malformed());
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[0] > w[1]) {
            return Err(malformed());
        }
        let (a, b, c, d) = match kind {
            ShapeKind::Triangle => (points[0], points[1], points[1], points[2]),
            ShapeKind::Trapezoid => (points[0], points[1], points[2], points[3]),
        };
        Ok(Self { kind, a, b, c, d })
    }

    pub fn triangle(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        Self::new(ShapeKind::Triangle, &[a, b, c])
    }

    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        Self::new(ShapeKind::Trapezoid, &[a, b, c, d])
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    /// Breakpoints as declared (3 for a triangle, 4 for a trapezoid).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            ShapeKind::Triangle => vec![self.a, self.b, self.d],
            ShapeKind::Trapezoid => vec![self.a, self.b, self.c, self.d],
        }
    }

    /// Closed interval outside of which the degree is zero.
    pub fn support(&self) -> (f64, f64) {
        (self.a, self.d)
    }

    /// Closed interval on which the degree is one.
    pub fn core(&self) -> (f64, f64) {
        (self.b, self.c)
    }

    /// Steepest shoulder slope; infinite for a vertical shoulder.
    pub fn max_slope(&self) -> f64 {
        let rise = |lo: f64, hi: f64| if hi > lo { 1.0 / (hi - lo) } else { f64::INFINITY };
        rise(self.a, self.b).max(rise(self.c, self.d))
    }

    pub fn degree(&self, x: f64) -> f64 {
        if x < self.a || x > self.d {
            0.0
        } else if x >= self.b && x <= self.c {
            1.0
        } else if x < self.b {
            // a <= x < b, so b > a
            (x - self.a) / (self.b - self.a)
        } else {
            // c < x <= d, so d > c
            (self.d - x) / (self.d - self.c)
        }
    }
}
