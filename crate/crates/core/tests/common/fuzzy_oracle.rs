//! Brute-force reference for the avoidance controller, written from the
//! reference term shapes and rule table without touching the crate's fuzzy
//! code: all nine rules are evaluated explicitly, the clipped consequents
//! are combined on a 0.001° grid, and the centroid is taken directly.

#![allow(dead_code)]

fn trap(x: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    if x < a || x > d {
        0.0
    } else if x >= b && x <= c {
        1.0
    } else if x < b {
        (x - a) / (b - a)
    } else {
        (d - x) / (d - c)
    }
}

fn tri(x: f64, a: f64, b: f64, c: f64) -> f64 {
    trap(x, a, b, b, c)
}

/// (near, medium, far) for a distance in cm; readings outside [4, 100] are
/// clamped first.
pub fn distance_terms(cm: f64) -> [f64; 3] {
    let x = cm.clamp(4.0, 100.0);
    [
        trap(x, 4.0, 4.0, 25.0, 45.0),
        tri(x, 25.0, 45.0, 70.0),
        trap(x, 45.0, 70.0, 100.0, 100.0),
    ]
}

const NEG_SMALL: usize = 0;
const ZERO: usize = 1;
const POS_SMALL: usize = 2;
const POS_MEDIUM: usize = 3;
const POS_LARGE: usize = 4;

fn turn_term(term: usize, x: f64) -> f64 {
    match term {
        NEG_SMALL => tri(x, -20.0, -10.0, 0.0),
        ZERO => tri(x, -10.0, 0.0, 10.0),
        POS_SMALL => tri(x, 0.0, 15.0, 30.0),
        POS_MEDIUM => tri(x, 15.0, 30.0, 45.0),
        _ => trap(x, 30.0, 45.0, 60.0, 60.0),
    }
}

/// Rule table indexed [front][right] with near = 0, medium = 1, far = 2.
const TABLE: [[usize; 3]; 3] = [
    [POS_LARGE, POS_SMALL, POS_MEDIUM],
    [NEG_SMALL, ZERO, ZERO],
    [NEG_SMALL, ZERO, ZERO],
];

pub const ORACLE_STEP: f64 = 0.001;

/// Consequent memberships tabulated once on the oracle grid.
pub struct Oracle {
    xs: Vec<f64>,
    terms: Vec<Vec<f64>>,
}

impl Oracle {
    pub fn new() -> Self {
        let n = ((60.0 - -20.0) / ORACLE_STEP).round() as usize;
        let xs: Vec<f64> = (0..=n).map(|k| -20.0 + k as f64 * ORACLE_STEP).collect();
        let terms = (0..5).map(|t| xs.iter().map(|&x| turn_term(t, x)).collect()).collect();
        Self { xs, terms }
    }

    pub fn angle(&self, front_cm: f64, right_cm: f64) -> f64 {
        let f = distance_terms(front_cm);
        let r = distance_terms(right_cm);
        // Each of the nine rules fires at min(front, right); rules sharing a
        // consequent clip it at the strongest of them.
        let mut clip = [0.0f64; 5];
        for (i, row) in TABLE.iter().enumerate() {
            for (j, &out) in row.iter().enumerate() {
                clip[out] = clip[out].max(f[i].min(r[j]));
            }
        }
        let active: Vec<(f64, &[f64])> = (0..5)
            .filter(|&t| clip[t] > 0.0)
            .map(|t| (clip[t], self.terms[t].as_slice()))
            .collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, &x) in self.xs.iter().enumerate() {
            let mut mu: f64 = 0.0;
            for &(w, term) in &active {
                mu = mu.max(w.min(term[k]));
            }
            num += x * mu;
            den += mu;
        }
        num / den
    }
}

pub fn oracle_angle(front_cm: f64, right_cm: f64) -> f64 {
    static ORACLE: std::sync::OnceLock<Oracle> = std::sync::OnceLock::new();
    ORACLE.get_or_init(Oracle::new).angle(front_cm, right_cm)
}
