use std::fmt::Write as _;

use crate::fuzzy::FuzzyController;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub front: f64,
    pub right: f64,
    pub alpha: f64,
}

/// Samples the avoidance angle over the front/right input universes.
pub fn control_surface(controller: &FuzzyController, step: f64) -> Vec<SurfacePoint> {
    assert!(step.is_finite() && step > 0.0, "surface step must be positive");
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
        if hi - v[n] > 1e-9 {
            v.push(hi);
        }
        v
    };
    let cfg = controller.config();
    let fronts = axis(cfg.front.universe());
    let rights = axis(cfg.right.universe());
    let mut out = Vec::with_capacity(fronts.len() * rights.len());
    for &front in &fronts {
        for &right in &rights {
            out.push(SurfacePoint {
                front,
                right,
                alpha: controller.avoidance_angle(front, right),
            });
        }
    }
    out
}

/// CSV with header `u2,u3,alpha_deg` (front reading, right reading, angle).
pub fn surface_csv(points: &[SurfacePoint]) -> String {
    let mut s = String::from("u2,u3,alpha_deg\n");
    for p in points {
        writeln!(s, "{},{},{:.4}", p.front, p.right, p.alpha).expect("writing to a String");
    }
    s
}
