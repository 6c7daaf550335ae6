use serde::{Deserialize, Serialize};

use super::TickRecord;
use crate::world::WorldMap;

/// Share of straight-wall ticks whose true wall clearance stays in band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallRegulation {
    pub counted: usize,
    pub within: usize,
}

impl WallRegulation {
    pub fn fraction(&self) -> f64 {
        if self.counted == 0 {
            0.0
        } else {
            self.within as f64 / self.counted as f64
        }
    }
}

/// Counts ticks after `warmup` cm of travel whose followed-wall point lies at
/// least `margin` cm from both ends of its segment (so corners and the
/// doorway are excluded), and how many of those have a body-to-wall
/// clearance within `setpoint ± tolerance`.
pub fn wall_regulation(
    map: &WorldMap,
    records: &[TickRecord],
    body_radius: f64,
    setpoint: f64,
    tolerance: f64,
    warmup: f64,
    margin: f64,
) -> WallRegulation {
    let mut counted = 0;
    let mut within = 0;
    for r in records {
        if r.odometer <= warmup {
            continue;
        }
        let p = r.frame.pose.position();
        let Some((d, idx)) = map.followed_wall(r.frame.pose) else {
            continue;
        };
        let wall = &map.walls[idx];
        let along = wall.project(p) * wall.length();
        if along < margin || wall.length() - along < margin {
            continue;
        }
        counted += 1;
        if ((d - body_radius) - setpoint).abs() <= tolerance {
            within += 1;
        }
    }
    WallRegulation { counted, within }
}
