//! Simulation and control core for a corridor-patrol robot.

pub mod fuzzy;
pub mod geometry;
pub mod world;
pub mod kv;
pub mod link;
pub mod pilot;
pub mod protocol;
pub mod scenario;
