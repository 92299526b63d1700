//! Independent golden-angle spoke search with moth-style chemotaxis.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{wrap_tau, Vec2};

pub const GOLDEN_RATIO: f64 = 1.618;

/// Angle added per spoke.
pub const SPOKE_INCREMENT: f64 = TAU / GOLDEN_RATIO;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobsParams {
    pub threshold: f64,
    /// Chemotaxis step per decision, meters.
    pub step: f64,
    pub waypoints_per_spoke: usize,
    /// Spacing between spoke waypoints, meters.
    pub waypoint_spacing: f64,
    /// Sub-threshold readings tolerated before returning to the spokes.
    pub max_low_readings: u32,
}

impl Default for MobsParams {
    fn default() -> Self {
        Self {
            threshold: 0.005,
            step: 1.0,
            waypoints_per_spoke: 100,
            waypoint_spacing: 1.0,
            max_low_readings: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MobsMode {
    Spoke,
    Chemotaxis,
}

pub fn spoke_angle(base: f64, k: u64) -> f64 {
    wrap_tau(base + (k as f64) * SPOKE_INCREMENT)
}

/// Waypoint `index` (0-based) of the spoke at `angle`.
pub fn spoke_waypoint(center: Vec2, angle: f64, index: usize, params: &MobsParams) -> Vec2 {
    center + Vec2::from_angle(angle) * ((index + 1) as f64 * params.waypoint_spacing)
}

pub fn spoke_waypoints(center: Vec2, angle: f64, params: &MobsParams) -> Vec<Vec2> {
    (0..params.waypoints_per_spoke)
        .map(|i| spoke_waypoint(center, angle, i, params))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobsDrone {
    pub mode: MobsMode,
    pub center: Vec2,
    pub base_angle: f64,
    pub spoke: u64,
    pub waypoint: usize,
    pub heading: f64,
    pub prev_reading: f64,
    pub low_count: u32,
}

impl MobsDrone {
    /// A drone at the start of its first spoke, with a uniform base angle.
    pub fn new<R: Rng + ?Sized>(center: Vec2, rng: &mut R) -> Self {
        Self {
            mode: MobsMode::Spoke,
            center,
            base_angle: rng.gen::<f64>() * TAU,
            spoke: 0,
            waypoint: 0,
            heading: 0.0,
            prev_reading: 0.0,
            low_count: 0,
        }
    }

    pub fn current_spoke_angle(&self) -> f64 {
        spoke_angle(self.base_angle, self.spoke)
    }

    pub fn current_waypoint(&self, params: &MobsParams) -> Vec2 {
        spoke_waypoint(self.center, self.current_spoke_angle(), self.waypoint, params)
    }

    fn next_spoke_target(&mut self, params: &MobsParams) -> Vec2 {
        self.waypoint += 1;
        if self.waypoint >= params.waypoints_per_spoke {
            self.spoke += 1;
            self.waypoint = 0;
        }
        self.current_waypoint(params)
    }

    /// Handles one reading taken at `pos` on arrival and returns the next
    /// horizontal target.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        pos: Vec2,
        reading: f64,
        params: &MobsParams,
        rng: &mut R,
    ) -> Vec2 {
        match self.mode {
            MobsMode::Spoke => {
                if reading < params.threshold {
                    return self.next_spoke_target(params);
                }
                self.mode = MobsMode::Chemotaxis;
                self.heading = self.current_spoke_angle();
                self.prev_reading = reading;
                self.low_count = 0;
            }
            MobsMode::Chemotaxis => {
                if reading >= params.threshold {
                    self.low_count = 0;
                } else {
                    self.low_count += 1;
                    if self.low_count > params.max_low_readings {
                        self.mode = MobsMode::Spoke;
                        self.low_count = 0;
                        self.spoke += 1;
                        self.waypoint = 0;
                        return self.current_waypoint(params);
                    }
                }
                if reading <= self.prev_reading {
                    self.heading = rng.gen::<f64>() * TAU;
                }
                self.prev_reading = reading;
            }
        }
        pos + Vec2::from_angle(self.heading) * params.step
    }
}
