//! Analytic ground-level slice of a Gaussian plume.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid plume parameter {name}: {value}")]
pub struct PlumeError {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlumeParams {
    /// Stack height H in meters.
    pub stack_height: f64,
    /// Wind speed u in m/s.
    pub wind_speed: f64,
    /// Emission rate Q in kg/s.
    pub emission_rate: f64,
    /// Diffusion rate K in kg/s.
    pub diffusion_rate: f64,
    /// Multiply the field by the along-wind ripple `0.8 + 0.2 sin(4x)`.
    pub perturbed: bool,
}

impl Default for PlumeParams {
    fn default() -> Self {
        Self {
            stack_height: 10.0,
            wind_speed: 50.0,
            emission_rate: 2.0,
            diffusion_rate: 1.0,
            perturbed: false,
        }
    }
}

impl PlumeParams {
    pub fn validate(&self) -> Result<(), PlumeError> {
        for (name, value) in [
            ("stack_height", self.stack_height),
            ("wind_speed", self.wind_speed),
            ("emission_rate", self.emission_rate),
            ("diffusion_rate", self.diffusion_rate),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(PlumeError { name, value });
            }
        }
        Ok(())
    }

    /// Plume-local coordinates of the concentration maximum.
    pub fn peak_location(&self) -> Vec2 {
        let h = self.stack_height;
        Vec2::new(self.wind_speed * h * h / (4.0 * self.diffusion_rate), 0.0)
    }
}

/// Raw concentration at plume-local `(x, y)`; zero at and upwind of the stack.
pub fn unperturbed(x: f64, y: f64, p: &PlumeParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = p.diffusion_rate;
    let h = p.stack_height;
    p.emission_rate / (2.0 * PI * k * x) * (-p.wind_speed * (y * y + h * h) / (4.0 * k * x)).exp()
}

pub fn perturbation_factor(x: f64) -> f64 {
    0.8 + 0.2 * (4.0 * x).sin()
}

/// Raw (unnormalized) field value, perturbed or not.
pub fn raw_value(x: f64, y: f64, p: &PlumeParams) -> f64 {
    let v = unperturbed(x, y, p);
    if p.perturbed {
        perturbation_factor(x) * v
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlumePose {
    /// Stack position in the world frame.
    pub source: Vec2,
    /// Downwind direction in radians from +x.
    pub orientation: f64,
}

impl PlumePose {
    /// Pose whose concentration maximum lands on `peak`.
    pub fn with_peak_at(peak: Vec2, orientation: f64, params: &PlumeParams) -> Self {
        let source = peak - params.peak_location().rotate(orientation);
        Self {
            source,
            orientation,
        }
    }
}

/// Draws a pose whose peak is area-uniform on the disk of `radius` around
/// `takeoff`.
pub fn make_pose<R: Rng + ?Sized>(
    rng: &mut R,
    takeoff: Vec2,
    radius: f64,
    params: &PlumeParams,
) -> PlumePose {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = rng.gen::<f64>() * TAU;
    PlumePose::with_peak_at(takeoff + Vec2::from_angle(a) * r, 0.0, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlumeField {
    pub params: PlumeParams,
    pub pose: PlumePose,
    norm: f64,
}

impl PlumeField {
    pub fn new(params: PlumeParams, pose: PlumePose) -> Result<Self, PlumeError> {
        params.validate()?;
        let peak = params.peak_location();
        let norm = unperturbed(peak.x, peak.y, &params);
        Ok(Self { params, pose, norm })
    }

    /// Field value at the analytic peak; every reading is divided by it.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.pose.source).rotate(-self.pose.orientation)
    }

    /// World position of the maximum-flux point.
    pub fn peak(&self) -> Vec2 {
        self.pose.source + self.params.peak_location().rotate(self.pose.orientation)
    }

    /// Normalized sensor reading in `[0, 1]`.
    pub fn reading(&self, world: Vec2) -> f64 {
        let l = self.to_local(world);
        (raw_value(l.x, l.y, &self.params) / self.norm).clamp(0.0, 1.0)
    }
}
