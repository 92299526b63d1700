//! Small planar/spatial vector types used throughout the simulator.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A horizontal position or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from the +x axis.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Angle in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise rotation by `theta` radians.
    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn with_z(self, z: f64) -> Vec3 {
        Vec3::new(self.x, self.y, z)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
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

/// A position in meters; `z` is altitude above the take-off plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn dist(self, other: Vec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Moves from `self` toward `target` by at most `max_step`, landing exactly
    /// on the target when it is within reach.
    pub fn step_toward(self, target: Vec3, max_step: f64) -> Vec3 {
        let d = self.dist(target);
        if d <= max_step || d == 0.0 {
            return target;
        }
        let k = max_step / d;
        Vec3::new(
            self.x + (target.x - self.x) * k,
            self.y + (target.y - self.y) * k,
            self.z + (target.z - self.z) * k,
        )
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_tau(angle: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let a = angle.rem_euclid(tau);
    if a >= tau {
        0.0
    } else {
        a
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_pi(angle: f64) -> f64 {
    let pi = std::f64::consts::PI;
    wrap_tau(angle + pi) - pi
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rotation_preserves_length() {
        let v = Vec2::new(3.0, 4.0);
        let r = v.rotate(1.234);
        assert!((r.norm() - 5.0).abs() < 1e-12);
        let q = Vec2::new(1.0, 0.0).rotate(FRAC_PI_2);
        assert!(q.x.abs() < 1e-15 && (q.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_toward_never_overshoots() {
        let a = Vec3::new(0.0, 0.0, 10.0);
        let b = Vec3::new(10.0, 0.0, 10.0);
        let s = a.step_toward(b, 0.2);
        assert!((s.x - 0.2).abs() < 1e-12);
        let near = Vec3::new(9.9, 0.0, 10.0);
        assert_eq!(near.step_toward(b, 0.2), b);
    }

    #[test]
    fn wrapping() {
        assert!((wrap_tau(-PI / 2.0) - 1.5 * PI).abs() < 1e-12);
        assert!((wrap_pi(1.5 * PI) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_tau(0.0), 0.0);
    }
}
