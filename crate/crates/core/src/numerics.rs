//! Least-squares plane fitting for swarm-wide gradient estimates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

/// Ratio of the scatter matrix's eigenvalues above which positions are
/// treated as collinear.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Slopes at or below this magnitude count as flat.
pub const MIN_SLOPE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("cannot fit a plane to zero samples")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    pub val: f64,
}

impl Sample {
    pub fn new(pos: Vec2, val: f64) -> Self {
        Self {
            x: pos.x,
            y: pos.y,
            val,
        }
    }

    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// `val ≈ b0 + b1 x + b2 y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub rank_deficient: bool,
}

impl PlaneFit {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.b0 + self.b1 * x + self.b2 * y
    }

    pub fn sum_sq_residuals(&self, samples: &[Sample]) -> f64 {
        samples
            .iter()
            .map(|s| {
                let e = s.val - self.eval(s.x, s.y);
                e * e
            })
            .sum()
    }
}

/// Ordinary least squares over the samples.
///
/// The normal equations are solved on mean-centred coordinates, which
/// decouples the intercept and leaves a symmetric 2x2 system. Its eigen
/// decomposition gives both the solution and the rank test; a degenerate
/// system gets the minimum-norm slope along the well-determined axis.
pub fn fit_plane(samples: &[Sample]) -> Result<PlaneFit, FitError> {
    if samples.is_empty() {
        return Err(FitError::Empty);
    }
    let n = samples.len() as f64;
    let (mx, my, mv) = samples.iter().fold((0.0, 0.0, 0.0), |(a, b, c), s| {
        (a + s.x / n, b + s.y / n, c + s.val / n)
    });
    let (mut sxx, mut sxy, mut syy, mut sxv, mut syv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let dx = s.x - mx;
        let dy = s.y - my;
        let dv = s.val - mv;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxv += dx * dv;
        syv += dy * dv;
    }

    let half_tr = 0.5 * (sxx + syy);
    let disc = (0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy).sqrt();
    let l_hi = half_tr + disc;
    let l_lo = half_tr - disc;
    let rank_deficient = samples.len() < 3 || l_hi <= 0.0 || l_lo * CONDITION_LIMIT <= l_hi;

    let (b1, b2) = if !rank_deficient {
        let det = sxx * syy - sxy * sxy;
        let solve = |rx: f64, ry: f64| ((syy * rx - sxy * ry) / det, (sxx * ry - sxy * rx) / det);
        let (mut b1, mut b2) = solve(sxv, syv);
        // Iterative refinement against the residuals; the normal matrix
        // squares the conditioning of the positions.
        for _ in 0..2 {
            let (mut rx, mut ry) = (0.0, 0.0);
            for s in samples {
                let dx = s.x - mx;
                let dy = s.y - my;
                let r = (s.val - mv) - b1 * dx - b2 * dy;
                rx += dx * r;
                ry += dy * r;
            }
            let (d1, d2) = solve(rx, ry);
            b1 += d1;
            b2 += d2;
        }
        (b1, b2)
    } else if l_hi > 0.0 {
        // Principal eigenvector of the scatter matrix.
        let v = if sxy.abs() > 0.0 || sxx != syy {
            let (ex, ey) = if sxx >= syy {
                (l_hi - syy, sxy)
            } else {
                (sxy, l_hi - sxx)
            };
            let len = ex.hypot(ey);
            Vec2::new(ex / len, ey / len)
        } else {
            Vec2::new(1.0, 0.0)
        };
        let k = (v.x * sxv + v.y * syv) / l_hi;
        (k * v.x, k * v.y)
    } else {
        (0.0, 0.0)
    };
    Ok(PlaneFit {
        b0: mv - b1 * mx - b2 * my,
        b1,
        b2,
        rank_deficient,
    })
}

/// Unit vector along the fitted slope, or `None` when the fit cannot be
/// trusted or is flat.
pub fn ascent_direction(fit: &PlaneFit) -> Option<Vec2> {
    if fit.rank_deficient {
        return None;
    }
    let g = Vec2::new(fit.b1, fit.b2);
    let m = g.norm();
    (m > MIN_SLOPE).then(|| g * (1.0 / m))
}

/// Direction from the weaker to the stronger of two readings.
pub fn pairwise_direction(a: &Sample, b: &Sample) -> Option<Vec2> {
    let d = b.pos() - a.pos();
    let len = d.norm();
    let dv = b.val - a.val;
    if len <= 0.0 || (dv / len).abs() <= MIN_SLOPE {
        return None;
    }
    Some(d * (dv.signum() / len))
}
