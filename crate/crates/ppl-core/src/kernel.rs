//! Gaussian kernel intensity estimation on rectangular windows.
//!
//! The kernel is the bivariate isotropic Gaussian density with scale
//! `bandwidth` per axis. The local edge correction divides each point's
//! contribution by the kernel mass its bump leaves inside the window,
//! `w(x) = \int_W kappa(v - x) dv`, which factorizes into normal CDF terms
//! on a rectangle and makes the corrected estimate integrate to the point
//! count exactly (up to quadrature of the outer integral).

use crate::geometry::{Point, PointPattern, Window};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCorrection {
    None,
    Local,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Kernel value at squared distance `d2`.
#[inline]
pub fn gaussian_kernel_sq(d2: f64, bandwidth: f64) -> f64 {
    let t2 = bandwidth * bandwidth;
    (-0.5 * d2 / t2).exp() / (2.0 * PI * t2)
}

/// Mass of the kernel centered at `x` that falls inside the window.
pub fn window_mass(x: Point, bandwidth: f64, w: Window) -> f64 {
    let fx = normal_cdf((w.x_max - x.x) / bandwidth) - normal_cdf((w.x_min - x.x) / bandwidth);
    let fy = normal_cdf((w.y_max - x.y) / bandwidth) - normal_cdf((w.y_min - x.y) / bandwidth);
    fx * fy
}

/// Kernel intensity estimate at `u` from the points of `x`.
pub fn kernel_intensity(x: &PointPattern, bandwidth: f64, u: Point, edge: EdgeCorrection) -> f64 {
    let est = KernelEstimator::new(x.points(), bandwidth, x.window(), edge);
    est.eval(u)
}

/// One (pattern, bandwidth) pair with per-point edge weights precomputed.
pub struct KernelEstimator<'a> {
    points: &'a [Point],
    bandwidth: f64,
    inv_weights: Option<Vec<f64>>,
}

impl<'a> KernelEstimator<'a> {
    pub fn new(
        points: &'a [Point],
        bandwidth: f64,
        window: Window,
        edge: EdgeCorrection,
    ) -> KernelEstimator<'a> {
        let inv_weights = match edge {
            EdgeCorrection::None => None,
            EdgeCorrection::Local => Some(
                points
                    .iter()
                    .map(|&p| 1.0 / window_mass(p, bandwidth, window))
                    .collect(),
            ),
        };
        KernelEstimator { points, bandwidth, inv_weights }
    }

    pub fn eval(&self, u: Point) -> f64 {
        let mut sum = 0.0;
        match &self.inv_weights {
            None => {
                for p in self.points {
                    let dx = u.x - p.x;
                    let dy = u.y - p.y;
                    sum += gaussian_kernel_sq(dx * dx + dy * dy, self.bandwidth);
                }
            }
            Some(inv) => {
                for (p, iw) in self.points.iter().zip(inv) {
                    let dx = u.x - p.x;
                    let dy = u.y - p.y;
                    sum += gaussian_kernel_sq(dx * dx + dy * dy, self.bandwidth) * iw;
                }
            }
        }
        sum
    }

    /// Evaluate while skipping one point (leave-one-out).
    pub fn eval_excluding(&self, u: Point, skip: usize) -> f64 {
        let mut sum = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            if i == skip {
                continue;
            }
            let dx = u.x - p.x;
            let dy = u.y - p.y;
            let k = gaussian_kernel_sq(dx * dx + dy * dy, self.bandwidth);
            sum += match &self.inv_weights {
                None => k,
                Some(inv) => k * inv[i],
            };
        }
        sum
    }

    /// Exact integral of the uncorrected estimate over the window.
    pub fn window_integral_uncorrected(&self, window: Window) -> f64 {
        self.points
            .iter()
            .map(|&p| window_mass(p, self.bandwidth, window))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_event_at_origin_value() {
        let w = Window::unit();
        let x = PointPattern::new(vec![Point::new(0.5, 0.5)], w).unwrap();
        let theta = 0.1;
        let v = kernel_intensity(&x, theta, Point::new(0.5, 0.5), EdgeCorrection::None);
        assert_relative_eq!(v, 1.0 / (2.0 * PI * theta * theta), max_relative = 1e-12);
    }

    #[test]
    fn empty_pattern_is_zero_everywhere() {
        let w = Window::unit();
        let x = PointPattern::empty(w);
        assert_eq!(kernel_intensity(&x, 0.2, Point::new(0.3, 0.7), EdgeCorrection::Local), 0.0);
    }

    #[test]
    fn window_mass_is_one_deep_inside() {
        let w = Window::unit();
        assert_relative_eq!(window_mass(Point::new(0.5, 0.5), 0.01, w), 1.0, epsilon = 1e-12);
        // Corner point keeps a quarter of its mass.
        assert_relative_eq!(window_mass(Point::new(0.0, 0.0), 0.01, w), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn local_correction_restores_mass() {
        let w = Window::unit();
        let x = PointPattern::new(
            vec![Point::new(0.05, 0.1), Point::new(0.9, 0.95), Point::new(0.5, 0.02)],
            w,
        )
        .unwrap();
        let grid = crate::geometry::QuadratureGrid::new(w, 256).unwrap();
        let est = KernelEstimator::new(x.points(), 0.15, w, EdgeCorrection::Local);
        let mass = crate::geometry::integrate_on_window(|u| est.eval(u), &grid).unwrap();
        assert!((mass - 3.0).abs() / 3.0 < 5e-3);
    }
}
