//! Determinantal point process sampling for the stationary exponential
//! kernel `C(u, v) = sigma2 * exp(-decay * |u - v|)`.
//!
//! The kernel is treated as periodic on the window and expanded in the
//! Fourier basis; mode `k` carries the continuous-spectrum eigenvalue
//! `phi(k / L)`. Sampling follows the standard two-stage scheme: a Bernoulli
//! draw per mode, then sequential projection sampling of exactly one point
//! per retained mode via rejection and Gram-Schmidt.

use crate::error::{PplError, Result};
use crate::geometry::{Point, PointPattern, Window};
use crate::rng::{RngSeed, Stream};
use nalgebra::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fraction of the total spectral mass `sigma2 |W|` the truncation must keep.
const MIN_RETAINED_MASS: f64 = 0.99;
const EIGENVALUE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DppSpec {
    /// Kernel scale sigma2; equals the process intensity.
    pub intensity: f64,
    /// Kernel decay rate r.
    pub decay: f64,
    /// Fourier modes per axis: frequencies `-K..=K` are kept.
    pub truncation: usize,
}

/// Spectral density of the exponential kernel in the plane, evaluated at
/// frequency `omega` (cycles per unit length).
fn spectral_density(intensity: f64, decay: f64, omega_sq: f64) -> f64 {
    let t = decay * decay + 4.0 * PI * PI * omega_sq;
    2.0 * PI * intensity * decay / (t * t.sqrt())
}

fn retained_mass(intensity: f64, decay: f64, truncation: usize, w: Window) -> f64 {
    let k = truncation as i64;
    let (lx, ly) = (w.width(), w.height());
    let mut sum = 0.0;
    for k1 in -k..=k {
        let wx = k1 as f64 / lx;
        for k2 in -k..=k {
            let wy = k2 as f64 / ly;
            sum += spectral_density(intensity, decay, wx * wx + wy * wy);
        }
    }
    sum
}

impl DppSpec {
    /// Spec with the smallest power-of-two truncation retaining at least 99%
    /// of the spectral mass on the given window.
    pub fn with_auto_truncation(intensity: f64, decay: f64, w: Window) -> Result<DppSpec> {
        let target = MIN_RETAINED_MASS * intensity * w.area();
        let mut truncation = 64usize;
        loop {
            if retained_mass(intensity, decay, truncation, w) >= target {
                return Ok(DppSpec { intensity, decay, truncation });
            }
            truncation *= 2;
            if truncation > 4096 {
                return Err(PplError::InvalidParameter(
                    "spectral truncation above 4096 modes per axis still misses 99% mass".into(),
                ));
            }
        }
    }
}

/// Precomputed eigenvalue table for one (spec, window) pair.
pub struct DppSampler {
    window: Window,
    /// Flat row-major table over `(-K..=K)^2`, clamped to [0, 1].
    eigenvalues: Vec<f64>,
    truncation: i64,
    expected_modes: f64,
}

impl DppSampler {
    pub fn new(spec: &DppSpec, window: Window) -> Result<DppSampler> {
        if !(spec.intensity > 0.0) || !spec.intensity.is_finite() {
            return Err(PplError::InvalidParameter(format!("intensity {}", spec.intensity)));
        }
        if !(spec.decay > 0.0) || !spec.decay.is_finite() {
            return Err(PplError::InvalidParameter(format!("decay {}", spec.decay)));
        }
        let k = spec.truncation as i64;
        let side = (2 * k + 1) as usize;
        let (lx, ly) = (window.width(), window.height());
        let mut eigenvalues = Vec::with_capacity(side * side);
        let mut mass = 0.0;
        for k1 in -k..=k {
            let wx = k1 as f64 / lx;
            for k2 in -k..=k {
                let wy = k2 as f64 / ly;
                let lambda = spectral_density(spec.intensity, spec.decay, wx * wx + wy * wy);
                if lambda > 1.0 + EIGENVALUE_SLACK {
                    return Err(PplError::KernelNotValid(lambda));
                }
                mass += lambda;
                eigenvalues.push(lambda.clamp(0.0, 1.0));
            }
        }
        let target = MIN_RETAINED_MASS * spec.intensity * window.area();
        if mass < target {
            return Err(PplError::InvalidParameter(format!(
                "truncation {} retains {:.1}% of the spectral mass; need at least 99%",
                spec.truncation,
                100.0 * mass / (spec.intensity * window.area())
            )));
        }
        Ok(DppSampler { window, eigenvalues, truncation: k, expected_modes: mass })
    }

    /// Expected point count of the truncated process.
    pub fn expected_count(&self) -> f64 {
        self.expected_modes
    }

    pub fn sample(&self, seed: RngSeed) -> Result<PointPattern> {
        let mut rng = seed.stream_rng(Stream::Simulation, 0);
        let k = self.truncation;
        let side = (2 * k + 1) as usize;

        // Stage 1: Bernoulli selection of modes.
        let mut modes: Vec<(f64, f64)> = Vec::new();
        for (idx, &lambda) in self.eigenvalues.iter().enumerate() {
            if lambda > 0.0 && rng.random::<f64>() < lambda {
                let k1 = (idx / side) as i64 - k;
                let k2 = (idx % side) as i64 - k;
                modes.push((k1 as f64, k2 as f64));
            }
        }
        let m = modes.len();
        if m == 0 {
            return Ok(PointPattern::empty(self.window));
        }

        // Stage 2: sequential projection sampling in normalized coordinates.
        let phases = |s1: f64, s2: f64, out: &mut Vec<Complex<f64>>| {
            out.clear();
            for &(k1, k2) in &modes {
                let angle = 2.0 * PI * (k1 * s1 + k2 * s2);
                let (sin, cos) = angle.sin_cos();
                out.push(Complex::new(cos, sin));
            }
        };

        let mut basis: Vec<Vec<Complex<f64>>> = Vec::with_capacity(m);
        let mut coords: Vec<(f64, f64)> = Vec::with_capacity(m);
        let mut v: Vec<Complex<f64>> = Vec::with_capacity(m);
        let mf = m as f64;

        for _step in 0..m {
            let accepted = loop {
                let s1 = rng.random::<f64>();
                let s2 = rng.random::<f64>();
                phases(s1, s2, &mut v);
                let mut proj = 0.0;
                for e in &basis {
                    let mut dot = Complex::new(0.0, 0.0);
                    for (a, b) in e.iter().zip(v.iter()) {
                        dot += a.conj() * b;
                    }
                    proj += dot.norm_sqr();
                }
                let residual = (mf - proj).max(0.0);
                if rng.random::<f64>() * mf < residual {
                    break (s1, s2);
                }
            };
            coords.push(accepted);

            if basis.len() < m - 1 {
                // Orthonormalize the accepted feature vector (two passes).
                let mut w = v.clone();
                for _ in 0..2 {
                    for e in &basis {
                        let mut dot = Complex::new(0.0, 0.0);
                        for (a, b) in e.iter().zip(w.iter()) {
                            dot += a.conj() * b;
                        }
                        for (wi, ei) in w.iter_mut().zip(e.iter()) {
                            *wi -= dot * ei;
                        }
                    }
                }
                let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    for wi in &mut w {
                        *wi /= norm;
                    }
                    basis.push(w);
                }
            }
        }

        let points: Vec<Point> = coords
            .into_iter()
            .map(|(s1, s2)| {
                Point::new(
                    self.window.x_min + s1 * self.window.width(),
                    self.window.y_min + s2 * self.window.height(),
                )
            })
            .collect();
        PointPattern::new(points, self.window)
    }
}
