//! Log-Gaussian Cox process simulation.
//!
//! The Gaussian field is sampled on a uniform grid via Cholesky of the
//! (jittered) exponential covariance matrix; the intensity is treated as
//! piecewise constant between nodes, so the Poisson sampling is exact
//! conditional on the discretized field.

use crate::error::{PplError, Result};
use crate::geometry::{distance, Point, PointPattern, QuadratureGrid, Window};
use crate::rng::{RngSeed, Stream};
use crate::sim::poisson::poisson_count;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Mean function of the driving Gaussian field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldMean {
    Constant { value: f64 },
    /// `log(offset + slope * x)`, so the process intensity becomes
    /// `(offset + slope * x) * exp(sigma2 / 2)`.
    LogLinearX { offset: f64, slope: f64 },
}

impl FieldMean {
    pub fn eval(&self, u: Point) -> f64 {
        match *self {
            FieldMean::Constant { value } => value,
            FieldMean::LogLinearX { offset, slope } => (offset + slope * u.x).ln(),
        }
    }
}

/// Gaussian field with exponential covariance
/// `C(u, v) = sigma2 * exp(-decay * |u - v|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFieldSpec {
    pub mean: FieldMean,
    pub sigma2: f64,
    pub decay: f64,
    /// Field grid resolution per axis.
    pub resolution: usize,
}

impl GaussianFieldSpec {
    pub const DEFAULT_RESOLUTION: usize = 64;

    pub fn new(mean: FieldMean, sigma2: f64, decay: f64) -> GaussianFieldSpec {
        GaussianFieldSpec { mean, sigma2, decay, resolution: Self::DEFAULT_RESOLUTION }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(PplError::InvalidParameter(format!("sigma2 {}", self.sigma2)));
        }
        if !(self.decay > 0.0) || !self.decay.is_finite() {
            return Err(PplError::InvalidParameter(format!("decay {}", self.decay)));
        }
        if self.resolution == 0 {
            return Err(PplError::InvalidParameter("field resolution 0".into()));
        }
        Ok(())
    }

    /// Expected intensity `exp(mean(u) + sigma2 / 2)`.
    pub fn intensity_at(&self, u: Point) -> f64 {
        (self.mean.eval(u) + 0.5 * self.sigma2).exp()
    }
}

/// Holds the Cholesky factor of the node covariance; build once, sample many.
pub struct LgcpSampler {
    window: Window,
    nodes: Vec<Point>,
    means: Vec<f64>,
    factor: DMatrix<f64>,
    cell_area: f64,
    cell_w: f64,
    cell_h: f64,
    resolution: usize,
}

impl LgcpSampler {
    pub fn new(spec: &GaussianFieldSpec, window: Window) -> Result<LgcpSampler> {
        spec.validate()?;
        let grid = QuadratureGrid::new(window, spec.resolution)?;
        let nodes: Vec<Point> = grid.centers().collect();
        let n = nodes.len();
        let means: Vec<f64> = nodes.iter().map(|&u| spec.mean.eval(u)).collect();
        if means.iter().any(|m| !m.is_finite()) {
            return Err(PplError::InvalidParameter("field mean non-finite on grid".into()));
        }

        let mut cov = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let c = spec.sigma2 * (-spec.decay * distance(nodes[i], nodes[j])).exp();
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }

        // Escalating jitter until the factorization succeeds.
        let mut jitter = 0.0;
        let max_jitter = 1e-3 * spec.sigma2;
        let factor = loop {
            let mut attempt = cov.clone();
            for i in 0..n {
                attempt[(i, i)] += jitter;
            }
            if let Some(chol) = attempt.cholesky() {
                break chol.unpack();
            }
            jitter = if jitter == 0.0 { 1e-12 * spec.sigma2 } else { jitter * 10.0 };
            if jitter > max_jitter {
                return Err(PplError::CovarianceFactorization);
            }
        };

        Ok(LgcpSampler {
            window,
            nodes,
            means,
            factor,
            cell_area: grid.cell_area(),
            cell_w: window.width() / spec.resolution as f64,
            cell_h: window.height() / spec.resolution as f64,
            resolution: spec.resolution,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// One field + Poisson draw.
    pub fn sample(&self, seed: RngSeed) -> Result<PointPattern> {
        let mut rng = seed.stream_rng(Stream::Simulation, 0);
        let n = self.nodes.len();
        let eps: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();

        let mut points = Vec::new();
        for i in 0..n {
            // Row i of the lower-triangular factor times the noise vector.
            let mut z = self.means[i];
            for j in 0..=i {
                z += self.factor[(i, j)] * eps[j];
            }
            let rate = z.exp() * self.cell_area;
            let count = poisson_count(rate, &mut rng)?;
            let c = self.nodes[i];
            for _ in 0..count {
                let x = c.x + (rng.random::<f64>() - 0.5) * self.cell_w;
                let y = c.y + (rng.random::<f64>() - 0.5) * self.cell_h;
                points.push(Point::new(x, y));
            }
        }
        PointPattern::new(points, self.window)
    }
}
