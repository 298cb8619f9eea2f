//! Poisson process sampling: homogeneous by direct placement, inhomogeneous
//! by thinning a homogeneous dominating process.

use crate::error::{PplError, Result};
use crate::field::ScalarField;
use crate::geometry::{Point, PointPattern, Window};
use crate::rng::{RngSeed, Stream};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

pub(crate) fn uniform_point(w: Window, rng: &mut ChaCha8Rng) -> Point {
    let x = w.x_min + rng.random::<f64>() * w.width();
    let y = w.y_min + rng.random::<f64>() * w.height();
    Point::new(x, y)
}

/// Draw a Poisson count with the given mean (0 when the mean is 0).
pub fn poisson_count(mean: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    if mean < 0.0 || !mean.is_finite() {
        return Err(PplError::InvalidParameter(format!("Poisson mean {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| PplError::InvalidParameter(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

fn homogeneous(rate: f64, w: Window, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let n = poisson_count(rate * w.area(), rng)?;
    Ok((0..n).map(|_| uniform_point(w, rng)).collect())
}

/// Sample a Poisson process with an arbitrary intensity function, dominated
/// by the supplied bound: a homogeneous process at rate `bound` is thinned
/// with retention `intensity(u) / bound`.
pub fn simulate_poisson_fn<F: Fn(Point) -> f64>(
    intensity: F,
    bound: f64,
    w: Window,
    seed: RngSeed,
) -> Result<PointPattern> {
    if !(bound.is_finite() && bound >= 0.0) {
        return Err(PplError::InvalidParameter(format!("intensity bound {bound}")));
    }
    let mut rng = seed.stream_rng(Stream::Simulation, 0);
    if bound == 0.0 {
        return Ok(PointPattern::empty(w));
    }
    let proposals = homogeneous(bound, w, &mut rng)?;
    let mut points = Vec::with_capacity(proposals.len());
    for p in proposals {
        let rho = intensity(p);
        if !rho.is_finite() || rho < 0.0 {
            return Err(PplError::InvalidParameter(format!(
                "intensity {rho} at ({}, {})",
                p.x, p.y
            )));
        }
        if rho > bound * (1.0 + 1e-12) {
            return Err(PplError::InvalidParameter(format!(
                "intensity {rho} exceeds bound {bound}"
            )));
        }
        if rng.random::<f64>() * bound < rho {
            points.push(p);
        }
    }
    PointPattern::new(points, w)
}

/// Sample a Poisson process driven by a closed-form field. Constant fields
/// place `Poi(rho |W|)` uniform points directly; other fields are thinned
/// against their exact window maximum.
pub fn simulate_poisson(intensity: &ScalarField, w: Window, seed: RngSeed) -> Result<PointPattern> {
    if intensity.window_min(w) < 0.0 {
        return Err(PplError::InvalidParameter("negative intensity on window".into()));
    }
    match *intensity {
        ScalarField::Constant { value } => {
            let mut rng = seed.stream_rng(Stream::Simulation, 0);
            let points = homogeneous(value, w, &mut rng)?;
            PointPattern::new(points, w)
        }
        _ => simulate_poisson_fn(|u| intensity.eval(u), intensity.window_max(w), w, seed),
    }
}
