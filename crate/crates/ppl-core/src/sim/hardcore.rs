//! Hard-core process simulation by Metropolis-Hastings birth-death moves.
//!
//! Target density (relative to a unit-rate Poisson process) is
//! `beta^n 1{no pair closer than R}`, whose Papangelou conditional intensity
//! is `beta * 1{u not covered by an R-ball}`. Uniform birth proposals,
//! uniform death proposals, standard acceptance ratios.

use crate::error::{PplError, Result};
use crate::geometry::{Point, PointPattern, Window};
use crate::rng::{RngSeed, Stream};
use crate::sim::poisson::uniform_point;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardCoreSpec {
    /// Activity beta.
    pub beta: f64,
    /// Hard-core range R: no two points closer than this.
    pub range: f64,
    /// Number of birth-death proposals before the state is returned.
    pub burn_in: usize,
}

impl HardCoreSpec {
    pub const DEFAULT_BURN_IN: usize = 100_000;

    pub fn new(beta: f64, range: f64) -> HardCoreSpec {
        HardCoreSpec { beta, range, burn_in: Self::DEFAULT_BURN_IN }
    }
}

pub fn simulate_hardcore(spec: &HardCoreSpec, w: Window, seed: RngSeed) -> Result<PointPattern> {
    if !(spec.beta >= 0.0) || !spec.beta.is_finite() {
        return Err(PplError::InvalidParameter(format!("beta {}", spec.beta)));
    }
    if !(spec.range > 0.0) || !spec.range.is_finite() {
        return Err(PplError::InvalidParameter(format!("range {}", spec.range)));
    }
    if spec.burn_in == 0 {
        return Err(PplError::InvalidParameter("burn_in must be positive".into()));
    }

    let mut rng = seed.stream_rng(Stream::Simulation, 0);
    let area = w.area();
    let r2 = spec.range * spec.range;
    let mut state: Vec<Point> = Vec::new();

    for _ in 0..spec.burn_in {
        if rng.random::<f64>() < 0.5 {
            // Birth.
            let u = uniform_point(w, &mut rng);
            let blocked = state.iter().any(|p| {
                let dx = p.x - u.x;
                let dy = p.y - u.y;
                dx * dx + dy * dy <= r2
            });
            if blocked {
                continue;
            }
            let ratio = spec.beta * area / (state.len() as f64 + 1.0);
            if rng.random::<f64>() < ratio {
                state.push(u);
            }
        } else if !state.is_empty() {
            // Death.
            let idx = rng.random_range(0..state.len());
            let ratio = state.len() as f64 / (spec.beta * area);
            if rng.random::<f64>() < ratio {
                state.swap_remove(idx);
            }
        }
    }

    PointPattern::new(state, w)
}
