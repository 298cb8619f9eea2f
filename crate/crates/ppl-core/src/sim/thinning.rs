//! Independent thinning: each point is retained with a probability given by
//! a retention function, independently of all other points.

use crate::error::{PplError, Result};
use crate::geometry::{Point, PointPattern};
use crate::rng::{RngSeed, Stream};
use rand::Rng;

/// Split a pattern into (retained, removed). `retained ∪ removed = x`,
/// disjoint; each point is kept with probability `retention(point)`.
pub fn thin_independent<F: Fn(Point) -> f64>(
    x: &PointPattern,
    retention: F,
    seed: RngSeed,
) -> Result<(PointPattern, PointPattern)> {
    let mut rng = seed.stream_rng(Stream::Thinning, 0);
    let mut retained = Vec::new();
    let mut removed = Vec::new();
    for &p in x.points() {
        let prob = retention(p);
        if !(0.0..=1.0).contains(&prob) || prob.is_nan() {
            return Err(PplError::InvalidRetention(prob));
        }
        if rng.random::<f64>() < prob {
            retained.push(p);
        } else {
            removed.push(p);
        }
    }
    let w = x.window();
    Ok((PointPattern::new(retained, w)?, PointPattern::new(removed, w)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;

    fn fixture() -> PointPattern {
        let pts = (0..20)
            .map(|i| Point::new((i as f64 + 0.5) / 20.0, ((i * 7 % 20) as f64 + 0.5) / 20.0))
            .collect();
        PointPattern::new(pts, Window::unit()).unwrap()
    }

    #[test]
    fn retention_one_keeps_everything() {
        let x = fixture();
        let (z, y) = thin_independent(&x, |_| 1.0, RngSeed(3)).unwrap();
        assert_eq!(z, x);
        assert!(y.is_empty());
    }

    #[test]
    fn retention_zero_removes_everything() {
        let x = fixture();
        let (z, y) = thin_independent(&x, |_| 0.0, RngSeed(3)).unwrap();
        assert!(z.is_empty());
        assert_eq!(y, x);
    }

    #[test]
    fn parts_partition_the_source() {
        let x = fixture();
        let (z, y) = thin_independent(&x, |_| 0.4, RngSeed(8)).unwrap();
        assert_eq!(z.len() + y.len(), x.len());
        for p in x.points() {
            let in_z = z.points().contains(p);
            let in_y = y.points().contains(p);
            assert!(in_z ^ in_y);
        }
    }

    #[test]
    fn invalid_retention_rejected() {
        let x = fixture();
        assert!(thin_independent(&x, |_| 1.5, RngSeed(1)).is_err());
        assert!(thin_independent(&x, |_| -0.1, RngSeed(1)).is_err());
    }
}
