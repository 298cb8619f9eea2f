//! Replicate-level performance metrics.
//!
//! Scalar estimators report absolute bias, variance and MSE; intensity
//! surfaces report IAB, ISB, IV and MISE against a true field on a shared
//! grid. Variances use the population convention (divide by the replicate
//! count) so that MSE = bias^2 + variance holds exactly.

use crate::error::{PplError, Result};
use crate::geometry::QuadratureGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalarMetricSet {
    pub absolute_bias: f64,
    pub variance: f64,
    pub mse: f64,
    /// Standard error of the replicate mean.
    pub se_mean: f64,
    /// Standard error of the MSE estimate.
    pub se_mse: f64,
    pub replicates: usize,
}

pub fn scalar_metrics(estimates: &[f64], truth: f64) -> Result<ScalarMetricSet> {
    if estimates.len() < 2 {
        return Err(PplError::InsufficientPoints { needed: 2, got: estimates.len() });
    }
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let variance = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / m;
    let sq_errors: Vec<f64> = estimates.iter().map(|e| (e - truth).powi(2)).collect();
    let mse = sq_errors.iter().sum::<f64>() / m;
    let var_sq = sq_errors.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / m;
    Ok(ScalarMetricSet {
        absolute_bias: (mean - truth).abs(),
        variance,
        mse,
        se_mean: (variance / m).sqrt(),
        se_mse: (var_sq / m).sqrt(),
        replicates: estimates.len(),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurfaceMetricSet {
    /// Integrated absolute bias.
    pub iab: f64,
    /// Integrated squared bias.
    pub isb: f64,
    /// Integrated variance.
    pub iv: f64,
    /// Mean integrated squared error, ISB + IV by construction.
    pub mise: f64,
    pub replicates: usize,
}

/// Metrics for replicate surfaces against a true field, all sampled on the
/// same grid (row-major cell order).
pub fn surface_metrics(
    surfaces: &[Vec<f64>],
    truth: &[f64],
    grid: &QuadratureGrid,
) -> Result<SurfaceMetricSet> {
    if surfaces.is_empty() {
        return Err(PplError::InsufficientPoints { needed: 1, got: 0 });
    }
    let cells = grid.num_cells();
    if truth.len() != cells || surfaces.iter().any(|s| s.len() != cells) {
        return Err(PplError::GridMismatch(format!(
            "expected {cells} cells per surface",
        )));
    }
    let m = surfaces.len() as f64;
    let (mut iab, mut isb, mut iv) = (0.0, 0.0, 0.0);
    for c in 0..cells {
        let mean = surfaces.iter().map(|s| s[c]).sum::<f64>() / m;
        let var = surfaces.iter().map(|s| (s[c] - mean).powi(2)).sum::<f64>() / m;
        let bias = mean - truth[c];
        iab += bias.abs();
        isb += bias * bias;
        iv += var;
    }
    let a = grid.cell_area();
    let (iab, isb, iv) = (iab * a, isb * a, iv * a);
    Ok(SurfaceMetricSet { iab, isb, iv, mise: isb + iv, replicates: surfaces.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_basic_example() {
        let m = scalar_metrics(&[3.0, 5.0], 4.0).unwrap();
        assert_relative_eq!(m.absolute_bias, 0.0);
        assert_relative_eq!(m.variance, 1.0);
        assert_relative_eq!(m.mse, 1.0);
    }

    #[test]
    fn scalar_all_equal_truth() {
        let m = scalar_metrics(&[4.0, 4.0, 4.0], 4.0).unwrap();
        assert_eq!(m.absolute_bias, 0.0);
        assert_eq!(m.variance, 0.0);
        assert_eq!(m.mse, 0.0);
    }

    #[test]
    fn mse_identity_on_random_inputs() {
        let estimates: Vec<f64> = (0..57).map(|i| ((i * 2654435761u64 % 1000) as f64) / 91.0).collect();
        let truth = 5.3;
        let m = scalar_metrics(&estimates, truth).unwrap();
        assert!((m.mse - (m.absolute_bias.powi(2) + m.variance)).abs() < 1e-12 * m.mse.max(1.0));
    }

    #[test]
    fn scalar_needs_two() {
        assert!(scalar_metrics(&[1.0], 1.0).is_err());
    }

    #[test]
    fn surface_single_replicate_equal_truth() {
        let grid = QuadratureGrid::new(Window::unit(), 8).unwrap();
        let truth: Vec<f64> = grid.centers().map(|c| 1.0 + c.x).collect();
        let m = surface_metrics(&[truth.clone()], &truth, &grid).unwrap();
        assert_eq!(m.iab, 0.0);
        assert_eq!(m.isb, 0.0);
        assert_eq!(m.iv, 0.0);
        assert_eq!(m.mise, 0.0);
    }

    #[test]
    fn surface_symmetric_pair() {
        let grid = QuadratureGrid::new(Window::unit(), 16).unwrap();
        let truth = vec![2.0; grid.num_cells()];
        let c = 0.7;
        let hi: Vec<f64> = truth.iter().map(|t| t + c).collect();
        let lo: Vec<f64> = truth.iter().map(|t| t - c).collect();
        let m = surface_metrics(&[hi, lo], &truth, &grid).unwrap();
        assert_relative_eq!(m.isb, 0.0, epsilon = 1e-12);
        assert_relative_eq!(m.iv, c * c, max_relative = 1e-12);
        assert_relative_eq!(m.mise, c * c, max_relative = 1e-12);
    }

    #[test]
    fn surface_grid_mismatch_rejected() {
        let grid = QuadratureGrid::new(Window::unit(), 8).unwrap();
        let truth = vec![1.0; grid.num_cells()];
        let bad = vec![vec![1.0; grid.num_cells() - 1]];
        assert!(matches!(
            surface_metrics(&bad, &truth, &grid),
            Err(PplError::GridMismatch(_))
        ));
    }

    #[test]
    fn surface_permutation_invariance() {
        let grid = QuadratureGrid::new(Window::unit(), 8).unwrap();
        let truth = vec![1.0; grid.num_cells()];
        let a = vec![1.5; grid.num_cells()];
        let b = vec![0.25; grid.num_cells()];
        let c = vec![1.1; grid.num_cells()];
        let m1 = surface_metrics(&[a.clone(), b.clone(), c.clone()], &truth, &grid).unwrap();
        let m2 = surface_metrics(&[c, a, b], &truth, &grid).unwrap();
        assert_relative_eq!(m1.mise, m2.mise, max_relative = 1e-12);
        assert_relative_eq!(m1.iab, m2.iab, max_relative = 1e-12);
    }
}
