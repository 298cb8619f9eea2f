//! Constant-intensity estimation from CV splittings.
//!
//! The per-fold squared-innovation minimizers have the closed form
//! `theta_i = theta_h(x_i^T) / (1 - p)`, where `theta_h` is the h-weighted
//! intensity estimate; the median of these minimizes the L1 loss and their
//! mean minimizes both L2 and L3. Both combiners are computed here in closed
//! form, with the generic search available as a cross-check.

use crate::cv::{CvScheme, CvSplit};
use crate::error::{PplError, Result};
use crate::geometry::{PointPattern, Window};
use crate::innovations::TestFunction;
use crate::learning::median;
use crate::rng::RngSeed;
use serde::{Deserialize, Serialize};

/// Exact `\int_W h` for the estimator denominators; errors when the integral
/// is zero, divergent, or has no closed form.
pub fn test_function_integral(h: &TestFunction, w: Window) -> Result<f64> {
    let integral = h
        .window_integral(w)
        .ok_or(PplError::DegenerateTestFunction("divergent or unavailable"))?;
    if integral == 0.0 || !integral.is_finite() {
        return Err(PplError::DegenerateTestFunction("zero or non-finite"));
    }
    Ok(integral)
}

/// h-weighted intensity estimate `sum_{x in X} h(x) / \int_W h(u) du`.
pub fn h_weighted_estimate(x: &PointPattern, h: &TestFunction) -> Result<f64> {
    let integral = test_function_integral(h, x.window())?;
    let sum: f64 = x.points().iter().map(|&p| h.eval_plain(p)).sum();
    if !sum.is_finite() {
        return Err(PplError::DegenerateTestFunction("non-finite point sum"));
    }
    Ok(sum / integral)
}

/// Classical estimate `#X / |W|`.
pub fn classical_estimate(x: &PointPattern) -> f64 {
    x.len() as f64 / x.window().area()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldIndicator {
    /// Count only folds with a non-empty training set.
    NonEmptyTraining,
    /// Count every fold; an empty training set contributes the estimate 0.
    AlwaysOne,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantIntensityResult {
    /// Median combiner (the L1 minimizer).
    pub theta_median: f64,
    /// Mean combiner (the common L2 and L3 minimizer).
    pub theta_mean: f64,
    /// Classical estimate `#X / |W|`.
    pub theta_classical: f64,
    /// h-weighted estimate on the full pattern.
    pub theta_h_weighted: f64,
    /// Number of counted folds.
    pub counted_folds: usize,
}

/// Per-fold estimates `theta_h(x_i^T) / (1 - p)` for precomputed splits.
pub fn fold_estimates_from_splits(
    splits: &[CvSplit],
    h: &TestFunction,
    indicator: FoldIndicator,
) -> Result<Vec<f64>> {
    if splits.is_empty() {
        return Err(PplError::NoAdmissibleFolds);
    }
    let w = splits[0].training.window();
    let integral = test_function_integral(h, w)?;
    let mut estimates = Vec::with_capacity(splits.len());
    for s in splits {
        let counted = match indicator {
            FoldIndicator::AlwaysOne => true,
            FoldIndicator::NonEmptyTraining => !s.training.is_empty(),
        };
        if !counted {
            continue;
        }
        if s.training.is_empty() {
            // 0/0 = 0 convention for the always-counted mode.
            estimates.push(0.0);
            continue;
        }
        let sum: f64 = s.training.points().iter().map(|&p| h.eval_plain(p)).sum();
        if !sum.is_finite() {
            return Err(PplError::DegenerateTestFunction("non-finite point sum"));
        }
        estimates.push(sum / integral / (1.0 - s.retention));
    }
    if estimates.is_empty() {
        return Err(PplError::NoAdmissibleFolds);
    }
    Ok(estimates)
}

/// Fit a constant intensity by CV: median and mean combiners plus baselines.
pub fn fit_constant_intensity(
    x: &PointPattern,
    scheme: &CvScheme,
    h: &TestFunction,
    indicator: FoldIndicator,
    seed: RngSeed,
) -> Result<ConstantIntensityResult> {
    let splits = crate::cv::generate_splits(x, scheme, seed)?;
    let estimates = fold_estimates_from_splits(&splits, h, indicator)?;
    let theta_median = median(&estimates).expect("non-empty estimates");
    let theta_mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    Ok(ConstantIntensityResult {
        theta_median,
        theta_mean,
        theta_classical: classical_estimate(x),
        theta_h_weighted: h_weighted_estimate(x, h)?,
        counted_folds: estimates.len(),
    })
}

/// Variance of the mean-combiner estimator under a Poisson model
/// (pair correlation identically one):
/// `(p / ((1-p) k) + 1) * theta0 * \int h^2 / (\int h)^2`.
pub fn constant_intensity_variance_oracle(
    theta0: f64,
    h: &TestFunction,
    p: f64,
    k: usize,
    w: Window,
) -> Result<f64> {
    let ih = test_function_integral(h, w)?;
    let ih2 = h
        .window_integral_sq(w)
        .ok_or(PplError::DegenerateTestFunction("divergent h^2 integral"))?;
    Ok((p / ((1.0 - p) * k as f64) + 1.0) * theta0 * ih2 / (ih * ih))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use approx::assert_relative_eq;

    fn n_points(n: usize) -> PointPattern {
        let pts = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                Point::new(t, (0.31 + 0.41 * i as f64).fract())
            })
            .collect();
        PointPattern::new(pts, Window::unit()).unwrap()
    }

    #[test]
    fn constant_h_reduces_to_classical() {
        let x = n_points(250);
        assert_relative_eq!(
            h_weighted_estimate(&x, &TestFunction::one()).unwrap(),
            250.0,
            max_relative = 1e-12
        );
        // Scale invariance.
        assert_relative_eq!(
            h_weighted_estimate(&x, &TestFunction::Constant { value: 5.0 }).unwrap(),
            250.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn singular_h_matches_quadrature_oracle() {
        let w = Window::unit();
        let x = PointPattern::new(
            vec![Point::new(0.2, 0.3), Point::new(0.6, 0.9), Point::new(0.45, 0.05)],
            w,
        )
        .unwrap();
        let h = TestFunction::CoordPower { gamma: -0.4 };
        let est = h_weighted_estimate(&x, &h).unwrap();
        // Oracle: same ratio with the integral from high-resolution quadrature.
        let grid = crate::geometry::QuadratureGrid::new(w, 2048).unwrap();
        let integral =
            crate::geometry::integrate_on_window(|u| h.eval_plain(u), &grid).unwrap();
        let sum: f64 = x.points().iter().map(|&p| h.eval_plain(p)).sum();
        assert_relative_eq!(est, sum / integral, max_relative = 1e-2);
    }

    #[test]
    fn divergent_h_is_rejected() {
        let x = n_points(10);
        assert!(h_weighted_estimate(&x, &TestFunction::CoordPower { gamma: -1.0 }).is_err());
        assert!(h_weighted_estimate(&x, &TestFunction::Constant { value: 0.0 }).is_err());
    }

    #[test]
    fn per_fold_closed_form() {
        // One fold with 45 training points at p = 0.5 estimates 90.
        let training = n_points(45);
        let validation = n_points(45);
        let split = CvSplit {
            training,
            validation,
            evaluation: None,
            retention: 0.5,
            fold: 0,
        };
        let est =
            fold_estimates_from_splits(&[split], &TestFunction::one(), FoldIndicator::NonEmptyTraining)
                .unwrap();
        assert_relative_eq!(est[0], 90.0, max_relative = 1e-12);
    }

    #[test]
    fn mean_combiner_of_two_folds() {
        let mk = |n: usize| CvSplit {
            training: n_points(n),
            validation: n_points(3),
            evaluation: None,
            retention: 0.5,
            fold: n,
        };
        let est = fold_estimates_from_splits(
            &[mk(45), mk(55)],
            &TestFunction::one(),
            FoldIndicator::NonEmptyTraining,
        )
        .unwrap();
        let mean = est.iter().sum::<f64>() / est.len() as f64;
        assert_relative_eq!(mean, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn variance_oracle_values() {
        let w = Window::unit();
        let v = constant_intensity_variance_oracle(250.0, &TestFunction::one(), 0.5, 400, w)
            .unwrap();
        assert_relative_eq!(v, 250.625, max_relative = 1e-12);
        // k -> infinity limit.
        let v = constant_intensity_variance_oracle(250.0, &TestFunction::one(), 0.5, 4_000_000, w)
            .unwrap();
        assert!((v - 250.0).abs() < 1e-3);
    }
}
