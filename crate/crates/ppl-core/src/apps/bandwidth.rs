//! Kernel bandwidth selection by point process learning, with the two
//! classical baselines used for comparison.
//!
//! Selection always runs on the uncorrected estimator; the final surface is
//! computed with the local edge correction at the selected bandwidth. With
//! the inverse transform the innovation integral reduces to the measure of
//! the estimator's support, and the support of a Gaussian kernel estimate is
//! the whole window once every grid cell is within kernel reach of a
//! training point, so the quadrature pass is only needed at tiny bandwidths.

use crate::cv::{CvScheme, CvSplit};
use crate::error::{PplError, Result};
use crate::geometry::{nearest_point_distances, Point, PointPattern, QuadratureGrid, Window};
use crate::innovations::RatioTransform;
use crate::kernel::{window_mass, EdgeCorrection, KernelEstimator};
use crate::learning::{minimize, LossKind, SearchSpec};
use crate::rng::RngSeed;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Squared distance beyond `SUPPORT_FACTOR * bandwidth` underflows the
/// Gaussian kernel to exactly zero in f64.
const SUPPORT_FACTOR: f64 = 38.7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandwidthFit {
    pub bandwidth: f64,
    /// Value of the selection objective at the chosen bandwidth.
    pub objective: f64,
    /// Every (bandwidth, objective) pair the search evaluated.
    pub trace: Vec<(f64, f64)>,
}

/// Default log-scale golden-section search over `[0.01 l, 0.7 l]` with `l`
/// the shorter window side.
pub fn default_bandwidth_search(w: Window) -> SearchSpec {
    let l = w.short_side();
    SearchSpec::golden(0.01 * l, 0.7 * l, 1e-3, true)
}

/// Kernel intensity estimate at one location; see [`crate::kernel`].
pub fn kernel_intensity(
    x: &PointPattern,
    bandwidth: f64,
    u: Point,
    edge: EdgeCorrection,
) -> Result<f64> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(PplError::InvalidParameter(format!("bandwidth {bandwidth}")));
    }
    Ok(crate::kernel::kernel_intensity(x, bandwidth, u, edge))
}

/// The estimate over all grid cell centers, row-major.
pub fn kernel_surface(
    x: &PointPattern,
    bandwidth: f64,
    edge: EdgeCorrection,
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(PplError::InvalidParameter(format!("bandwidth {bandwidth}")));
    }
    let est = KernelEstimator::new(x.points(), bandwidth, x.window(), edge);
    Ok(grid.centers().map(|c| est.eval(c)).collect())
}

struct FoldData {
    training: Vec<Point>,
    validation: Vec<Point>,
    counted: bool,
    /// Sorted cell-center distances to the training set, built on first use.
    sorted_dmin: OnceLock<Vec<f64>>,
}

impl FoldData {
    fn from_splits(splits: &[CvSplit]) -> Vec<FoldData> {
        splits
            .iter()
            .map(|s| {
                let n = s.training.len() + s.validation.len();
                FoldData {
                    training: s.training.points().to_vec(),
                    validation: s.validation.points().to_vec(),
                    counted: s.training.len() >= 1 && s.training.len() <= n.saturating_sub(1),
                    sorted_dmin: OnceLock::new(),
                }
            })
            .collect()
    }

    /// Measure of `{rho_hat > 0}` on the grid.
    fn support_area(&self, bandwidth: f64, grid: &QuadratureGrid) -> f64 {
        let w = grid.window();
        let reach = SUPPORT_FACTOR * bandwidth;
        if reach >= w.width().hypot(w.height()) {
            return w.area();
        }
        let sorted = self.sorted_dmin.get_or_init(|| {
            let mut d = nearest_point_distances(&self.training, grid);
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d
        });
        let inside = sorted.partition_point(|&d| d < reach);
        inside as f64 * grid.cell_area()
    }
}

/// Per-fold innovation of the non-parametric track at one bandwidth;
/// `None` when the fold is infeasible there (a zero estimate under a
/// diverging transform).
fn fold_innovation(
    fold: &FoldData,
    bandwidth: f64,
    weight: f64,
    f: RatioTransform,
    grid: &QuadratureGrid,
) -> Result<Option<f64>> {
    let w = grid.window();
    let est = KernelEstimator::new(&fold.training, bandwidth, w, EdgeCorrection::None);
    let mut sum = 0.0;
    for &v in &fold.validation {
        let rho = weight * est.eval(v);
        if rho <= 0.0 {
            return Ok(None);
        }
        sum += f.apply(rho);
    }
    let integral = match f {
        RatioTransform::Inverse => fold.support_area(bandwidth, grid),
        _ => crate::geometry::integrate_on_window(
            |u| f.times_x(weight * est.eval(u)),
            grid,
        )?,
    };
    Ok(Some(sum - integral))
}

/// Bandwidth selection by minimizing an innovation loss over CV splittings
/// (the point process learning selector).
pub fn select_bandwidth_ppl(
    x: &PointPattern,
    scheme: &CvScheme,
    f: RatioTransform,
    kind: LossKind,
    grid: &QuadratureGrid,
    seed: RngSeed,
    search: Option<SearchSpec>,
) -> Result<BandwidthFit> {
    let splits = crate::cv::generate_splits(x, scheme, seed)?;
    let folds = FoldData::from_splits(&splits);
    let k = folds.len() as f64;
    let p = scheme.retention();
    let weight = p / (1.0 - p);
    let spec = search.unwrap_or_else(|| default_bandwidth_search(x.window()));

    let objective = |theta: &[f64]| -> f64 {
        let theta = theta[0];
        let mut acc = 0.0;
        for fold in &folds {
            if !fold.counted {
                continue;
            }
            match fold_innovation(fold, theta, weight, f, grid) {
                Ok(Some(v)) => {
                    acc += match kind {
                        LossKind::L1 => v.abs(),
                        LossKind::L2 => v * v,
                        LossKind::L3 => v,
                    }
                }
                _ => return f64::INFINITY,
            }
        }
        match kind {
            LossKind::L1 | LossKind::L2 => acc / k,
            LossKind::L3 => (acc / k).powi(2),
        }
    };

    let outcome = minimize(objective, &spec)?;
    Ok(BandwidthFit {
        bandwidth: outcome.argmin[0],
        objective: outcome.value,
        trace: outcome.trace.into_iter().map(|(x, v)| (x[0], v)).collect(),
    })
}

/// Baseline: choose the bandwidth making the sum of reciprocal intensity
/// estimates match the window area, `(sum_x 1/rho_hat(x; X) - |W|)^2`, with
/// no edge correction and the full pattern in the estimate.
pub fn select_bandwidth_cvl(
    x: &PointPattern,
    grid: &QuadratureGrid,
    search: Option<SearchSpec>,
) -> Result<BandwidthFit> {
    if x.is_empty() {
        return Err(PplError::InsufficientPoints { needed: 1, got: 0 });
    }
    let w = grid.window();
    let spec = search.unwrap_or_else(|| default_bandwidth_search(w));
    let area = w.area();
    let objective = |theta: &[f64]| -> f64 {
        let est = KernelEstimator::new(x.points(), theta[0], w, EdgeCorrection::None);
        let mut sum = 0.0;
        for &pt in x.points() {
            let rho = est.eval(pt);
            if rho <= 0.0 {
                return f64::INFINITY;
            }
            sum += 1.0 / rho;
        }
        (sum - area).powi(2)
    };
    let outcome = minimize(objective, &spec)?;
    Ok(BandwidthFit {
        bandwidth: outcome.argmin[0],
        objective: outcome.value,
        trace: outcome.trace.into_iter().map(|(x, v)| (x[0], v)).collect(),
    })
}

/// Baseline: CV-generalized Poisson likelihood. Maximizes
/// `(1/k) sum_i I_i (sum_{x in V_i} log rho_tilde(x; T_i) - \int_W rho_tilde)`
/// with `rho_tilde = p/(1-p) * rho_hat` and no edge correction; folds with a
/// zero estimate at a validation point are excluded by their indicator.
pub fn select_bandwidth_poisson_lik_cv(
    x: &PointPattern,
    scheme: &CvScheme,
    grid: &QuadratureGrid,
    seed: RngSeed,
    search: Option<SearchSpec>,
) -> Result<BandwidthFit> {
    let splits = crate::cv::generate_splits(x, scheme, seed)?;
    let folds = FoldData::from_splits(&splits);
    let w = grid.window();
    let p = scheme.retention();
    let weight = p / (1.0 - p);
    let spec = search.unwrap_or_else(|| default_bandwidth_search(w));
    let k = folds.len() as f64;

    let objective = |theta: &[f64]| -> f64 {
        let theta = theta[0];
        let mut total = 0.0;
        let mut included = 0usize;
        for fold in &folds {
            if !fold.counted {
                continue;
            }
            let est = KernelEstimator::new(&fold.training, theta, w, EdgeCorrection::None);
            let mut log_sum = 0.0;
            let mut ok = true;
            for &v in &fold.validation {
                let rho = weight * est.eval(v);
                if rho <= 0.0 {
                    ok = false;
                    break;
                }
                log_sum += rho.ln();
            }
            if !ok {
                continue;
            }
            let integral: f64 =
                weight * fold.training.iter().map(|&t| window_mass(t, theta, w)).sum::<f64>();
            total += log_sum - integral;
            included += 1;
        }
        if included == 0 {
            return f64::INFINITY;
        }
        -(total / k)
    };

    let outcome = minimize(objective, &spec)?;
    Ok(BandwidthFit {
        bandwidth: outcome.argmin[0],
        objective: -outcome.value,
        trace: outcome.trace.into_iter().map(|(x, v)| (x[0], -v)).collect(),
    })
}
