//! Hard-core Papangelou fitting and its pseudolikelihood baseline.
//!
//! With a diverging test function `f` applied to the weighted conditional
//! intensity, a fold's innovation is finite only when no validation point
//! sits inside an R-ball around the training set; the search therefore runs
//! R over candidates inside the feasible range and, at each R, finds the
//! activity by a 1-D search seeded by the closed-form per-fold roots
//! `beta_i | R = (1-p) #V_i / (p U_i(R))`, with `U_i(R)` the uncovered area.

use crate::cv::{CvScheme, CvSplit};
use crate::error::{PplError, Result};
use crate::geometry::{
    distance, nearest_point_distances, uncovered_area, PointPattern, QuadratureGrid,
};
use crate::innovations::RatioTransform;
use crate::learning::{minimize, LossKind, SearchSpec};
use crate::rng::RngSeed;
use serde::{Deserialize, Serialize};

/// Loss value at each candidate radius, with the activity optimized out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub range: f64,
    pub beta: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardCoreFit {
    pub beta: f64,
    pub range: f64,
    /// Upper end of the feasible radius interval over the counted folds.
    pub feasible_upper: f64,
    pub loss: f64,
    pub landscape: Vec<LandscapePoint>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PseudolikelihoodFit {
    pub beta: f64,
    pub range: f64,
}

/// Pseudolikelihood baseline: `R = Rbar n/(n+1)` with `Rbar` the minimum
/// pairwise distance, and `beta = #X / |W \ union of R-balls|`.
pub fn fit_hardcore_pseudolikelihood(
    x: &PointPattern,
    grid: &QuadratureGrid,
) -> Result<PseudolikelihoodFit> {
    let n = x.len();
    let r_bar = x.min_pairwise_distance()?;
    let range = r_bar * n as f64 / (n as f64 + 1.0);
    let uncovered = uncovered_area(x, range, grid);
    if uncovered <= 0.0 {
        return Err(PplError::WindowFullyCovered);
    }
    Ok(PseudolikelihoodFit { beta: n as f64 / uncovered, range })
}

/// Per-fold quantities entering the reduced innovation: validation count,
/// uncovered training area per candidate radius, and the fold's own
/// feasibility bound.
struct FoldProfile {
    validation_count: f64,
    uncovered: Vec<f64>,
    cross_min: f64,
}

fn fold_profile(split: &CvSplit, radii: &[f64], grid: &QuadratureGrid) -> FoldProfile {
    let dmin = nearest_point_distances(split.training.points(), grid);
    let cell = grid.cell_area();
    // Uncovered area at radius r counts cells with center distance > r.
    let mut sorted = dmin;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let uncovered = radii
        .iter()
        .map(|&r| {
            let covered = sorted.partition_point(|&d| d <= r);
            (sorted.len() - covered) as f64 * cell
        })
        .collect();
    let mut cross_min = f64::INFINITY;
    for v in split.validation.points() {
        for t in split.training.points() {
            cross_min = cross_min.min(distance(*v, *t));
        }
    }
    FoldProfile { validation_count: split.validation.len() as f64, uncovered, cross_min }
}

/// Reduced-innovation loss at `(beta, radius index)` over the counted folds.
fn loss_at(
    profiles: &[FoldProfile],
    k: usize,
    r_idx: usize,
    beta: f64,
    weight: f64,
    f: RatioTransform,
    kind: LossKind,
) -> f64 {
    let fw = f.apply(weight * beta);
    if !fw.is_finite() {
        return f64::INFINITY;
    }
    let terms = profiles
        .iter()
        .map(|pr| fw * (pr.validation_count - weight * beta * pr.uncovered[r_idx]));
    match kind {
        LossKind::L1 => terms.map(f64::abs).sum::<f64>() / k as f64,
        LossKind::L2 => terms.map(|t| t * t).sum::<f64>() / k as f64,
        LossKind::L3 => (terms.sum::<f64>() / k as f64).powi(2),
    }
}

/// Joint (beta, R) fits for several (transform, loss) cases over one set of
/// splittings, sharing the uncovered-area sweep, which dominates the cost.
///
/// `r_candidates` radii are placed uniformly over `(0, sup R]`; folds whose
/// training set is empty or full are excluded by the cardinality indicator.
pub fn fit_hardcore_cases(
    x: &PointPattern,
    scheme: &CvScheme,
    cases: &[(RatioTransform, LossKind)],
    r_candidates: usize,
    grid: &QuadratureGrid,
    seed: RngSeed,
) -> Result<Vec<HardCoreFit>> {
    if x.len() < 2 {
        return Err(PplError::InsufficientPoints { needed: 2, got: x.len() });
    }
    if r_candidates == 0 {
        return Err(PplError::InvalidParameter("need at least one radius candidate".into()));
    }
    let splits = crate::cv::generate_splits(x, scheme, seed)?;
    let n = x.len();
    let p = scheme.retention();
    let weight = p / (1.0 - p);

    let counted: Vec<&CvSplit> = splits
        .iter()
        .filter(|s| s.training.len() >= 1 && s.training.len() <= n - 1)
        .collect();
    if counted.is_empty() {
        return Err(PplError::NoAdmissibleFolds);
    }
    let k = splits.len();

    // Feasible upper bound before the uncovered-area sweep, so the radius
    // grid only covers admissible values.
    let feasible_upper = counted
        .iter()
        .map(|s| {
            let mut m = f64::INFINITY;
            for v in s.validation.points() {
                for t in s.training.points() {
                    m = m.min(distance(*v, *t));
                }
            }
            m
        })
        .fold(f64::INFINITY, f64::min);
    if !feasible_upper.is_finite() || feasible_upper <= 0.0 {
        return Err(PplError::NoFeasibleParameter);
    }

    let radii: Vec<f64> = (1..=r_candidates)
        .map(|j| feasible_upper * j as f64 / r_candidates as f64)
        .collect();
    let profiles: Vec<FoldProfile> =
        counted.iter().map(|s| fold_profile(s, &radii, grid)).collect();

    let mut fits = Vec::with_capacity(cases.len());
    for &(f, kind) in cases {
        let mut landscape = Vec::with_capacity(radii.len());
        let mut best: Option<(f64, f64, f64)> = None; // (loss, beta, range)
        for (r_idx, &r) in radii.iter().enumerate() {
            // A feasibility guard per fold: closer cross pairs blow up.
            if profiles.iter().any(|pr| pr.cross_min < r) {
                continue;
            }
            // Closed-form per-fold roots seed the activity search bracket.
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for pr in &profiles {
                if pr.uncovered[r_idx] > 0.0 && pr.validation_count > 0.0 {
                    let root = pr.validation_count / (weight * pr.uncovered[r_idx]);
                    lo = lo.min(root);
                    hi = hi.max(root);
                }
            }
            if !lo.is_finite() || hi <= 0.0 {
                continue;
            }
            let spec = SearchSpec::golden(lo * 0.2, hi * 5.0, 1e-7, true);
            let outcome = minimize(
                |b| loss_at(&profiles, k, r_idx, b[0], weight, f, kind),
                &spec,
            )?;
            let (beta, value) = (outcome.argmin[0], outcome.value);
            landscape.push(LandscapePoint { range: r, beta, loss: value });
            if best.map_or(true, |(bl, _, _)| value < bl) {
                best = Some((value, beta, r));
            }
        }
        let (loss, beta, range) = best.ok_or(PplError::NoFeasibleParameter)?;
        fits.push(HardCoreFit { beta, range, feasible_upper, loss, landscape });
    }
    Ok(fits)
}

/// Single-case convenience wrapper around [`fit_hardcore_cases`].
pub fn fit_hardcore(
    x: &PointPattern,
    scheme: &CvScheme,
    f: RatioTransform,
    kind: LossKind,
    r_candidates: usize,
    grid: &QuadratureGrid,
    seed: RngSeed,
) -> Result<HardCoreFit> {
    let mut fits = fit_hardcore_cases(x, scheme, &[(f, kind)], r_candidates, grid, seed)?;
    Ok(fits.remove(0))
}
