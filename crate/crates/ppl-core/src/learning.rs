//! Loss functions over fold innovations and derivative-free minimization.
//!
//! Losses may be non-smooth (absolute values, feasibility cliffs that jump
//! to infinity), so the searches are a multi-level grid refinement for boxes
//! up to two dimensions and golden section for declared-unimodal 1-D
//! problems. Both start from a scan, which also handles infinite plateaus
//! from infeasible parameter regions.

use crate::cv::CvSplit;
use crate::error::{PplError, Result};
use crate::geometry::QuadratureGrid;
use crate::innovations::{
    bivariate_innovation, EstimatorFamily, IndicatorMode, InnovationValue, TestFunction, WeightKind,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean absolute innovation.
    L1,
    /// Mean squared innovation.
    L2,
    /// Squared mean innovation.
    L3,
}

impl LossKind {
    pub fn label(&self) -> &'static str {
        match self {
            LossKind::L1 => "l1",
            LossKind::L2 => "l2",
            LossKind::L3 => "l3",
        }
    }
}

/// Combine fold innovations into a loss. A counted fold flagged infeasible
/// forces the loss to `+inf`; uncounted folds contribute 0 through their
/// indicator.
pub fn loss(values: &[InnovationValue], kind: LossKind) -> Result<f64> {
    if values.is_empty() {
        return Err(PplError::EmptyInnovations);
    }
    let k = values.len() as f64;
    if values.iter().any(|v| v.counted && !v.feasible) {
        return Ok(f64::INFINITY);
    }
    let out = match kind {
        LossKind::L1 => values.iter().map(|v| v.effective().abs()).sum::<f64>() / k,
        LossKind::L2 => values.iter().map(|v| v.effective().powi(2)).sum::<f64>() / k,
        LossKind::L3 => (values.iter().map(|v| v.effective()).sum::<f64>() / k).powi(2),
    };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SearchMethod {
    /// Golden-section on a (presumed unimodal) 1-D objective.
    GoldenSection,
    /// Repeated scan-and-zoom; works on any box up to two dimensions.
    GridRefine { levels: usize, points: usize },
}

impl Default for SearchMethod {
    fn default() -> SearchMethod {
        SearchMethod::GridRefine { levels: 3, points: 33 }
    }
}

/// Search region and convergence control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// Per-dimension bounds.
    pub bounds: Vec<(f64, f64)>,
    pub method: SearchMethod,
    /// Width tolerance in the search coordinate (log coordinate when
    /// `log_scale` is set, so it acts as a relative tolerance there).
    pub tolerance: f64,
    /// Search scale parameters on a log axis (bounds must be positive).
    pub log_scale: bool,
}

impl SearchSpec {
    pub fn golden(lo: f64, hi: f64, tolerance: f64, log_scale: bool) -> SearchSpec {
        SearchSpec { bounds: vec![(lo, hi)], method: SearchMethod::GoldenSection, tolerance, log_scale }
    }

    pub fn grid(bounds: Vec<(f64, f64)>, levels: usize, points: usize, tolerance: f64) -> SearchSpec {
        SearchSpec {
            bounds,
            method: SearchMethod::GridRefine { levels, points },
            tolerance,
            log_scale: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() || self.bounds.len() > 2 {
            return Err(PplError::InvalidParameter(
                "search supports one- and two-dimensional boxes".into(),
            ));
        }
        for &(lo, hi) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(PplError::InvalidParameter(format!("search bounds ({lo}, {hi})")));
            }
            if self.log_scale && lo <= 0.0 {
                return Err(PplError::InvalidParameter("log-scale search needs positive bounds".into()));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(PplError::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Every (parameter, loss) pair a search evaluated, for landscape records.
pub type SearchTrace = Vec<(Vec<f64>, f64)>;

pub struct SearchOutcome {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub trace: SearchTrace,
}

const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_8;
const SCAN_POINTS: usize = 33;

/// Minimize a possibly non-smooth objective over the spec's box.
///
/// The objective may return `+inf` inside infeasible regions; an error is
/// raised only when no evaluated point is finite.
pub fn minimize<F: Fn(&[f64]) -> f64>(objective: F, spec: &SearchSpec) -> Result<SearchOutcome> {
    spec.validate()?;
    let fwd = |x: f64| if spec.log_scale { x.ln() } else { x };
    let back = |t: f64| if spec.log_scale { t.exp() } else { t };

    match (&spec.method, spec.bounds.len()) {
        (SearchMethod::GoldenSection, 1) => {
            let (lo, hi) = spec.bounds[0];
            let (a, b) = (fwd(lo), fwd(hi));
            let mut trace: SearchTrace = Vec::new();
            let mut eval = |t: f64| {
                let x = back(t);
                let v = objective(&[x]);
                trace.push((vec![x], v));
                v
            };

            // Scan for a finite bracket.
            let mut best_i = usize::MAX;
            let mut best_v = f64::INFINITY;
            let step = (b - a) / (SCAN_POINTS - 1) as f64;
            for i in 0..SCAN_POINTS {
                let v = eval(a + step * i as f64);
                if v < best_v {
                    best_v = v;
                    best_i = i;
                }
            }
            if best_i == usize::MAX || !best_v.is_finite() {
                return Err(PplError::NoFeasibleParameter);
            }
            let mut lo_t = a + step * best_i.saturating_sub(1) as f64;
            let mut hi_t = a + step * (best_i + 1).min(SCAN_POINTS - 1) as f64;

            let (mut best_x, mut best_f) = (a + step * best_i as f64, best_v);
            let mut c = hi_t - GOLDEN_RATIO * (hi_t - lo_t);
            let mut d = lo_t + GOLDEN_RATIO * (hi_t - lo_t);
            let mut fc = eval(c);
            let mut fd = eval(d);
            for _ in 0..256 {
                if hi_t - lo_t <= spec.tolerance {
                    break;
                }
                if fc <= fd {
                    hi_t = d;
                    d = c;
                    fd = fc;
                    c = hi_t - GOLDEN_RATIO * (hi_t - lo_t);
                    fc = eval(c);
                } else {
                    lo_t = c;
                    c = d;
                    fc = fd;
                    d = lo_t + GOLDEN_RATIO * (hi_t - lo_t);
                    fd = eval(d);
                }
                for &(t, f) in [(c, fc), (d, fd)].iter() {
                    if f < best_f {
                        best_f = f;
                        best_x = t;
                    }
                }
            }
            let mid = 0.5 * (lo_t + hi_t);
            let fmid = eval(mid);
            if fmid < best_f {
                best_f = fmid;
                best_x = mid;
            }
            Ok(SearchOutcome { argmin: vec![back(best_x)], value: best_f, trace })
        }
        (SearchMethod::GoldenSection, _) => Err(PplError::InvalidParameter(
            "golden section is one-dimensional".into(),
        )),
        (&SearchMethod::GridRefine { levels, points }, dim) => {
            if points < 3 || levels == 0 {
                return Err(PplError::InvalidParameter("grid refine needs points >= 3, levels >= 1".into()));
            }
            let mut trace: SearchTrace = Vec::new();
            let mut bounds: Vec<(f64, f64)> =
                spec.bounds.iter().map(|&(lo, hi)| (fwd(lo), fwd(hi))).collect();
            let full: Vec<(f64, f64)> = bounds.clone();
            let mut best: Option<(Vec<f64>, f64)> = None;

            for _level in 0..levels {
                let axis: Vec<Vec<f64>> = bounds
                    .iter()
                    .map(|&(lo, hi)| {
                        (0..points)
                            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                            .collect()
                    })
                    .collect();
                let mut level_best: Option<(Vec<f64>, f64)> = None;
                let cells = if dim == 1 { points } else { points * points };
                for idx in 0..cells {
                    let t: Vec<f64> = if dim == 1 {
                        vec![axis[0][idx]]
                    } else {
                        vec![axis[0][idx % points], axis[1][idx / points]]
                    };
                    let x: Vec<f64> = t.iter().map(|&ti| back(ti)).collect();
                    let v = objective(&x);
                    trace.push((x, v));
                    if v.is_finite() && level_best.as_ref().map_or(true, |(_, bv)| v < *bv) {
                        level_best = Some((t, v));
                    }
                }
                let Some((center, value)) = level_best else {
                    return Err(PplError::NoFeasibleParameter);
                };
                if best.as_ref().map_or(true, |(_, bv)| value < *bv) {
                    best = Some((center.clone(), value));
                }
                // Zoom in around the best cell (5x per level), clamped to the box.
                bounds = bounds
                    .iter()
                    .zip(&center)
                    .zip(&full)
                    .map(|((&(lo, hi), &c), &(flo, fhi))| {
                        let half = (hi - lo) / 5.0 * 0.5;
                        ((c - half).max(flo), (c + half).min(fhi))
                    })
                    .collect();
            }
            let (t, value) = best.expect("at least one finite level");
            let argmin = t.iter().map(|&ti| back(ti)).collect();
            Ok(SearchOutcome { argmin, value, trace })
        }
    }
}

/// Per-fold minimizers of the squared innovation, with the median and mean
/// combiners over the counted folds.
#[derive(Debug, Clone)]
pub struct FoldEstimates {
    /// `(fold index, per-fold minimizer)` over counted folds.
    pub per_fold: Vec<(usize, f64)>,
    pub median: f64,
    pub mean: f64,
}

/// Sample median, midpoint convention for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Minimize each counted fold's squared innovation over a 1-D parameter.
pub fn per_fold_estimates<Fam>(
    splits: &[CvSplit],
    family: Fam,
    h: &TestFunction,
    kind: WeightKind,
    grid: &QuadratureGrid,
    indicator: IndicatorMode,
    search: &SearchSpec,
) -> Result<FoldEstimates>
where
    Fam: Fn(f64) -> EstimatorFamily,
{
    let mut per_fold = Vec::new();
    for split in splits {
        let probe = bivariate_innovation(&family(search.bounds[0].0), h, &split.into(), kind, grid, indicator)?;
        if !probe.counted {
            continue;
        }
        let objective = |x: &[f64]| {
            match bivariate_innovation(&family(x[0]), h, &split.into(), kind, grid, indicator) {
                Ok(v) if v.feasible => v.value * v.value,
                _ => f64::INFINITY,
            }
        };
        let outcome = minimize(objective, search)?;
        per_fold.push((split.fold, outcome.argmin[0]));
    }
    if per_fold.is_empty() {
        return Err(PplError::NoAdmissibleFolds);
    }
    let thetas: Vec<f64> = per_fold.iter().map(|&(_, t)| t).collect();
    let med = median(&thetas).expect("non-empty");
    let mean = thetas.iter().sum::<f64>() / thetas.len() as f64;
    Ok(FoldEstimates { per_fold, median: med, mean })
}
