//! Univariate and bivariate innovation measures (first order).
//!
//! An innovation compares a test-function sum over one pattern against a
//! weighted integral of an estimator conditioned on another pattern; it is
//! the prediction-error primitive every loss in this crate is built from.
//! Only first-order innovations are exposed: all three estimation tracks use
//! them, and higher orders would only feed summary-statistic methods outside
//! this crate's scope.

use crate::error::{PplError, Result};
use crate::field::ScalarField;
use crate::geometry::{distance, integrate_on_window, Point, PointPattern, QuadratureGrid, Window};
use crate::kernel::{EdgeCorrection, KernelEstimator};
use serde::{Deserialize, Serialize};

/// `f` in test functions of the form `h(u; y) = f(w * xi(u; y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioTransform {
    /// `f(x) = 1/x` (inverse / Stoyan-Grabarnik weighting).
    Inverse,
    /// `f(x) = 1/sqrt(x)` (Pearson weighting).
    InverseSqrt,
    /// `f(x) = x^{-gamma}` for `gamma` in (0, 1].
    PowerNeg { gamma: f64 },
}

impl RatioTransform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            RatioTransform::Inverse => 1.0 / x,
            RatioTransform::InverseSqrt => 1.0 / x.sqrt(),
            RatioTransform::PowerNeg { gamma } => x.powf(-gamma),
        }
    }

    /// `f(x) * x`, continuously extended by 0 at x = 0.
    pub fn times_x(self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            RatioTransform::Inverse => 1.0,
            RatioTransform::InverseSqrt => x.sqrt(),
            RatioTransform::PowerNeg { gamma } => x.powf(1.0 - gamma),
        }
    }

    pub fn label(self) -> String {
        match self {
            RatioTransform::Inverse => "1/x".into(),
            RatioTransform::InverseSqrt => "1/sqrt(x)".into(),
            RatioTransform::PowerNeg { gamma } => format!("x^-{gamma}"),
        }
    }
}

/// First-order test function `h(u; y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    /// `h(u) = u_1^gamma * u_2^gamma`; needs a window in the closed positive
    /// quadrant when gamma is negative.
    CoordPower { gamma: f64 },
    /// `h(u; y) = f(w * xi(u; y))`, evaluated at the weighted estimator.
    XiTransform { transform: RatioTransform },
}

impl TestFunction {
    pub fn one() -> TestFunction {
        TestFunction::Constant { value: 1.0 }
    }

    pub fn pattern_free(&self) -> bool {
        !matches!(self, TestFunction::XiTransform { .. })
    }

    /// Pointwise value for the pattern-free kinds.
    pub fn eval_plain(&self, u: Point) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::CoordPower { gamma } => {
                if gamma == 0.0 {
                    1.0
                } else {
                    u.x.powf(gamma) * u.y.powf(gamma)
                }
            }
            TestFunction::XiTransform { .. } => f64::NAN,
        }
    }

    /// Exact `\int_W h(u) du` where a closed form exists: constants always,
    /// coordinate powers when the integral converges on the window.
    pub fn window_integral(&self, w: Window) -> Option<f64> {
        match *self {
            TestFunction::Constant { value } => Some(value * w.area()),
            TestFunction::CoordPower { gamma } => {
                Some(axis_power_integral(w.x_min, w.x_max, gamma)?
                    * axis_power_integral(w.y_min, w.y_max, gamma)?)
            }
            TestFunction::XiTransform { .. } => None,
        }
    }

    /// Exact `\int_W h(u)^2 du` where a closed form exists.
    pub fn window_integral_sq(&self, w: Window) -> Option<f64> {
        match *self {
            TestFunction::Constant { value } => Some(value * value * w.area()),
            TestFunction::CoordPower { gamma } => {
                TestFunction::CoordPower { gamma: 2.0 * gamma }.window_integral(w)
            }
            TestFunction::XiTransform { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Constant { value } => format!("const({value})"),
            TestFunction::CoordPower { gamma } => format!("coordpow({gamma})"),
            TestFunction::XiTransform { transform } => format!("f={}", transform.label()),
        }
    }
}

/// `\int_lo^hi t^gamma dt`, `None` when divergent.
pub(crate) fn axis_power_integral(lo: f64, hi: f64, gamma: f64) -> Option<f64> {
    if gamma == 0.0 {
        return Some(hi - lo);
    }
    if lo < 0.0 {
        // Fractional powers of negative coordinates are undefined.
        if gamma.fract() != 0.0 || gamma < 0.0 {
            return None;
        }
    }
    if (gamma - (-1.0)).abs() < 1e-15 {
        return if lo > 0.0 { Some((hi / lo).ln()) } else { None };
    }
    if gamma < -1.0 && lo <= 0.0 {
        return None;
    }
    let e = gamma + 1.0;
    Some((hi.powf(e) - lo.powf(e)) / e)
}

/// Parametrized estimator family `xi(u; y)`, evaluable pointwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorFamily {
    /// Constant intensity `xi = theta`.
    ConstantIntensity { theta: f64 },
    /// Pattern-free parametric intensity.
    ParametricIntensity { field: ScalarField },
    /// Hard-core Papangelou intensity `beta * 1{u outside all R-balls of y}`.
    HardCorePapangelou { beta: f64, range: f64 },
    /// Gaussian kernel estimate built from the conditioning pattern.
    KernelIntensity { bandwidth: f64, edge: EdgeCorrection },
}

impl EstimatorFamily {
    pub fn pattern_free(&self) -> bool {
        matches!(
            self,
            EstimatorFamily::ConstantIntensity { .. } | EstimatorFamily::ParametricIntensity { .. }
        )
    }

    /// Value of `xi(u; cond)`.
    pub fn eval(&self, u: Point, cond: &PointPattern) -> f64 {
        match *self {
            EstimatorFamily::ConstantIntensity { theta } => theta,
            EstimatorFamily::ParametricIntensity { field } => field.eval(u),
            EstimatorFamily::HardCorePapangelou { beta, range } => {
                let blocked = cond.points().iter().any(|p| distance(*p, u) <= range);
                if blocked {
                    0.0
                } else {
                    beta
                }
            }
            EstimatorFamily::KernelIntensity { bandwidth, edge } => {
                KernelEstimator::new(cond.points(), bandwidth, cond.window(), edge).eval(u)
            }
        }
    }

    /// Value of `xi(u; cond \ {cond[skip]})`.
    fn eval_excluding(&self, u: Point, cond: &PointPattern, skip: usize) -> f64 {
        match *self {
            EstimatorFamily::ConstantIntensity { theta } => theta,
            EstimatorFamily::ParametricIntensity { field } => field.eval(u),
            EstimatorFamily::HardCorePapangelou { beta, range } => {
                let blocked = cond
                    .points()
                    .iter()
                    .enumerate()
                    .any(|(i, p)| i != skip && distance(*p, u) <= range);
                if blocked {
                    0.0
                } else {
                    beta
                }
            }
            EstimatorFamily::KernelIntensity { bandwidth, edge } => {
                KernelEstimator::new(cond.points(), bandwidth, cond.window(), edge)
                    .eval_excluding(u, skip)
            }
        }
    }

    /// Pattern-free closed form, when the family has one.
    fn as_field(&self) -> Option<ScalarField> {
        match *self {
            EstimatorFamily::ConstantIntensity { theta } => Some(ScalarField::constant(theta)),
            EstimatorFamily::ParametricIntensity { field } => Some(field),
            _ => None,
        }
    }
}

/// Which weighting convention a bivariate innovation uses.
///
/// Product-density innovations subsample the training set with weight
/// `(1-p)`; Papangelou and non-parametric innovations predict the validation
/// set from the training set with weight `p/(1-p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    ProductDensity,
    Papangelou,
    NonParametric,
}

impl WeightKind {
    pub fn weight(self, p: f64) -> f64 {
        match self {
            WeightKind::ProductDensity => 1.0 - p,
            WeightKind::Papangelou | WeightKind::NonParametric => p / (1.0 - p),
        }
    }
}

/// Whether the cardinality indicator is attached or forced to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorMode {
    FromCardinality,
    AlwaysOne,
}

/// One fold's innovation with its indicator and feasibility flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationValue {
    pub value: f64,
    pub fold: usize,
    /// Indicator `I_i`; uncounted folds contribute 0 to every loss.
    pub counted: bool,
    /// False when a diverging test function hit a zero estimator value
    /// (hard-core infeasibility); the value is then `+inf`.
    pub feasible: bool,
}

impl InnovationValue {
    /// `I_i * innovation`, the loss-facing value.
    pub fn effective(&self) -> f64 {
        if self.counted {
            self.value
        } else {
            0.0
        }
    }
}

fn h_at(
    h: &TestFunction,
    u: Point,
    weight: f64,
    xi: &EstimatorFamily,
    cond: &PointPattern,
) -> f64 {
    match h {
        TestFunction::XiTransform { transform } => transform.apply(weight * xi.eval(u, cond)),
        _ => h.eval_plain(u),
    }
}

/// Integral `\int_W h(u; cond) * weight * xi(u; cond) du`, analytic where the
/// pair has a closed form, midpoint quadrature otherwise.
fn weighted_integral(
    h: &TestFunction,
    xi: &EstimatorFamily,
    weight: f64,
    cond: &PointPattern,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let w = grid.window();
    if let Some(field) = xi.as_field() {
        let analytic = match h {
            TestFunction::Constant { value } => Some(value * field.window_integral(w)),
            TestFunction::CoordPower { gamma } => match field {
                ScalarField::Constant { value } => {
                    TestFunction::CoordPower { gamma: *gamma }.window_integral(w).map(|i| i * value)
                }
                ScalarField::LinearX { offset, slope } => {
                    let iy = axis_power_integral(w.y_min, w.y_max, *gamma);
                    let ix0 = axis_power_integral(w.x_min, w.x_max, *gamma);
                    let ix1 = axis_power_integral(w.x_min, w.x_max, *gamma + 1.0);
                    match (iy, ix0, ix1) {
                        (Some(iy), Some(ix0), Some(ix1)) => Some((offset * ix0 + slope * ix1) * iy),
                        _ => None,
                    }
                }
            },
            TestFunction::XiTransform { .. } => None,
        };
        if let Some(v) = analytic {
            return Ok(weight * v);
        }
    }
    match h {
        TestFunction::XiTransform { transform } => {
            // h * w * xi = f(w xi) * (w xi); zero off the estimator support.
            integrate_on_window(|u| transform.times_x(weight * xi.eval(u, cond)), grid)
        }
        _ => integrate_on_window(|u| h.eval_plain(u) * weight * xi.eval(u, cond), grid),
    }
}

/// First-order univariate innovation
/// `sum_{x in X} h(x; X \ {x}) - \int_W h(u; X) xi(u; X) du`.
pub fn univariate_innovation(
    xi: &EstimatorFamily,
    h: &TestFunction,
    x: &PointPattern,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let mut sum = 0.0;
    for (i, &p) in x.points().iter().enumerate() {
        let term = match h {
            TestFunction::XiTransform { transform } => {
                transform.apply(xi.eval_excluding(p, x, i))
            }
            _ => h.eval_plain(p),
        };
        if !term.is_finite() {
            return Err(PplError::NonFiniteTerm(p));
        }
        sum += term;
    }
    let integral = weighted_integral(h, xi, 1.0, x, grid)?;
    Ok(sum - integral)
}

/// First-order bivariate innovation for one CV split.
///
/// Product-density kind: `sum_{x in T} h(x) - (1-p) \int_W h rho`.
/// Papangelou / non-parametric kind:
/// `sum_{x in V} h(x; T) - p/(1-p) \int_W h(u; T) xi(u; T) du`.
pub fn bivariate_innovation(
    xi: &EstimatorFamily,
    h: &TestFunction,
    split: &CvSplitRef,
    kind: WeightKind,
    grid: &QuadratureGrid,
    indicator: IndicatorMode,
) -> Result<InnovationValue> {
    let p = split.retention;
    if !(p > 0.0 && p < 1.0) {
        return Err(PplError::InvalidRetention(p));
    }
    let weight = kind.weight(p);
    let n_source = split.training.len() + split.validation.len();
    let n_t = split.training.len();

    let counted = match indicator {
        IndicatorMode::AlwaysOne => true,
        IndicatorMode::FromCardinality => match kind {
            WeightKind::ProductDensity => n_t >= 1,
            _ => n_t >= 1 && n_t <= n_source.saturating_sub(1),
        },
    };

    match kind {
        WeightKind::ProductDensity => {
            if !xi.pattern_free() {
                return Err(PplError::InvalidParameter(
                    "product-density innovations need a pattern-free estimator".into(),
                ));
            }
            let mut sum = 0.0;
            for &pt in split.training.points() {
                let term = h_at(h, pt, weight, xi, split.training);
                if !term.is_finite() {
                    return Err(PplError::NonFiniteTerm(pt));
                }
                sum += term;
            }
            let integral = weighted_integral(h, xi, weight, split.training, grid)?;
            Ok(InnovationValue { value: sum - integral, fold: split.fold, counted, feasible: true })
        }
        WeightKind::Papangelou | WeightKind::NonParametric => {
            let mut sum = 0.0;
            for &pt in split.validation.points() {
                let term = h_at(h, pt, weight, xi, split.training);
                if term.is_infinite() {
                    // A diverging test function met a zero estimator value:
                    // the innovation is infinite, not an error.
                    return Ok(InnovationValue {
                        value: f64::INFINITY,
                        fold: split.fold,
                        counted,
                        feasible: false,
                    });
                }
                if term.is_nan() {
                    return Err(PplError::NonFiniteTerm(pt));
                }
                sum += term;
            }
            let integral = weighted_integral(h, xi, weight, split.training, grid)?;
            Ok(InnovationValue { value: sum - integral, fold: split.fold, counted, feasible: true })
        }
    }
}

/// Borrowed view of a split, so batch drivers can evaluate innovations
/// without cloning patterns.
pub struct CvSplitRef<'a> {
    pub training: &'a PointPattern,
    pub validation: &'a PointPattern,
    pub retention: f64,
    pub fold: usize,
}

impl<'a> From<&'a crate::cv::CvSplit> for CvSplitRef<'a> {
    fn from(s: &'a crate::cv::CvSplit) -> CvSplitRef<'a> {
        CvSplitRef {
            training: &s.training,
            validation: &s.validation,
            retention: s.retention,
            fold: s.fold,
        }
    }
}

/// Upper end of the feasible hard-core range: the smallest
/// validation-to-training distance over all counted folds. Any radius up to
/// this keeps every counted fold's innovation finite.
pub fn hardcore_feasible_range(splits: &[crate::cv::CvSplit]) -> Result<f64> {
    let mut bound = f64::INFINITY;
    let mut any = false;
    for s in splits {
        let n = s.training.len() + s.validation.len();
        let counted = s.training.len() >= 1 && s.training.len() <= n.saturating_sub(1);
        if !counted {
            continue;
        }
        any = true;
        for v in s.validation.points() {
            for t in s.training.points() {
                let d = distance(*v, *t);
                if d < bound {
                    bound = d;
                }
            }
        }
    }
    if !any {
        return Err(PplError::NoAdmissibleFolds);
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::CvSplit;
    use crate::geometry::Window;
    use approx::assert_relative_eq;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::new(Window::unit(), 64).unwrap()
    }

    fn pattern_of(n: usize) -> PointPattern {
        let pts = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                Point::new(t, (0.5 + 0.37 * (i as f64)).fract())
            })
            .collect();
        PointPattern::new(pts, Window::unit()).unwrap()
    }

    #[test]
    fn univariate_constant_family_arithmetic() {
        let x = pattern_of(45);
        let g = grid();
        let v = univariate_innovation(
            &EstimatorFamily::ConstantIntensity { theta: 45.0 },
            &TestFunction::one(),
            &x,
            &g,
        )
        .unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-10);

        let v = univariate_innovation(
            &EstimatorFamily::ConstantIntensity { theta: 100.0 },
            &TestFunction::one(),
            &x,
            &g,
        )
        .unwrap();
        assert_relative_eq!(v, -55.0, epsilon = 1e-10);
    }

    #[test]
    fn coordpower_integral_is_analytic() {
        let h = TestFunction::CoordPower { gamma: -0.4 };
        let w = Window::unit();
        assert_relative_eq!(h.window_integral(w).unwrap(), (1.0 / 0.6) * (1.0 / 0.6));
        assert_relative_eq!(h.window_integral_sq(w).unwrap(), 25.0, epsilon = 1e-12);
        // Divergent integrals report None.
        assert!(TestFunction::CoordPower { gamma: -1.0 }.window_integral(w).is_none());
    }

    #[test]
    fn product_density_innovation_arithmetic() {
        // Training of 45 points, p = 0.5, theta = 100, |W| = 1 -> 45 - 50 = -5.
        let training = pattern_of(45);
        let validation = pattern_of(45); // size only matters via the indicator
        let split = CvSplitRef { training: &training, validation: &validation, retention: 0.5, fold: 0 };
        let v = bivariate_innovation(
            &EstimatorFamily::ConstantIntensity { theta: 100.0 },
            &TestFunction::one(),
            &split,
            WeightKind::ProductDensity,
            &grid(),
            IndicatorMode::FromCardinality,
        )
        .unwrap();
        assert!(v.counted && v.feasible);
        assert_relative_eq!(v.value, -5.0, epsilon = 1e-10);
    }

    #[test]
    fn hardcore_reduced_form_matches_generic_path() {
        // With f = 1/x the innovation reduces to
        // #V (1-p)/(p beta) - |W \ union of R-balls around T|.
        let w = Window::unit();
        let training = PointPattern::new(
            vec![Point::new(0.25, 0.25), Point::new(0.75, 0.75)],
            w,
        )
        .unwrap();
        let validation = PointPattern::new(
            vec![Point::new(0.25, 0.75), Point::new(0.75, 0.25)],
            w,
        )
        .unwrap();
        let g = QuadratureGrid::new(w, 256).unwrap();
        let (p, beta, range) = (0.4, 80.0, 0.1);
        let split = CvSplitRef { training: &training, validation: &validation, retention: p, fold: 0 };
        let v = bivariate_innovation(
            &EstimatorFamily::HardCorePapangelou { beta, range },
            &TestFunction::XiTransform { transform: RatioTransform::Inverse },
            &split,
            WeightKind::Papangelou,
            &g,
            IndicatorMode::FromCardinality,
        )
        .unwrap();
        assert!(v.feasible);
        let uncovered = crate::geometry::uncovered_area(&training, range, &g);
        let expected = 2.0 * (1.0 - p) / (p * beta) - uncovered;
        assert_relative_eq!(v.value, expected, epsilon = 1e-9);
    }

    #[test]
    fn hardcore_infeasible_flagged_not_thrown() {
        let w = Window::unit();
        let training = PointPattern::new(vec![Point::new(0.5, 0.5)], w).unwrap();
        let validation = PointPattern::new(vec![Point::new(0.52, 0.5)], w).unwrap();
        let split = CvSplitRef { training: &training, validation: &validation, retention: 0.5, fold: 3 };
        let v = bivariate_innovation(
            &EstimatorFamily::HardCorePapangelou { beta: 50.0, range: 0.1 },
            &TestFunction::XiTransform { transform: RatioTransform::Inverse },
            &split,
            WeightKind::Papangelou,
            &grid(),
            IndicatorMode::FromCardinality,
        )
        .unwrap();
        assert!(!v.feasible);
        assert!(v.value.is_infinite());
        assert_eq!(v.fold, 3);
    }

    #[test]
    fn feasible_range_is_min_cross_distance() {
        let w = Window::unit();
        let mk = |t: Vec<Point>, v: Vec<Point>, fold| CvSplit {
            training: PointPattern::new(t, w).unwrap(),
            validation: PointPattern::new(v, w).unwrap(),
            evaluation: None,
            retention: 0.5,
            fold,
        };
        let s1 = mk(vec![Point::new(0.3, 0.0)], vec![Point::new(0.0, 0.0)], 0);
        assert_relative_eq!(hardcore_feasible_range(&[s1.clone()]).unwrap(), 0.3);

        let s2 = mk(vec![Point::new(0.0, 0.5)], vec![Point::new(0.0, 0.0)], 1);
        let bound = hardcore_feasible_range(&[s1, s2]).unwrap();
        assert_relative_eq!(bound, 0.3);
    }

    #[test]
    fn feasible_range_errors_without_counted_folds() {
        let w = Window::unit();
        let s = CvSplit {
            training: PointPattern::empty(w),
            validation: PointPattern::new(vec![Point::new(0.1, 0.1)], w).unwrap(),
            evaluation: None,
            retention: 0.5,
            fold: 0,
        };
        assert!(matches!(hardcore_feasible_range(&[s]), Err(PplError::NoAdmissibleFolds)));
    }

    #[test]
    fn indicator_absorption() {
        // Attaching the indicator to the innovation equals multiplying the
        // test function by it: an uncounted fold contributes exactly 0.
        let w = Window::unit();
        let training = PointPattern::empty(w);
        let validation = pattern_of(5);
        let split = CvSplitRef { training: &training, validation: &validation, retention: 0.5, fold: 0 };
        let v = bivariate_innovation(
            &EstimatorFamily::ConstantIntensity { theta: 10.0 },
            &TestFunction::one(),
            &split,
            WeightKind::ProductDensity,
            &grid(),
            IndicatorMode::FromCardinality,
        )
        .unwrap();
        assert!(!v.counted);
        assert_eq!(v.effective(), 0.0);
        assert_relative_eq!(v.value, -5.0, epsilon = 1e-10); // raw value survives
    }
}
