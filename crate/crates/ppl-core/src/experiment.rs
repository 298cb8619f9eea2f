//! Declarative Monte-Carlo experiments: a model, a task, replicate count and
//! a master seed in; a long-format CSV of per-replicate records and
//! aggregated metrics out. Re-running a spec with the same seed reproduces
//! the CSV byte for byte.

use crate::apps::bandwidth::{
    kernel_surface, select_bandwidth_cvl, select_bandwidth_poisson_lik_cv, select_bandwidth_ppl,
};
use crate::apps::constant::{fold_estimates_from_splits, FoldIndicator};
use crate::apps::hardcore::{fit_hardcore_cases, fit_hardcore_pseudolikelihood};
use crate::cv::CvScheme;
use crate::error::{PplError, Result};
use crate::field::ScalarField;
use crate::geometry::{PointPattern, QuadratureGrid, Window};
use crate::innovations::{RatioTransform, TestFunction};
use crate::kernel::EdgeCorrection;
use crate::learning::{median, LossKind};
use crate::metrics::{scalar_metrics, surface_metrics};
use crate::rng::{RngSeed, Stream};
use crate::sim::{
    simulate_hardcore, simulate_poisson, thin_independent, DppSampler, DppSpec, FieldMean,
    GaussianFieldSpec, HardCoreSpec, LgcpSampler,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// CSV schema marker written as the first line of every results file.
pub const CSV_SCHEMA: &str = "# ppl-lab schema v1";

// ---------------------------------------------------------------------------
// Model specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Poisson {
        intensity: ScalarField,
    },
    Lgcp {
        mean: FieldMean,
        sigma2: f64,
        decay: f64,
        #[serde(default)]
        resolution: Option<usize>,
    },
    Hardcore {
        beta: f64,
        range: f64,
        #[serde(default)]
        burn_in: Option<usize>,
    },
    Dpp {
        intensity: f64,
        decay: f64,
        #[serde(default)]
        truncation: Option<usize>,
    },
    /// A DPP thinned by an independent retention field.
    DppThinned {
        intensity: f64,
        decay: f64,
        retention: ScalarField,
        #[serde(default)]
        truncation: Option<usize>,
    },
}

impl ModelSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::Poisson { .. } => "poisson",
            ModelSpec::Lgcp { .. } => "lgcp",
            ModelSpec::Hardcore { .. } => "hardcore",
            ModelSpec::Dpp { .. } => "dpp",
            ModelSpec::DppThinned { .. } => "dpp_thinned",
        }
    }

    /// True first-order intensity in closed form, where the model has one.
    pub fn true_intensity(&self, _w: Window) -> Option<ScalarField> {
        match self {
            ModelSpec::Poisson { intensity } => Some(*intensity),
            ModelSpec::Lgcp { mean, sigma2, .. } => {
                let scale = (0.5 * sigma2).exp();
                match *mean {
                    FieldMean::Constant { value } => {
                        Some(ScalarField::constant((value).exp() * scale))
                    }
                    FieldMean::LogLinearX { offset, slope } => {
                        Some(ScalarField::linear_x(offset * scale, slope * scale))
                    }
                }
            }
            ModelSpec::Hardcore { .. } => None,
            ModelSpec::Dpp { intensity, .. } => Some(ScalarField::constant(*intensity)),
            ModelSpec::DppThinned { intensity, retention, .. } => match *retention {
                ScalarField::Constant { value } => {
                    Some(ScalarField::constant(intensity * value))
                }
                ScalarField::LinearX { offset, slope } => {
                    Some(ScalarField::linear_x(intensity * offset, intensity * slope))
                }
            },
        }
    }

    /// Build the replicate sampler (heavy precomputation happens here).
    pub fn sampler(&self, window: Window) -> Result<ModelSampler> {
        match self {
            ModelSpec::Poisson { intensity } => Ok(ModelSampler::Poisson { field: *intensity, window }),
            ModelSpec::Lgcp { mean, sigma2, decay, resolution } => {
                let mut spec = GaussianFieldSpec::new(*mean, *sigma2, *decay);
                if let Some(res) = resolution {
                    spec.resolution = *res;
                }
                Ok(ModelSampler::Lgcp(Box::new(LgcpSampler::new(&spec, window)?)))
            }
            ModelSpec::Hardcore { beta, range, burn_in } => {
                let mut spec = HardCoreSpec::new(*beta, *range);
                if let Some(b) = burn_in {
                    spec.burn_in = *b;
                }
                Ok(ModelSampler::Hardcore { spec, window })
            }
            ModelSpec::Dpp { intensity, decay, truncation } => {
                let spec = match truncation {
                    Some(t) => DppSpec { intensity: *intensity, decay: *decay, truncation: *t },
                    None => DppSpec::with_auto_truncation(*intensity, *decay, window)?,
                };
                Ok(ModelSampler::Dpp { sampler: Box::new(DppSampler::new(&spec, window)?), retention: None })
            }
            ModelSpec::DppThinned { intensity, decay, retention, truncation } => {
                let spec = match truncation {
                    Some(t) => DppSpec { intensity: *intensity, decay: *decay, truncation: *t },
                    None => DppSpec::with_auto_truncation(*intensity, *decay, window)?,
                };
                Ok(ModelSampler::Dpp {
                    sampler: Box::new(DppSampler::new(&spec, window)?),
                    retention: Some(*retention),
                })
            }
        }
    }
}

pub enum ModelSampler {
    Poisson { field: ScalarField, window: Window },
    Lgcp(Box<LgcpSampler>),
    Hardcore { spec: HardCoreSpec, window: Window },
    Dpp { sampler: Box<DppSampler>, retention: Option<ScalarField> },
}

impl ModelSampler {
    pub fn sample(&self, seed: RngSeed) -> Result<PointPattern> {
        match self {
            ModelSampler::Poisson { field, window } => simulate_poisson(field, *window, seed),
            ModelSampler::Lgcp(s) => s.sample(seed),
            ModelSampler::Hardcore { spec, window } => simulate_hardcore(spec, *window, seed),
            ModelSampler::Dpp { sampler, retention } => {
                let base = sampler.sample(seed)?;
                match retention {
                    None => Ok(base),
                    Some(r) => {
                        let (kept, _) =
                            thin_independent(&base, |u| r.eval(u), seed.derive(Stream::Thinning, 1))?;
                        Ok(kept)
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Task specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorSpec {
    Ppl { f: RatioTransform, loss: LossKind, cv: CvScheme },
    Cvl,
    PoissonLikCv { cv: CvScheme },
}

impl SelectorSpec {
    pub fn label(&self) -> String {
        match self {
            SelectorSpec::Ppl { loss, .. } => format!("ppl_{}", loss.label()),
            SelectorSpec::Cvl => "cvl".into(),
            SelectorSpec::PoissonLikCv { .. } => "poisson_lik_cv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskSpec {
    /// Constant-intensity estimation over a test-function exponent grid.
    ConstantIntensity {
        gammas: Vec<f64>,
        cv: Vec<CvScheme>,
        indicator: FoldIndicator,
        truth: f64,
    },
    /// Hard-core Papangelou fitting with the pseudolikelihood baseline.
    Hardcore {
        transforms: Vec<RatioTransform>,
        losses: Vec<LossKind>,
        cv: Vec<CvScheme>,
        r_candidates: usize,
        truth_beta: f64,
        truth_range: f64,
    },
    /// Kernel bandwidth selection and MISE comparison across selectors.
    Bandwidth { selectors: Vec<SelectorSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub replicates: usize,
    #[serde(default)]
    pub window: Option<Window>,
    #[serde(default)]
    pub grid_resolution: Option<usize>,
    pub model: ModelSpec,
    pub task: TaskSpec,
}

impl ExperimentSpec {
    pub fn window(&self) -> Window {
        self.window.unwrap_or_else(Window::unit)
    }

    pub fn grid_resolution(&self) -> usize {
        self.grid_resolution.unwrap_or(QuadratureGrid::DEFAULT_RESOLUTION)
    }
}

// ---------------------------------------------------------------------------
// Result rows
// ---------------------------------------------------------------------------

/// One long-format record. Aggregate rows leave `replicate`/`seed` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub task: String,
    pub selector: String,
    pub loss: String,
    pub cv: String,
    pub p: String,
    pub k: String,
    pub gamma: String,
    pub f: String,
    pub replicate: String,
    pub seed: String,
    pub metric: String,
    pub value: String,
    pub se: String,
}

impl ResultRow {
    fn blank(model: &str, task: &str) -> ResultRow {
        ResultRow {
            model: model.into(),
            task: task.into(),
            selector: String::new(),
            loss: String::new(),
            cv: String::new(),
            p: String::new(),
            k: String::new(),
            gamma: String::new(),
            f: String::new(),
            replicate: String::new(),
            seed: String::new(),
            metric: String::new(),
            value: String::new(),
            se: String::new(),
        }
    }

    fn with_scheme(mut self, scheme: &CvScheme) -> ResultRow {
        self.cv = scheme.label().into();
        self.p = format_f64(scheme.retention());
        self.k = scheme.folds().to_string();
        self
    }
}

pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Render rows as the schema-v1 CSV document.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_SCHEMA);
    out.push('\n');
    out.push_str("model,task,selector,loss,cv,p,k,gamma,f,replicate,seed,metric,value,se\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.model, r.task, r.selector, r.loss, r.cv, r.p, r.k, r.gamma, r.f, r.replicate,
            r.seed, r.metric, r.value, r.se
        );
    }
    out
}

pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
}

impl ExperimentOutput {
    pub fn csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    /// Value of the first aggregate row matching the filters.
    pub fn aggregate(&self, selector: &str, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.replicate.is_empty() && r.selector == selector && r.metric == metric)
            .and_then(|r| r.value.parse().ok())
    }
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

fn replicate_seed(master: u64, idx: usize) -> RngSeed {
    RngSeed(master).derive(Stream::Replicate, idx as u64)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let window = spec.window();
    let grid = QuadratureGrid::new(window, spec.grid_resolution())?;
    let sampler = spec.model.sampler(window)?;
    let model = spec.model.label();

    // Patterns are simulated once and shared by every configuration.
    let patterns: Vec<Result<PointPattern>> = (0..spec.replicates)
        .into_par_iter()
        .map(|rep| sampler.sample(replicate_seed(spec.seed, rep)))
        .collect();
    let mut rows = Vec::new();

    match &spec.task {
        TaskSpec::ConstantIntensity { gammas, cv, indicator, truth } => {
            run_constant_task(spec, &patterns, gammas, cv, *indicator, *truth, &mut rows, model)?;
        }
        TaskSpec::Hardcore { transforms, losses, cv, r_candidates, truth_beta, truth_range } => {
            run_hardcore_task(
                spec, &patterns, transforms, losses, cv, *r_candidates, *truth_beta,
                *truth_range, &grid, &mut rows, model,
            )?;
        }
        TaskSpec::Bandwidth { selectors } => {
            run_bandwidth_task(spec, &patterns, selectors, &grid, &mut rows, model)?;
        }
    }

    Ok(ExperimentOutput { rows })
}

fn error_row(base: ResultRow, rep: usize, seed: RngSeed, err: &PplError) -> ResultRow {
    let mut row = base;
    row.replicate = rep.to_string();
    row.seed = seed.0.to_string();
    row.metric = "error".into();
    let mut msg = err.to_string();
    msg.retain(|c| c != ',' && c != '\n');
    row.se = msg;
    row
}

#[allow(clippy::too_many_arguments)]
fn run_constant_task(
    spec: &ExperimentSpec,
    patterns: &[Result<PointPattern>],
    gammas: &[f64],
    schemes: &[CvScheme],
    indicator: FoldIndicator,
    truth: f64,
    rows: &mut Vec<ResultRow>,
    model: &str,
) -> Result<()> {
    struct RepOut {
        // (scheme idx, gamma idx) -> per-estimator estimates or error
        cells: Vec<std::result::Result<(f64, f64), String>>,
        classical: f64,
    }

    let results: Vec<Result<RepOut>> = patterns
        .par_iter()
        .enumerate()
        .map(|(rep, pattern)| {
            let x = pattern.as_ref().map_err(clone_err)?;
            let rep_seed = replicate_seed(spec.seed, rep);
            let mut cells = Vec::with_capacity(schemes.len() * gammas.len());
            for (si, scheme) in schemes.iter().enumerate() {
                let splits =
                    crate::cv::generate_splits(x, scheme, rep_seed.derive(Stream::CvFold, si as u64))?;
                for &gamma in gammas {
                    let h = TestFunction::CoordPower { gamma };
                    match fold_estimates_from_splits(&splits, &h, indicator) {
                        Ok(est) => {
                            let med = median(&est).expect("non-empty");
                            let mean = est.iter().sum::<f64>() / est.len() as f64;
                            cells.push(Ok((med, mean)));
                        }
                        Err(e) => cells.push(Err(e.to_string())),
                    }
                }
            }
            Ok(RepOut { cells, classical: crate::apps::constant::classical_estimate(x) })
        })
        .collect();

    // Replicate rows, ordered by configuration then replicate.
    let base = |scheme: &CvScheme, gamma: f64| {
        let mut row = ResultRow::blank(model, "constant_intensity").with_scheme(scheme);
        row.gamma = format_f64(gamma);
        row
    };

    for (si, scheme) in schemes.iter().enumerate() {
        for (gi, &gamma) in gammas.iter().enumerate() {
            let cell = si * gammas.len() + gi;
            let mut medians = Vec::new();
            let mut means = Vec::new();
            for (rep, r) in results.iter().enumerate() {
                let seed = replicate_seed(spec.seed, rep);
                match r {
                    Ok(out) => match &out.cells[cell] {
                        Ok((med, mean)) => {
                            medians.push(*med);
                            means.push(*mean);
                            for (metric, value) in
                                [("theta_median", med), ("theta_mean", mean)]
                            {
                                let mut row = base(scheme, gamma);
                                row.replicate = rep.to_string();
                                row.seed = seed.0.to_string();
                                row.selector = metric.trim_start_matches("theta_").into();
                                row.metric = metric.into();
                                row.value = format_f64(*value);
                                rows.push(row);
                            }
                        }
                        Err(msg) => {
                            let mut row = base(scheme, gamma);
                            row.replicate = rep.to_string();
                            row.seed = seed.0.to_string();
                            row.metric = "error".into();
                            let mut msg = msg.clone();
                            msg.retain(|c| c != ',' && c != '\n');
                            row.se = msg;
                            rows.push(row);
                        }
                    },
                    Err(e) => rows.push(error_row(base(scheme, gamma), rep, seed, e)),
                }
            }
            // Aggregates per estimator.
            for (name, estimates) in [("median", &medians), ("mean", &means)] {
                if estimates.len() >= 2 {
                    let m = scalar_metrics(estimates, truth)?;
                    for (metric, value, se) in [
                        ("absolute_bias", m.absolute_bias, m.se_mean),
                        ("variance", m.variance, f64::NAN),
                        ("mse", m.mse, m.se_mse),
                    ] {
                        let mut row = base(scheme, gamma);
                        row.selector = name.into();
                        row.metric = metric.into();
                        row.value = format_f64(value);
                        row.se = format_f64(se);
                        rows.push(row);
                    }
                }
            }
        }
    }

    // Classical baseline aggregate (configuration-independent).
    let classical: Vec<f64> = results
        .iter()
        .filter_map(|r| r.as_ref().ok().map(|o| o.classical))
        .collect();
    if classical.len() >= 2 {
        let m = scalar_metrics(&classical, truth)?;
        for (metric, value, se) in [
            ("absolute_bias", m.absolute_bias, m.se_mean),
            ("variance", m.variance, f64::NAN),
            ("mse", m.mse, m.se_mse),
        ] {
            let mut row = ResultRow::blank(model, "constant_intensity");
            row.selector = "classical".into();
            row.metric = metric.into();
            row.value = format_f64(value);
            row.se = format_f64(se);
            rows.push(row);
        }
    }
    Ok(())
}

fn clone_err(e: &PplError) -> PplError {
    PplError::Config(e.to_string())
}

#[allow(clippy::too_many_arguments)]
fn run_hardcore_task(
    spec: &ExperimentSpec,
    patterns: &[Result<PointPattern>],
    transforms: &[RatioTransform],
    losses: &[LossKind],
    schemes: &[CvScheme],
    r_candidates: usize,
    truth_beta: f64,
    truth_range: f64,
    grid: &QuadratureGrid,
    rows: &mut Vec<ResultRow>,
    model: &str,
) -> Result<()> {
    let cases: Vec<(RatioTransform, LossKind)> = transforms
        .iter()
        .flat_map(|&f| losses.iter().map(move |&l| (f, l)))
        .collect();

    struct RepOut {
        // per (scheme, case): (beta, range)
        fits: Vec<std::result::Result<(f64, f64), String>>,
        baseline: std::result::Result<(f64, f64), String>,
    }

    let results: Vec<Result<RepOut>> = patterns
        .par_iter()
        .enumerate()
        .map(|(rep, pattern)| {
            let x = pattern.as_ref().map_err(clone_err)?;
            let rep_seed = replicate_seed(spec.seed, rep);
            let mut fits = Vec::new();
            for (si, scheme) in schemes.iter().enumerate() {
                match fit_hardcore_cases(
                    x,
                    scheme,
                    &cases,
                    r_candidates,
                    grid,
                    rep_seed.derive(Stream::CvFold, si as u64),
                ) {
                    Ok(list) => {
                        fits.extend(list.into_iter().map(|f| Ok((f.beta, f.range))));
                    }
                    Err(e) => {
                        fits.extend(std::iter::repeat_with(|| Err(e.to_string())).take(cases.len()));
                    }
                }
            }
            let baseline = fit_hardcore_pseudolikelihood(x, grid)
                .map(|b| (b.beta, b.range))
                .map_err(|e| e.to_string());
            Ok(RepOut { fits, baseline })
        })
        .collect();

    for (si, scheme) in schemes.iter().enumerate() {
        for (ci, &(f, kind)) in cases.iter().enumerate() {
            let idx = si * cases.len() + ci;
            let mut betas = Vec::new();
            let mut ranges = Vec::new();
            for (rep, r) in results.iter().enumerate() {
                let seed = replicate_seed(spec.seed, rep);
                let mut base = ResultRow::blank(model, "hardcore").with_scheme(scheme);
                base.selector = "ppl".into();
                base.loss = kind.label().into();
                base.f = f.label();
                match r {
                    Ok(out) => match &out.fits[idx] {
                        Ok((beta, range)) => {
                            betas.push(*beta);
                            ranges.push(*range);
                            for (metric, value) in [("beta", beta), ("range", range)] {
                                let mut row = base.clone();
                                row.replicate = rep.to_string();
                                row.seed = seed.0.to_string();
                                row.metric = metric.into();
                                row.value = format_f64(*value);
                                rows.push(row);
                            }
                        }
                        Err(msg) => {
                            let mut row = base.clone();
                            row.replicate = rep.to_string();
                            row.seed = seed.0.to_string();
                            row.metric = "error".into();
                            let mut msg = msg.clone();
                            msg.retain(|c| c != ',' && c != '\n');
                            row.se = msg;
                            rows.push(row);
                        }
                    },
                    Err(e) => rows.push(error_row(base.clone(), rep, seed, e)),
                }
            }
            for (param, values, truth) in
                [("beta", &betas, truth_beta), ("range", &ranges, truth_range)]
            {
                if values.len() >= 2 {
                    let m = scalar_metrics(values, truth)?;
                    let bias = values.iter().sum::<f64>() / values.len() as f64 - truth;
                    for (metric, value, se) in [
                        (format!("{param}_bias"), bias, m.se_mean),
                        (format!("{param}_absolute_bias"), m.absolute_bias, m.se_mean),
                        (format!("{param}_variance"), m.variance, f64::NAN),
                        (format!("{param}_mse"), m.mse, m.se_mse),
                    ] {
                        let mut row = ResultRow::blank(model, "hardcore").with_scheme(scheme);
                        row.selector = "ppl".into();
                        row.loss = kind.label().into();
                        row.f = f.label();
                        row.metric = metric;
                        row.value = format_f64(value);
                        row.se = format_f64(se);
                        rows.push(row);
                    }
                }
            }
        }
    }

    // Pseudolikelihood baseline rows and aggregates.
    let mut betas = Vec::new();
    let mut ranges = Vec::new();
    for (rep, r) in results.iter().enumerate() {
        let seed = replicate_seed(spec.seed, rep);
        let mut base = ResultRow::blank(model, "hardcore");
        base.selector = "pseudolikelihood".into();
        match r {
            Ok(out) => match &out.baseline {
                Ok((beta, range)) => {
                    betas.push(*beta);
                    ranges.push(*range);
                    for (metric, value) in [("beta", beta), ("range", range)] {
                        let mut row = base.clone();
                        row.replicate = rep.to_string();
                        row.seed = seed.0.to_string();
                        row.metric = metric.into();
                        row.value = format_f64(*value);
                        rows.push(row);
                    }
                }
                Err(msg) => {
                    let mut row = base.clone();
                    row.replicate = rep.to_string();
                    row.seed = seed.0.to_string();
                    row.metric = "error".into();
                    let mut msg = msg.clone();
                    msg.retain(|c| c != ',' && c != '\n');
                    row.se = msg;
                    rows.push(row);
                }
            },
            Err(e) => rows.push(error_row(base.clone(), rep, seed, e)),
        }
    }
    for (param, values, truth) in
        [("beta", &betas, truth_beta), ("range", &ranges, truth_range)]
    {
        if values.len() >= 2 {
            let m = scalar_metrics(values, truth)?;
            let bias = values.iter().sum::<f64>() / values.len() as f64 - truth;
            for (metric, value, se) in [
                (format!("{param}_bias"), bias, m.se_mean),
                (format!("{param}_absolute_bias"), m.absolute_bias, m.se_mean),
                (format!("{param}_variance"), m.variance, f64::NAN),
                (format!("{param}_mse"), m.mse, m.se_mse),
            ] {
                let mut row = ResultRow::blank(model, "hardcore");
                row.selector = "pseudolikelihood".into();
                row.metric = metric;
                row.value = format_f64(value);
                row.se = format_f64(se);
                rows.push(row);
            }
        }
    }
    Ok(())
}

fn run_bandwidth_task(
    spec: &ExperimentSpec,
    patterns: &[Result<PointPattern>],
    selectors: &[SelectorSpec],
    grid: &QuadratureGrid,
    rows: &mut Vec<ResultRow>,
    model: &str,
) -> Result<()> {
    let truth_field = spec
        .model
        .true_intensity(spec.window())
        .ok_or_else(|| PplError::Config("bandwidth task needs a model with a closed-form intensity".into()))?;
    let truth: Vec<f64> = grid.centers().map(|c| truth_field.eval(c)).collect();

    struct RepOut {
        // per selector: (bandwidth, surface)
        fits: Vec<std::result::Result<(f64, Vec<f64>), String>>,
    }

    let results: Vec<Result<RepOut>> = patterns
        .par_iter()
        .enumerate()
        .map(|(rep, pattern)| {
            let x = pattern.as_ref().map_err(clone_err)?;
            let rep_seed = replicate_seed(spec.seed, rep);
            let fits = selectors
                .iter()
                .enumerate()
                .map(|(si, sel)| {
                    let seed = rep_seed.derive(Stream::CvFold, si as u64);
                    let fit = match sel {
                        SelectorSpec::Ppl { f, loss, cv } => {
                            select_bandwidth_ppl(x, cv, *f, *loss, grid, seed, None)
                        }
                        SelectorSpec::Cvl => select_bandwidth_cvl(x, grid, None),
                        SelectorSpec::PoissonLikCv { cv } => {
                            select_bandwidth_poisson_lik_cv(x, cv, grid, seed, None)
                        }
                    };
                    fit.and_then(|f| {
                        let surface =
                            kernel_surface(x, f.bandwidth, EdgeCorrection::Local, grid)?;
                        Ok((f.bandwidth, surface))
                    })
                    .map_err(|e| e.to_string())
                })
                .collect();
            Ok(RepOut { fits })
        })
        .collect();

    for (si, sel) in selectors.iter().enumerate() {
        let mut surfaces = Vec::new();
        let mut bandwidths = Vec::new();
        for (rep, r) in results.iter().enumerate() {
            let seed = replicate_seed(spec.seed, rep);
            let mut base = ResultRow::blank(model, "bandwidth");
            base.selector = sel.label();
            match sel {
                SelectorSpec::Ppl { f, loss, cv } => {
                    base = base.with_scheme(cv);
                    base.loss = loss.label().into();
                    base.f = f.label();
                }
                SelectorSpec::PoissonLikCv { cv } => {
                    base = base.with_scheme(cv);
                }
                SelectorSpec::Cvl => {}
            }
            match r {
                Ok(out) => match &out.fits[si] {
                    Ok((bw, surface)) => {
                        bandwidths.push(*bw);
                        surfaces.push(surface.clone());
                        let mut row = base.clone();
                        row.replicate = rep.to_string();
                        row.seed = seed.0.to_string();
                        row.metric = "bandwidth".into();
                        row.value = format_f64(*bw);
                        rows.push(row);
                    }
                    Err(msg) => {
                        let mut row = base.clone();
                        row.replicate = rep.to_string();
                        row.seed = seed.0.to_string();
                        row.metric = "error".into();
                        let mut msg = msg.clone();
                        msg.retain(|c| c != ',' && c != '\n');
                        row.se = msg;
                        rows.push(row);
                    }
                },
                Err(e) => rows.push(error_row(base.clone(), rep, seed, e)),
            }
        }
        if !surfaces.is_empty() {
            let m = surface_metrics(&surfaces, &truth, grid)?;
            let mean_bw = bandwidths.iter().sum::<f64>() / bandwidths.len() as f64;
            let mut base = ResultRow::blank(model, "bandwidth");
            base.selector = sel.label();
            if let SelectorSpec::Ppl { f, loss, cv } = sel {
                base = base.with_scheme(cv);
                base.loss = loss.label().into();
                base.f = f.label();
            }
            if let SelectorSpec::PoissonLikCv { cv } = sel {
                base = base.with_scheme(cv);
            }
            for (metric, value) in [
                ("iab", m.iab),
                ("isb", m.isb),
                ("iv", m.iv),
                ("mise", m.mise),
                ("mean_bandwidth", mean_bw),
            ] {
                let mut row = base.clone();
                row.metric = metric.into();
                row.value = format_f64(value);
                rows.push(row);
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Batch simulation (for the CLI `simulate` subcommand)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSpec {
    pub model: ModelSpec,
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub window: Option<Window>,
}

pub fn simulate_batch(spec: &SimulateSpec) -> Result<Vec<PointPattern>> {
    let window = spec.window.unwrap_or_else(Window::unit);
    let sampler = spec.model.sampler(window)?;
    (0..spec.count)
        .into_par_iter()
        .map(|rep| sampler.sample(replicate_seed(spec.seed, rep)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ExperimentSpec {
        ExperimentSpec {
            name: "tiny".into(),
            seed: 11,
            replicates: 4,
            window: None,
            grid_resolution: Some(32),
            model: ModelSpec::Poisson { intensity: ScalarField::constant(60.0) },
            task: TaskSpec::ConstantIntensity {
                gammas: vec![0.0, -0.4],
                cv: vec![CvScheme::Mccv { p: 0.5, k: 8 }],
                indicator: FoldIndicator::AlwaysOne,
                truth: 60.0,
            },
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let spec = tiny_spec();
        let a = run_experiment(&spec).unwrap().csv();
        let b = run_experiment(&spec).unwrap().csv();
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_SCHEMA));
    }

    #[test]
    fn divergent_gamma_records_error_rows() {
        let mut spec = tiny_spec();
        if let TaskSpec::ConstantIntensity { gammas, .. } = &mut spec.task {
            gammas.push(-1.0);
        }
        let out = run_experiment(&spec).unwrap();
        let error_rows: Vec<_> = out
            .rows
            .iter()
            .filter(|r| r.metric == "error" && r.gamma == "-1")
            .collect();
        assert_eq!(error_rows.len(), spec.replicates);
        // Other configurations still aggregated.
        assert!(out.aggregate("mean", "mse").is_some());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = tiny_spec();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
