//! Cross-validation splittings by independent thinning.
//!
//! Fold membership is decided per point by independent draws keyed to
//! (seed, fold), never by sequential filling: classical k-fold assignment is
//! a dependent thinning and breaks the distribution theory the losses rely
//! on. Monte-Carlo CV retains each point into a fold's validation set with
//! probability `p` independently across folds; multinomial CV draws one iid
//! fold label per point, so its validation sets partition the pattern.

use crate::error::{PplError, Result};
use crate::geometry::{Point, PointPattern};
use crate::rng::{RngSeed, Stream};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One training/validation (and optionally evaluation) splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSplit {
    pub training: PointPattern,
    pub validation: PointPattern,
    pub evaluation: Option<PointPattern>,
    /// Validation retention probability (1/k for multinomial CV).
    pub retention: f64,
    pub fold: usize,
}

impl CvSplit {
    /// Size of the source pattern the split came from.
    pub fn source_size(&self) -> usize {
        self.training.len()
            + self.validation.len()
            + self.evaluation.as_ref().map_or(0, |e| e.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CvScheme {
    Mccv { p: f64, k: usize },
    Multinomial { k: usize },
}

impl CvScheme {
    pub fn folds(&self) -> usize {
        match *self {
            CvScheme::Mccv { k, .. } | CvScheme::Multinomial { k } => k,
        }
    }

    /// Validation retention probability per fold.
    pub fn retention(&self) -> f64 {
        match *self {
            CvScheme::Mccv { p, .. } => p,
            CvScheme::Multinomial { k } => 1.0 / k as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CvScheme::Mccv { p, k } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(PplError::InvalidRetention(p));
                }
                if k < 1 {
                    return Err(PplError::InvalidParameter("MCCV needs k >= 1".into()));
                }
            }
            CvScheme::Multinomial { k } => {
                if k < 2 {
                    return Err(PplError::InvalidParameter("multinomial CV needs k >= 2".into()));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            CvScheme::Mccv { .. } => "mccv",
            CvScheme::Multinomial { .. } => "multinomial",
        }
    }
}

/// Per-fold validation membership masks over `n` points.
///
/// This is the single source of truth for fold assignment; the public split
/// constructors and the batch study drivers both consume it.
pub fn validation_masks(n: usize, scheme: &CvScheme, seed: RngSeed) -> Result<Vec<Vec<bool>>> {
    scheme.validate()?;
    match *scheme {
        CvScheme::Mccv { p, k } => Ok((0..k)
            .map(|fold| {
                let mut rng = seed.stream_rng(Stream::CvFold, fold as u64);
                (0..n).map(|_| rng.random::<f64>() < p).collect()
            })
            .collect()),
        CvScheme::Multinomial { k } => {
            let mut rng = seed.stream_rng(Stream::Labels, 0);
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            Ok((0..k)
                .map(|fold| labels.iter().map(|&l| l == fold).collect())
                .collect())
        }
    }
}

fn split_by_mask(
    points: &[Point],
    mask: &[bool],
    x: &PointPattern,
    evaluation: Option<&PointPattern>,
    retention: f64,
    fold: usize,
) -> Result<CvSplit> {
    let mut validation = Vec::new();
    let mut training = Vec::new();
    for (&p, &in_validation) in points.iter().zip(mask) {
        if in_validation {
            validation.push(p);
        } else {
            training.push(p);
        }
    }
    let w = x.window();
    Ok(CvSplit {
        training: PointPattern::new(training, w)?,
        validation: PointPattern::new(validation, w)?,
        evaluation: evaluation.cloned(),
        retention,
        fold,
    })
}

/// Splits for any scheme.
pub fn generate_splits(x: &PointPattern, scheme: &CvScheme, seed: RngSeed) -> Result<Vec<CvSplit>> {
    let masks = validation_masks(x.len(), scheme, seed)?;
    let retention = scheme.retention();
    masks
        .iter()
        .enumerate()
        .map(|(fold, mask)| split_by_mask(x.points(), mask, x, None, retention, fold))
        .collect()
}

/// Monte-Carlo CV: k independent p-thinnings; the retained part of each is
/// the validation set. Validation sets may overlap across folds.
pub fn mccv_splits(x: &PointPattern, p: f64, k: usize, seed: RngSeed) -> Result<Vec<CvSplit>> {
    generate_splits(x, &CvScheme::Mccv { p, k }, seed)
}

/// Multinomial CV: iid uniform fold labels; validation sets are pairwise
/// disjoint and their union is the pattern. Each is a 1/k-thinning.
pub fn multinomial_splits(x: &PointPattern, k: usize, seed: RngSeed) -> Result<Vec<CvSplit>> {
    generate_splits(x, &CvScheme::Multinomial { k }, seed)
}

/// Triples with an extra evaluation layer: the evaluation set is a
/// p_E-thinning of the pattern, and the scheme then splits the remainder.
pub fn nested_triples(
    x: &PointPattern,
    p_e: f64,
    scheme: &CvScheme,
    seed: RngSeed,
) -> Result<Vec<CvSplit>> {
    if !(p_e > 0.0 && p_e < 1.0) {
        return Err(PplError::InvalidRetention(p_e));
    }
    scheme.validate()?;
    let mut eval_rng = seed.stream_rng(Stream::Evaluation, 0);
    let mut eval_points = Vec::new();
    let mut rest = Vec::new();
    for &p in x.points() {
        if eval_rng.random::<f64>() < p_e {
            eval_points.push(p);
        } else {
            rest.push(p);
        }
    }
    let w = x.window();
    let evaluation = PointPattern::new(eval_points, w)?;
    let rest_pattern = PointPattern::new(rest, w)?;
    let masks = validation_masks(rest_pattern.len(), scheme, seed)?;
    let retention = scheme.retention();
    masks
        .iter()
        .enumerate()
        .map(|(fold, mask)| {
            split_by_mask(rest_pattern.points(), mask, x, Some(&evaluation), retention, fold)
        })
        .collect()
}

/// Sequential construction of multinomial CV: fold i's validation set is a
/// `1/(k-i+1)`-thinning of the points not yet assigned. Distributionally
/// identical to the label construction; kept as an equivalence oracle for
/// tests, not as a public splitting mode.
#[doc(hidden)]
pub fn multinomial_splits_sequential(
    x: &PointPattern,
    k: usize,
    seed: RngSeed,
) -> Result<Vec<CvSplit>> {
    if k < 2 {
        return Err(PplError::InvalidParameter("multinomial CV needs k >= 2".into()));
    }
    let n = x.len();
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut labels = vec![0usize; n];
    for fold in 0..k {
        let p_i = 1.0 / (k - fold) as f64;
        let mut rng = seed.stream_rng(Stream::CvFold, fold as u64);
        let mut still = Vec::new();
        for &idx in &unassigned {
            if fold + 1 < k && rng.random::<f64>() >= p_i {
                still.push(idx);
            } else {
                labels[idx] = fold;
            }
        }
        unassigned = still;
    }
    let retention = 1.0 / k as f64;
    (0..k)
        .map(|fold| {
            let mask: Vec<bool> = labels.iter().map(|&l| l == fold).collect();
            split_by_mask(x.points(), &mask, x, None, retention, fold)
        })
        .collect()
}
