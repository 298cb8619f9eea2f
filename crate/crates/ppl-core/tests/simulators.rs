//! Monte-Carlo checks of the simulators against analytic count moments.

use ppl_core::field::ScalarField;
use ppl_core::geometry::Window;
use ppl_core::rng::RngSeed;
use ppl_core::sim::{
    simulate_hardcore, simulate_poisson, thin_independent, DppSampler, DppSpec, FieldMean,
    GaussianFieldSpec, HardCoreSpec, LgcpSampler,
};
use rayon::prelude::*;

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[test]
fn homogeneous_poisson_mean_count() {
    let field = ScalarField::constant(250.0);
    let counts: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|s| {
            simulate_poisson(&field, Window::unit(), RngSeed(s)).unwrap().len() as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 250.0).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn linear_trend_poisson_mean_count() {
    let field = ScalarField::linear_x(10.0, 480.0);
    let counts: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|s| {
            simulate_poisson(&field, Window::unit(), RngSeed(s)).unwrap().len() as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 250.0).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn lgcp_degenerates_to_poisson_at_zero_variance() {
    let spec = GaussianFieldSpec {
        mean: FieldMean::Constant { value: 250f64.ln() },
        sigma2: 1e-12,
        decay: 1.0,
        resolution: 32,
    };
    let sampler = LgcpSampler::new(&spec, Window::unit()).unwrap();
    let counts: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|s| sampler.sample(RngSeed(s)).unwrap().len() as f64)
        .collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 250.0).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn lgcp_constant_mean_field_count() {
    // Constant mean 3.5, variance 4: expected intensity e^{3.5 + 2} ~ 244.7.
    let spec = GaussianFieldSpec::new(FieldMean::Constant { value: 3.5 }, 4.0, 0.1);
    let sampler = LgcpSampler::new(&spec, Window::unit()).unwrap();
    let counts: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|s| sampler.sample(RngSeed(s)).unwrap().len() as f64)
        .collect();
    let (mean, se) = mean_and_se(&counts);
    let expected = (3.5f64 + 2.0).exp();
    assert!(
        (mean - expected).abs() < 3.0 * se,
        "mean {mean}, expected {expected}, se {se}"
    );
}

#[test]
fn lgcp_log_linear_mean_field_count() {
    // Field mean log(10 + 80x) with sigma2 = 2 log 5 gives intensity
    // 5 (10 + 80x) and an expected count of 250 on the unit square.
    let spec = GaussianFieldSpec::new(
        FieldMean::LogLinearX { offset: 10.0, slope: 80.0 },
        2.0 * 5f64.ln(),
        50.0,
    );
    let sampler = LgcpSampler::new(&spec, Window::unit()).unwrap();
    let counts: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|s| sampler.sample(RngSeed(s)).unwrap().len() as f64)
        .collect();
    let (mean, se) = mean_and_se(&counts);
    assert!((mean - 250.0).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn hardcore_mean_count_and_constraint() {
    let spec = HardCoreSpec::new(100.0, 0.05);
    let counts: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let x = simulate_hardcore(&spec, Window::unit(), RngSeed(s)).unwrap();
            assert!(x.min_pairwise_distance().unwrap() >= 0.05);
            x.len() as f64
        })
        .collect();
    let (mean, _) = mean_and_se(&counts);
    // Reference average point count 58.51 for these parameters.
    assert!(
        (mean - 58.51).abs() / 58.51 < 0.05,
        "hard-core mean count {mean} should be within 5% of 58.51"
    );
}

#[test]
fn dpp_mean_count_and_repulsion() {
    let spec = DppSpec::with_auto_truncation(250.0, 50.0, Window::unit()).unwrap();
    let sampler = DppSampler::new(&spec, Window::unit()).unwrap();
    let counts: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|s| sampler.sample(RngSeed(s)).unwrap().len() as f64)
        .collect();
    let (mean, _) = mean_and_se(&counts);
    assert!((mean - 250.0).abs() / 250.0 < 0.05, "dpp mean count {mean}");

    // Count variance strictly below the Poisson benchmark at matched rate.
    let m = counts.len() as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let poisson_counts: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|s| {
            simulate_poisson(&ScalarField::constant(250.0), Window::unit(), RngSeed(s))
                .unwrap()
                .len() as f64
        })
        .collect();
    let (pmean, _) = mean_and_se(&poisson_counts);
    let pvar =
        poisson_counts.iter().map(|c| (c - pmean).powi(2)).sum::<f64>() / (m - 1.0);
    assert!(var < pvar, "dpp count variance {var} should undershoot Poisson {pvar}");
}

#[test]
fn thinned_dpp_mean_count() {
    let spec = DppSpec::with_auto_truncation(250.0, 50.0, Window::unit()).unwrap();
    let sampler = DppSampler::new(&spec, Window::unit()).unwrap();
    let retention = ScalarField::linear_x(10.0 / 90.0, 80.0 / 90.0);
    let counts: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|s| {
            let x = sampler.sample(RngSeed(s)).unwrap();
            let (kept, _) =
                thin_independent(&x, |u| retention.eval(u), RngSeed(s ^ 0x5eed)).unwrap();
            kept.len() as f64
        })
        .collect();
    let (mean, _) = mean_and_se(&counts);
    assert!((mean - 138.9).abs() / 138.9 < 0.05, "thinned dpp mean count {mean}");
}

#[test]
fn binomial_thinning_oracle() {
    // Fixed 200-point pattern, retention 0.3: binomial mean 60.
    let x = simulate_poisson(&ScalarField::constant(200.0), Window::unit(), RngSeed(424))
        .unwrap();
    let n = x.len();
    let p = 0.3;
    let reps = 10_000u64;
    let kept: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|s| thin_independent(&x, |_| p, RngSeed(s)).unwrap().0.len() as f64)
        .collect();
    let (mean, _) = mean_and_se(&kept);
    let expect = n as f64 * p;
    let se = (n as f64 * p * (1.0 - p)).sqrt() / (reps as f64).sqrt();
    assert!((mean - expect).abs() < 3.0 * se, "mean {mean}, expect {expect}, se {se}");
}

#[test]
fn simulators_are_deterministic() {
    let field = ScalarField::linear_x(10.0, 480.0);
    let a = simulate_poisson(&field, Window::unit(), RngSeed(7)).unwrap();
    let b = simulate_poisson(&field, Window::unit(), RngSeed(7)).unwrap();
    assert_eq!(a, b);

    let spec = DppSpec::with_auto_truncation(50.0, 40.0, Window::unit()).unwrap();
    let sampler = DppSampler::new(&spec, Window::unit()).unwrap();
    assert_eq!(
        sampler.sample(RngSeed(3)).unwrap(),
        sampler.sample(RngSeed(3)).unwrap()
    );
}
