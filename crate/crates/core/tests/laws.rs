//! Seed-fixed distributional checks for the sampler, estimators and
//! statistics.

use std::f64::consts::PI;

use renyi_gof::distributions::{renyi_entropy_closed_form, DistributionSpec, ShapeParam, TestFamily};
use renyi_gof::gof::{pearson_statistic, student_statistic};
use renyi_gof::knn::{g_estimate, knn_distances, renyi_estimate, shannon_estimate};
use renyi_gof::sampler::{sample, sample_uniform_sphere, RngStream, Sample};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn draw(family: TestFamily, param: ShapeParam, n: usize, seed: u64, stream: u64) -> Sample {
    let spec = DistributionSpec::standard(family, param, 1).unwrap();
    sample(&spec, n, &mut RngStream::new(seed, stream)).unwrap()
}

fn gaussian(n: usize, seed: u64, stream: u64) -> Sample {
    draw(TestFamily::Student, ShapeParam::Infinite, n, seed, stream)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn sphere_m1_signs_are_balanced() {
    let mut rng = RngStream::new(0x51, 0);
    let n = 10_000;
    let positive = (0..n).filter(|_| sample_uniform_sphere(1, &mut rng)[0] > 0.0).count();
    // Three binomial standard deviations.
    assert!((positive as f64 - 5000.0).abs() <= 150.0, "{positive} positive of {n}");
}

#[test]
fn sphere_m2_angle_is_uniform() {
    let mut rng = RngStream::new(0x52, 0);
    let (n, bins) = (10_000, 16);
    let mut counts = vec![0usize; bins];
    for _ in 0..n {
        let u = sample_uniform_sphere(2, &mut rng);
        let angle = u[1].atan2(u[0]) + PI;
        counts[((angle / (2.0 * PI) * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = n as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn student_entropy_agrees_with_closed_form() {
    let nu = 6.0;
    let q = 1.0 - 2.0 / (nu + 1.0);
    let spec = DistributionSpec::standard(TestFamily::Student, ShapeParam::Finite(nu), 1).unwrap();
    let target = renyi_entropy_closed_form(&spec, q).unwrap();
    let estimates: Vec<f64> = (0..50)
        .map(|s| {
            let x = sample(&spec, 5000, &mut RngStream::new(0x53, s)).unwrap();
            renyi_estimate(&x, 3, q).unwrap().value
        })
        .collect();
    let avg = mean(&estimates);
    assert!((avg - target).abs() < 0.03, "mean {avg} vs {target}");
}

#[test]
fn gaussian_g_estimate_converges() {
    let q = 0.9;
    let spec = DistributionSpec::standard(TestFamily::Student, ShapeParam::Infinite, 1).unwrap();
    let target = ((1.0 - q) * renyi_entropy_closed_form(&spec, q).unwrap()).exp();
    let g: Vec<f64> = (0..50)
        .map(|s| g_estimate(&knn_distances(&gaussian(5000, 0x54, s), 3).unwrap(), 1, 3, q).unwrap())
        .collect();
    let avg = mean(&g);
    assert!((avg - target).abs() < 0.02, "mean {avg} vs {target}");
}

#[test]
fn gaussian_entropy_targets() {
    let renyi: Vec<f64> = (0..50).map(|s| renyi_estimate(&gaussian(5000, 0x55, s), 3, 0.9).unwrap().value).collect();
    let shannon: Vec<f64> = (0..50).map(|s| shannon_estimate(&gaussian(5000, 0x55, s), 3).unwrap().value).collect();
    assert!((mean(&renyi) - 1.44576).abs() < 0.03, "renyi {}", mean(&renyi));
    assert!((mean(&shannon) - 1.41894).abs() < 0.03, "shannon {}", mean(&shannon));
}

#[test]
fn g_estimate_mean_squared_error_shrinks() {
    let q = 0.9;
    let spec = DistributionSpec::standard(TestFamily::Student, ShapeParam::Infinite, 1).unwrap();
    let target = ((1.0 - q) * renyi_entropy_closed_form(&spec, q).unwrap()).exp();
    let mse = |n: usize| {
        let errs: Vec<f64> = (0..100)
            .map(|s| {
                let g = g_estimate(&knn_distances(&gaussian(n, 0x56 + n as u64, s), 3).unwrap(), 1, 3, q).unwrap();
                (g - target).powi(2)
            })
            .collect();
        mean(&errs)
    };
    let (small, large) = (mse(500), mse(5000));
    assert!(small / large >= 2.0, "mse {small} at 500, {large} at 5000");
}

#[test]
fn student_null_statistic_is_small_and_positive() {
    let w: Vec<f64> = (0..100)
        .map(|s| {
            let x = draw(TestFamily::Student, ShapeParam::Finite(10.0), 5000, 0x57, s);
            student_statistic(&x, ShapeParam::Finite(10.0), 3).unwrap().value
        })
        .collect();
    let avg = mean(&w);
    assert!(avg > 0.0 && avg < 0.05, "mean W {avg}");
}

#[test]
fn pearson_null_statistic_is_near_zero() {
    let w: Vec<f64> = (0..100)
        .map(|s| {
            let x = draw(TestFamily::PearsonII, ShapeParam::Finite(12.0), 5000, 0x58, s);
            pearson_statistic(&x, ShapeParam::Finite(12.0), 3).unwrap().value
        })
        .collect();
    let avg = mean(&w);
    assert!(avg.abs() < 0.05, "mean W* {avg}");
}

#[test]
fn gaussian_data_against_heavy_null_approaches_its_limit() {
    // At q = 1/2 the limit is H_q(t_3 with unit variance) − H_q(N(0,1)),
    // 0.2257913526 by independent quadrature.
    let w: Vec<f64> = (0..100)
        .map(|s| student_statistic(&gaussian(5000, 0x59, s), ShapeParam::Finite(3.0), 3).unwrap().value)
        .collect();
    let avg = mean(&w);
    assert!((avg - 0.2257913526).abs() < 0.03, "mean W {avg}");
}
