//! Maximum-entropy goodness-of-fit statistics.
//!
//! Both statistics compare the largest Rényi entropy attainable with the
//! sample covariance against the nearest-neighbour estimate:
//!
//! - Student null `ν₀`: `q = 1 − 2/(ν₀+m)`, `Σ̂ = (1 − 2/ν₀) Ĉ`,
//!   `W = ½ log|Σ̂| + c₂(m, ν₀, q) − Ĥ_{N,k,q}`.
//! - Pearson II null `η₀`: `q = 1 + 1/η₀`, `Σ̂ = (2η₀ + m + 2) Ĉ`,
//!   `W* = ½ log|Σ̂| + c₂*(m, η₀, q) − Ĥ_{N,k,q}`.
//!
//! An infinite parameter gives the Gaussian null for either family, tested
//! with the Shannon estimator against `log[(2πe)^{m/2} |Ĉ|^{1/2}]`.
//! Large values reject; the statistic is returned signed.

use serde::{Deserialize, Serialize};

use crate::distributions::{
    check_estimator_conditions, entropy_order, max_renyi_entropy, ConvergenceMode, DistributionSpec, ShapeParam,
    TestFamily,
};
use crate::error::{Error, Result};
use crate::knn::{knn_distances, renyi_from_distances, shannon_from_distances, KnnDistances};
use crate::linalg::SpdMatrix;
use crate::sampler::Sample;
use crate::sum::compensated_sum;

/// Null family actually tested once infinite parameters are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullFamily {
    Student,
    #[serde(rename = "pearson2")]
    PearsonII,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofStatistic {
    pub value: f64,
    pub family: NullFamily,
    pub null_param: ShapeParam,
    pub q: f64,
    pub k: usize,
    pub n: usize,
    pub dim: usize,
    /// Set when the estimator's convergence conditions are not met at this
    /// `q`; the statistic is still computed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

/// Sample mean and unbiased covariance `Ĉ_N` (divisor `N − 1`).
pub fn sample_covariance(sample: &Sample) -> Result<(Vec<f64>, SpdMatrix)> {
    let n = sample.len();
    let m = sample.dim();
    if n < m + 1 {
        return Err(Error::InvalidSample(format!(
            "covariance needs at least m + 1 = {} points, got {n}",
            m + 1
        )));
    }
    let nf = n as f64;
    let mean: Vec<f64> = (0..m).map(|j| compensated_sum(sample.rows().map(|r| r[j])) / nf).collect();
    let mut cov = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let s = compensated_sum(sample.rows().map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))) / (nf - 1.0);
            cov[a * m + b] = s;
            cov[b * m + a] = s;
        }
    }
    let cov = SpdMatrix::new(m, cov).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::InvalidSample(format!("degenerate sample covariance: {e}")),
        other => other,
    })?;
    Ok((mean, cov))
}

/// Neighbour distances and covariance of one sample, shared by every null
/// evaluated on it.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    dists: KnnDistances,
    cov: SpdMatrix,
    n: usize,
    dim: usize,
}

impl PreparedSample {
    pub fn new(sample: &Sample, k_max: usize) -> Result<Self> {
        let (_, cov) = sample_covariance(sample)?;
        let dists = knn_distances(sample, k_max)?;
        Ok(Self {
            dists,
            cov,
            n: sample.len(),
            dim: sample.dim(),
        })
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.cov
    }

    pub fn distances(&self) -> &KnnDistances {
        &self.dists
    }

    /// `W` (Student) or `W*` (Pearson II) against the null parameter.
    pub fn statistic(&self, family: TestFamily, null_param: ShapeParam, k: usize) -> Result<GofStatistic> {
        if let ShapeParam::Finite(p) = null_param {
            match family {
                TestFamily::Student if !(p > 2.0) => {
                    return Err(Error::domain("student_statistic", format!("nu0 must satisfy nu0 > 2, got {p}")))
                }
                TestFamily::PearsonII if !(p > 0.0) => {
                    return Err(Error::domain("pearson_statistic", format!("eta0 must satisfy eta0 > 0, got {p}")))
                }
                _ => {}
            }
        }
        let m = self.dim;
        let q = entropy_order(family, null_param, m)?;
        if !((k as f64) > q - 1.0) {
            return Err(Error::domain(
                "pearson_statistic",
                format!("requires k > 1/eta0, got k = {k} with q = {q}"),
            ));
        }
        let max = max_renyi_entropy(m, &self.cov, family, null_param)?;
        let (estimate, result_family, warning) = match null_param {
            ShapeParam::Infinite => (shannon_from_distances(&self.dists, m, k)?, NullFamily::Gaussian, None),
            ShapeParam::Finite(p) => {
                let est = renyi_from_distances(&self.dists, m, k, q)?;
                match family {
                    TestFamily::Student => {
                        let spec = DistributionSpec::standard(TestFamily::Student, ShapeParam::Finite(p), m)?;
                        let check = check_estimator_conditions(&spec, q, ConvergenceMode::L2)?;
                        let warning = (!check.holds).then(|| {
                            format!(
                                "L2 convergence condition not met at q = {q}: {}",
                                check.reason.unwrap_or_default()
                            )
                        });
                        (est, NullFamily::Student, warning)
                    }
                    TestFamily::PearsonII => {
                        let warning = (q >= (k as f64 + 1.0) / 2.0)
                            .then(|| format!("L2 convergence requires q < (k+1)/2 = {}, got q = {q}", (k as f64 + 1.0) / 2.0));
                        (est, NullFamily::PearsonII, warning)
                    }
                }
            }
        };
        Ok(GofStatistic {
            value: max.value - estimate.value,
            family: result_family,
            null_param,
            q,
            k,
            n: self.n,
            dim: m,
            warning,
        })
    }
}

/// `W_{N,k}(m, ν₀)`.
pub fn student_statistic(sample: &Sample, nu0: ShapeParam, k: usize) -> Result<GofStatistic> {
    PreparedSample::new(sample, k)?.statistic(TestFamily::Student, nu0, k)
}

/// `W*_{N,k}(m, η₀)`.
pub fn pearson_statistic(sample: &Sample, eta0: ShapeParam, k: usize) -> Result<GofStatistic> {
    if let ShapeParam::Finite(eta) = eta0 {
        if !(eta > 0.0) {
            return Err(Error::domain("pearson_statistic", format!("eta0 must satisfy eta0 > 0, got {eta}")));
        }
        if !((k as f64) > 1.0 / eta) {
            return Err(Error::domain("pearson_statistic", format!("requires k > 1/eta0 = {}, got k = {k}", 1.0 / eta)));
        }
    }
    PreparedSample::new(sample, k)?.statistic(TestFamily::PearsonII, eta0, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample as draw, RngStream};

    #[test]
    fn covariance_of_two_points() {
        let s = Sample::new(1, vec![-1.0, 1.0]).unwrap();
        let (mean, cov) = sample_covariance(&s).unwrap();
        assert_eq!(mean, vec![0.0]);
        assert_eq!(cov.get(0, 0), 2.0);
    }

    #[test]
    fn covariance_of_triangle() {
        let s = Sample::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let (mean, cov) = sample_covariance(&s).unwrap();
        assert!((mean[0] - 1.0 / 3.0).abs() < 1e-15 && (mean[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((cov.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((cov.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((cov.get(0, 1) + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_translation_exact_for_dyadic_data() {
        // Dyadic coordinates and an integer shift keep every operation exact.
        let rows: Vec<[f64; 2]> = (0..16).map(|i| [(i as f64) * 0.25, ((i * 7) % 5) as f64 * 0.5]).collect();
        let s = Sample::from_rows(&rows).unwrap();
        let b = [3.0, -8.0];
        let (m0, c0) = sample_covariance(&s).unwrap();
        let (m1, c1) = sample_covariance(&s.translated(&b).unwrap()).unwrap();
        assert_eq!(c0.entries(), c1.entries());
        assert_eq!(m1[0], m0[0] + b[0]);
        assert_eq!(m1[1], m0[1] + b[1]);
    }

    #[test]
    fn covariance_requires_enough_points() {
        let s = Sample::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(sample_covariance(&s).is_err());
        let collinear = Sample::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert!(matches!(sample_covariance(&collinear), Err(Error::InvalidSample(_))));
    }

    fn gaussian_sample(n: usize, m: usize, seed: u64) -> Sample {
        let spec = DistributionSpec::standard(TestFamily::Student, ShapeParam::Infinite, m).unwrap();
        draw(&spec, n, &mut RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn statistics_are_scale_invariant() {
        let s = gaussian_sample(500, 2, 1);
        for (fam, p) in [
            (TestFamily::Student, ShapeParam::Finite(5.0)),
            (TestFamily::Student, ShapeParam::Infinite),
            (TestFamily::PearsonII, ShapeParam::Finite(4.0)),
        ] {
            let base = PreparedSample::new(&s, 3).unwrap().statistic(fam, p, 3).unwrap().value;
            for c in [0.1, 1.0, 10.0] {
                let v = PreparedSample::new(&s.scaled(c).unwrap(), 3)
                    .unwrap()
                    .statistic(fam, p, 3)
                    .unwrap()
                    .value;
                assert!((v - base).abs() <= 1e-9, "{fam:?} {p} c={c}");
            }
        }
    }

    #[test]
    fn gaussian_null_coherent_across_families() {
        let s = gaussian_sample(300, 2, 2);
        let a = student_statistic(&s, ShapeParam::Infinite, 3).unwrap();
        let b = pearson_statistic(&s, ShapeParam::Infinite, 3).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.family, NullFamily::Gaussian);
        assert_eq!(a.q, 1.0);
    }

    #[test]
    fn recorded_q_follows_family_mapping() {
        let s = gaussian_sample(200, 3, 3);
        let t = student_statistic(&s, ShapeParam::Finite(7.0), 3).unwrap();
        assert!((t.q - (1.0 - 2.0 / 10.0)).abs() < 1e-15);
        let p = pearson_statistic(&s, ShapeParam::Finite(4.0), 3).unwrap();
        assert!((p.q - 1.25).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let s = gaussian_sample(100, 1, 4);
        assert!(student_statistic(&s, ShapeParam::Finite(2.0), 3).is_err());
        assert!(pearson_statistic(&s, ShapeParam::Finite(0.0), 3).is_err());
        assert!(pearson_statistic(&s, ShapeParam::Finite(0.5), 2).is_err()); // k = 1/η₀
        assert!(pearson_statistic(&s, ShapeParam::Finite(0.5), 3).is_ok());
    }

    #[test]
    fn boundary_order_carries_warning() {
        // m = 1, ν₀ = 3 gives q = 1/2 exactly.
        let s = gaussian_sample(200, 1, 5);
        let t = student_statistic(&s, ShapeParam::Finite(3.0), 3).unwrap();
        assert_eq!(t.q, 0.5);
        assert!(t.warning.is_some());
        assert!(student_statistic(&s, ShapeParam::Finite(10.0), 3).unwrap().warning.is_none());
    }
}
