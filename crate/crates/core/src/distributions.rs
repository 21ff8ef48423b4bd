//! The Gaussian, multivariate Student and Pearson type II families:
//! densities, closed-form Rényi entropies, maximum-entropy values and the
//! moment conditions under which the nearest-neighbour estimator converges.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::special::{ln_beta, ln_gamma};

/// A shape parameter (`ν` or `η`) that may be infinite. Infinity selects
/// the Gaussian limit of either family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeParam {
    Finite(f64),
    Infinite,
}

impl ShapeParam {
    pub fn is_infinite(self) -> bool {
        matches!(self, ShapeParam::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ShapeParam::Finite(v) => Some(v),
            ShapeParam::Infinite => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl From<f64> for ShapeParam {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ShapeParam::Infinite
        } else {
            ShapeParam::Finite(v)
        }
    }
}

impl fmt::Display for ShapeParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeParam::Finite(v) => write!(f, "{v}"),
            ShapeParam::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for ShapeParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(ShapeParam::Infinite);
        }
        let v: f64 = t.parse().map_err(|_| format!("expected a number or `inf`, got `{s}`"))?;
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(format!("expected a number or `inf`, got `{s}`"));
        }
        Ok(ShapeParam::from(v))
    }
}

impl Serialize for ShapeParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ShapeParam::Finite(v) => s.serialize_f64(*v),
            ShapeParam::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ShapeParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ShapeParam::from(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Family tag with its (finite) shape parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    Student { nu: f64 },
    PearsonII { eta: f64 },
}

/// The two families that carry a goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFamily {
    Student,
    #[serde(rename = "pearson2", alias = "pearsonii")]
    PearsonII,
}

impl fmt::Display for TestFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestFamily::Student => "student",
            TestFamily::PearsonII => "pearson2",
        })
    }
}

/// A fully specified elliptical distribution: family, location `a` and
/// scale `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    family: Family,
    location: Vec<f64>,
    scale: SpdMatrix,
}

impl DistributionSpec {
    pub fn gaussian(location: Vec<f64>, scale: SpdMatrix) -> Result<Self> {
        Self::build(Family::Gaussian, location, scale)
    }

    /// Multivariate Student with `ν > 2`; `ν = ∞` gives the Gaussian.
    pub fn student(nu: ShapeParam, location: Vec<f64>, scale: SpdMatrix) -> Result<Self> {
        let family = match nu {
            ShapeParam::Infinite => Family::Gaussian,
            ShapeParam::Finite(nu) => {
                if !(nu > 2.0) || !nu.is_finite() {
                    return Err(Error::domain("student", format!("degrees of freedom must satisfy nu > 2, got {nu}")));
                }
                Family::Student { nu }
            }
        };
        Self::build(family, location, scale)
    }

    /// Pearson type II with `η > 0`; `η = ∞` gives the Gaussian.
    pub fn pearson_ii(eta: ShapeParam, location: Vec<f64>, scale: SpdMatrix) -> Result<Self> {
        let family = match eta {
            ShapeParam::Infinite => Family::Gaussian,
            ShapeParam::Finite(eta) => {
                if !(eta > 0.0) || !eta.is_finite() {
                    return Err(Error::domain("pearson_ii", format!("shape must satisfy eta > 0, got {eta}")));
                }
                Family::PearsonII { eta }
            }
        };
        Self::build(family, location, scale)
    }

    /// `family(0, I_m, param)`.
    pub fn standard(family: TestFamily, param: ShapeParam, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let loc = vec![0.0; dim];
        let scale = SpdMatrix::identity(dim);
        match family {
            TestFamily::Student => Self::student(param, loc, scale),
            TestFamily::PearsonII => Self::pearson_ii(param, loc, scale),
        }
    }

    fn build(family: Family, location: Vec<f64>, scale: SpdMatrix) -> Result<Self> {
        if location.len() != scale.dim() {
            return Err(Error::DimensionMismatch {
                expected: scale.dim(),
                actual: location.len(),
            });
        }
        if location.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("location must be finite".into()));
        }
        Ok(Self {
            family,
            location,
            scale,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    pub fn scale(&self) -> &SpdMatrix {
        &self.scale
    }

    /// `log` of the normalising constant including `|Σ|^{-1/2}`.
    fn ln_normalizer(&self) -> f64 {
        let m = self.dim() as f64;
        let half_log_det = 0.5 * self.scale.log_det();
        let c = match self.family {
            Family::Gaussian => -0.5 * m * (2.0 * PI).ln(),
            Family::Student { nu } => {
                ln_gamma_unchecked((nu + m) / 2.0) - 0.5 * m * (PI * nu).ln() - ln_gamma_unchecked(nu / 2.0)
            }
            Family::PearsonII { eta } => {
                ln_gamma_unchecked(m / 2.0 + eta + 1.0) - 0.5 * m * PI.ln() - ln_gamma_unchecked(eta + 1.0)
            }
        };
        c - half_log_det
    }

    /// Density at `x`. Pearson II is exactly zero outside its ellipsoid.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.location).map(|(xi, ai)| xi - ai).collect();
        let d2 = self.scale.mahalanobis_sq(&centered)?;
        let m = self.dim() as f64;
        let ln_kernel = match self.family {
            Family::Gaussian => -0.5 * d2,
            Family::Student { nu } => -0.5 * (nu + m) * (d2 / nu).ln_1p(),
            Family::PearsonII { eta } => {
                if d2 >= 1.0 {
                    return Ok(0.0);
                }
                eta * (-d2).ln_1p()
            }
        };
        Ok((self.ln_normalizer() + ln_kernel).exp())
    }
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    ln_gamma(x).expect("positive by construction")
}

/// Shannon entropy of `N_m(a, Σ)`: `log[(2πe)^{m/2} |Σ|^{1/2}]`.
pub fn gaussian_shannon_entropy(scale: &SpdMatrix) -> f64 {
    let m = scale.dim() as f64;
    0.5 * m * (2.0 * PI).ln() + 0.5 * m + 0.5 * scale.log_det()
}

/// The constant `c₂(m, ν, q)` with `H_q(T_m(a, Σ, ν)) = ½ log|Σ| + c₂`.
pub fn student_entropy_constant(m: usize, nu: f64, q: f64) -> Result<f64> {
    check_order("student_entropy_constant", q)?;
    let mf = m as f64;
    let first = q * (nu + mf) / 2.0 - mf / 2.0;
    if !(first > 0.0) {
        return Err(Error::domain(
            "student_entropy_constant",
            format!("first Beta argument q(nu+m)/2 - m/2 = {first} must be positive (nu={nu}, m={m}, q={q})"),
        ));
    }
    let half_m = mf / 2.0;
    let log_ratio = ln_beta(first, half_m)? - q * ln_beta(nu / 2.0, half_m)?;
    Ok(log_ratio / (1.0 - q) + half_m * (PI * nu).ln() - ln_gamma(half_m)?)
}

/// The constant `c₂*(m, η, q)` with `H_q(P_m(a, Σ, η)) = ½ log|Σ| + c₂*`.
pub fn pearson_entropy_constant(m: usize, eta: f64, q: f64) -> Result<f64> {
    check_order("pearson_entropy_constant", q)?;
    let mf = m as f64;
    let first = q * eta + 1.0;
    if !(first > 0.0) {
        return Err(Error::domain(
            "pearson_entropy_constant",
            format!("first Beta argument q*eta + 1 = {first} must be positive"),
        ));
    }
    let half_m = mf / 2.0;
    let log_ratio = ln_beta(first, half_m)? - q * ln_beta(eta + 1.0, half_m)?;
    Ok(log_ratio / (1.0 - q) + half_m * PI.ln() - ln_gamma(half_m)?)
}

fn check_order(function: &'static str, q: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::domain(function, format!("order q must be positive and finite, got {q}")));
    }
    if q == 1.0 {
        return Err(Error::domain(function, "order q = 1 is the Shannon entropy; use the Shannon path"));
    }
    Ok(())
}

/// Closed-form Rényi entropy `H_q(f)` for `q > 0, q ≠ 1`.
pub fn renyi_entropy_closed_form(spec: &DistributionSpec, q: f64) -> Result<f64> {
    check_order("renyi_entropy_closed_form", q)?;
    let m = spec.dim();
    let half_log_det = 0.5 * spec.scale().log_det();
    match spec.family() {
        Family::Gaussian => {
            let mf = m as f64;
            Ok(half_log_det + 0.5 * mf * (2.0 * PI).ln() - mf / (2.0 * (1.0 - q)) * q.ln())
        }
        Family::Student { nu } => Ok(half_log_det + student_entropy_constant(m, nu, q)?),
        Family::PearsonII { eta } => Ok(half_log_det + pearson_entropy_constant(m, eta, q)?),
    }
}

/// Maximum of `H_q` over densities with fixed mean and covariance `C`,
/// together with the order `q` it applies to and the maximising scale `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntropy {
    pub value: f64,
    pub q: f64,
    pub scale: SpdMatrix,
}

/// Entropy order matched to a null family parameter: Student
/// `q = 1 − 2/(ν+m)`, Pearson II `q = 1 + 1/η`, and `q = 1` in the
/// Gaussian limit.
pub fn entropy_order(family: TestFamily, param: ShapeParam, m: usize) -> Result<f64> {
    let mf = m as f64;
    match (family, param) {
        (_, ShapeParam::Infinite) => Ok(1.0),
        (TestFamily::Student, ShapeParam::Finite(nu)) => {
            if !(nu > 2.0) || !nu.is_finite() {
                return Err(Error::domain("entropy_order", format!("nu must satisfy nu > 2, got {nu}")));
            }
            Ok(1.0 - 2.0 / (nu + mf))
        }
        (TestFamily::PearsonII, ShapeParam::Finite(eta)) => {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(Error::domain("entropy_order", format!("eta must satisfy eta > 0, got {eta}")));
            }
            Ok(1.0 + 1.0 / eta)
        }
    }
}

/// Maximum Rényi entropy over the class with covariance `C`, attained by
/// the Student (`q < 1`) or Pearson II (`q > 1`) member. An infinite
/// parameter returns the Gaussian Shannon maximum with `q = 1`.
pub fn max_renyi_entropy(m: usize, cov: &SpdMatrix, family: TestFamily, param: ShapeParam) -> Result<MaxEntropy> {
    if cov.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: cov.dim(),
        });
    }
    let q = entropy_order(family, param, m)?;
    let mf = m as f64;
    match (family, param) {
        (_, ShapeParam::Infinite) => Ok(MaxEntropy {
            value: gaussian_shannon_entropy(cov),
            q,
            scale: cov.clone(),
        }),
        (TestFamily::Student, ShapeParam::Finite(nu)) => {
            let scale = cov.scale(1.0 - 2.0 / nu)?;
            let value = 0.5 * scale.log_det() + student_entropy_constant(m, nu, q)?;
            Ok(MaxEntropy { value, q, scale })
        }
        (TestFamily::PearsonII, ShapeParam::Finite(eta)) => {
            let scale = cov.scale(2.0 * eta + mf + 2.0)?;
            let value = 0.5 * scale.log_det() + pearson_entropy_constant(m, eta, q)?;
            Ok(MaxEntropy { value, q, scale })
        }
    }
}

/// `r_c(f) = sup{r : E‖X‖^r < ∞}`; `+∞` for light or compact tails.
pub fn critical_moment(spec: &DistributionSpec) -> f64 {
    match spec.family() {
        Family::Student { nu } => nu,
        Family::Gaussian | Family::PearsonII { .. } => f64::INFINITY,
    }
}

/// Convergence mode of the `Ĝ` estimator being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceMode {
    /// `E[Ĝ] → G_q`.
    Mean,
    /// `E[Ĝ − G_q]² → 0`.
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub holds: bool,
    pub reason: Option<String>,
}

/// Moment-side condition for convergence of the nearest-neighbour
/// estimator at order `q`. For `q > 1` the only requirement is
/// `q < (k+1)/2`, which depends on `k` and is left to the caller.
pub fn check_estimator_conditions(spec: &DistributionSpec, q: f64, mode: ConvergenceMode) -> Result<ConditionCheck> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::domain("check_estimator_conditions", format!("q must be positive, got {q}")));
    }
    if q >= 1.0 {
        return Ok(ConditionCheck {
            holds: true,
            reason: (q > 1.0).then(|| "q > 1: requires q < (k+1)/2, to be checked against k".to_string()),
        });
    }
    let m = spec.dim() as f64;
    let rc = critical_moment(spec);
    let (bound, label) = match mode {
        ConvergenceMode::Mean => (m * (1.0 - q) / q, "m(1-q)/q"),
        ConvergenceMode::L2 => {
            if q <= 0.5 {
                return Ok(ConditionCheck {
                    holds: false,
                    reason: Some("q ≤ 1/2".to_string()),
                });
            }
            (2.0 * m * (1.0 - q) / (2.0 * q - 1.0), "2m(1-q)/(2q-1)")
        }
    };
    let holds = rc > bound;
    Ok(ConditionCheck {
        holds,
        reason: (!holds).then(|| format!("critical moment {rc} does not exceed {label} = {bound}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std1(family: TestFamily, p: f64) -> DistributionSpec {
        DistributionSpec::standard(family, ShapeParam::from(p), 1).unwrap()
    }

    #[test]
    fn densities_at_known_points() {
        let g = std1(TestFamily::Student, f64::INFINITY);
        assert!((g.density(&[0.0]).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);

        let p = std1(TestFamily::PearsonII, 1.0);
        assert_eq!(p.density(&[2.0]).unwrap(), 0.0);
        assert_eq!(p.density(&[1.0]).unwrap(), 0.0);

        let t = std1(TestFamily::Student, 3.0);
        let want = 2.0 / (PI * 3f64.sqrt());
        assert!((t.density(&[0.0]).unwrap() - want).abs() < 1e-14);
        assert!(t.density(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn infinite_parameters_canonicalize_to_gaussian() {
        assert_eq!(std1(TestFamily::Student, f64::INFINITY).family(), Family::Gaussian);
        assert_eq!(std1(TestFamily::PearsonII, f64::INFINITY).family(), Family::Gaussian);
    }

    #[test]
    fn parameter_validation() {
        assert!(DistributionSpec::standard(TestFamily::Student, ShapeParam::Finite(2.0), 1).is_err());
        assert!(DistributionSpec::standard(TestFamily::PearsonII, ShapeParam::Finite(-1.0), 1).is_err());
        assert!(DistributionSpec::student(ShapeParam::Finite(5.0), vec![0.0, 0.0], SpdMatrix::identity(1)).is_err());
    }

    #[test]
    fn gaussian_renyi_closed_form_q2() {
        let g = std1(TestFamily::Student, f64::INFINITY);
        let want = 0.5 * (4.0 * PI).ln();
        assert!((renyi_entropy_closed_form(&g, 2.0).unwrap() - want).abs() < 1e-14);
        assert!(renyi_entropy_closed_form(&g, 1.0).is_err());
        assert!(renyi_entropy_closed_form(&g, 0.0).is_err());
    }

    #[test]
    fn gaussian_renyi_continuous_at_one() {
        let scale = SpdMatrix::new(2, vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let g = DistributionSpec::gaussian(vec![1.0, -1.0], scale.clone()).unwrap();
        let h1 = gaussian_shannon_entropy(&scale);
        for q in [1.0 - 1e-6, 1.0 + 1e-6] {
            assert!((renyi_entropy_closed_form(&g, q).unwrap() - h1).abs() < 1e-5);
        }
    }

    #[test]
    fn student_close_to_gaussian_at_large_nu() {
        let g = renyi_entropy_closed_form(&std1(TestFamily::Student, f64::INFINITY), 0.9).unwrap();
        let t = renyi_entropy_closed_form(&std1(TestFamily::Student, 100.0), 0.9).unwrap();
        assert!((g - t).abs() < 2e-2);
    }

    #[test]
    fn closed_forms_converge_to_gaussian() {
        for m in 1..=3 {
            for q in [0.8, 0.95, 1.2, 2.0] {
                let g = DistributionSpec::standard(TestFamily::Student, ShapeParam::Infinite, m).unwrap();
                let hg = renyi_entropy_closed_form(&g, q).unwrap();
                let t = DistributionSpec::standard(TestFamily::Student, ShapeParam::Finite(1e6), m).unwrap();
                // Unit covariance needs scale (2η + m + 2)·I for Pearson II.
                let eta = 1e6;
                let scale = SpdMatrix::scaled_identity(m, 2.0 * eta + m as f64 + 2.0).unwrap();
                let p = DistributionSpec::pearson_ii(ShapeParam::Finite(eta), vec![0.0; m], scale).unwrap();
                assert!((renyi_entropy_closed_form(&t, q).unwrap() - hg).abs() <= 1e-4, "student m={m} q={q}");
                assert!((renyi_entropy_closed_form(&p, q).unwrap() - hg).abs() <= 1e-4, "pearson m={m} q={q}");
            }
        }
    }

    #[test]
    fn closed_form_non_increasing_in_q() {
        let scale = SpdMatrix::new(2, vec![1.5, 0.2, 0.2, 0.7]).unwrap();
        let specs = [
            DistributionSpec::gaussian(vec![0.0; 2], scale.clone()).unwrap(),
            DistributionSpec::student(ShapeParam::Finite(4.0), vec![0.0; 2], scale.clone()).unwrap(),
            DistributionSpec::pearson_ii(ShapeParam::Finite(2.0), vec![0.0; 2], scale).unwrap(),
        ];
        for spec in &specs {
            let mut prev = f64::INFINITY;
            for i in 0..=49 {
                let q = 0.55 + 0.05 * i as f64;
                if (q - 1.0).abs() < 1e-9 {
                    continue;
                }
                if let Ok(h) = renyi_entropy_closed_form(spec, q) {
                    assert!(h <= prev + 1e-12, "{:?} q={q}", spec.family());
                    prev = h;
                }
            }
        }
    }

    #[test]
    fn student_beta_precondition_names_argument() {
        // m=3, nu=3, q=0.4: 0.4*3 - 1.5 < 0
        let t = DistributionSpec::standard(TestFamily::Student, ShapeParam::Finite(3.0), 3).unwrap();
        let err = renyi_entropy_closed_form(&t, 0.4).unwrap_err();
        assert!(err.to_string().contains("first Beta argument"), "{err}");
    }

    #[test]
    fn max_entropy_gaussian_limit() {
        let c = SpdMatrix::identity(1);
        let r = max_renyi_entropy(1, &c, TestFamily::Student, ShapeParam::Infinite).unwrap();
        assert_eq!(r.q, 1.0);
        assert!((r.value - 0.5 * (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-14);
    }

    #[test]
    fn max_entropy_student_nu6() {
        let c = SpdMatrix::identity(1);
        let r = max_renyi_entropy(1, &c, TestFamily::Student, ShapeParam::Finite(6.0)).unwrap();
        assert!((r.q - 5.0 / 7.0).abs() < 1e-15);
        assert!((r.scale.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        let want = 0.5 * (2.0f64 / 3.0).ln() + student_entropy_constant(1, 6.0, 5.0 / 7.0).unwrap();
        assert_eq!(r.value, want);
        let spec = DistributionSpec::student(ShapeParam::Finite(6.0), vec![0.0], r.scale.clone()).unwrap();
        assert!((renyi_entropy_closed_form(&spec, r.q).unwrap() - r.value).abs() <= 1e-12);
    }

    #[test]
    fn max_entropy_pearson_eta1() {
        let c = SpdMatrix::identity(2);
        let r = max_renyi_entropy(2, &c, TestFamily::PearsonII, ShapeParam::Finite(1.0)).unwrap();
        assert_eq!(r.q, 2.0);
        assert_eq!(r.scale.get(0, 0), 6.0);
        assert_eq!(r.scale.get(0, 1), 0.0);
        let want = 0.5 * 36f64.ln() + pearson_entropy_constant(2, 1.0, 2.0).unwrap();
        assert!((r.value - want).abs() < 1e-14);
    }

    #[test]
    fn max_entropy_rejects_bad_params() {
        let c = SpdMatrix::identity(1);
        assert!(max_renyi_entropy(1, &c, TestFamily::Student, ShapeParam::Finite(2.0)).is_err());
        assert!(max_renyi_entropy(1, &c, TestFamily::PearsonII, ShapeParam::Finite(0.0)).is_err());
        assert!(max_renyi_entropy(2, &c, TestFamily::PearsonII, ShapeParam::Finite(1.0)).is_err());
    }

    #[test]
    fn max_entropy_dominates_other_members_of_class() {
        // Fixed covariance C = I: the maximiser at q beats the Gaussian and a
        // mismatched Student with the same covariance.
        let m = 2;
        let c = SpdMatrix::identity(m);
        let best = max_renyi_entropy(m, &c, TestFamily::Student, ShapeParam::Finite(5.0)).unwrap();
        let g = DistributionSpec::gaussian(vec![0.0; m], c.clone()).unwrap();
        assert!(renyi_entropy_closed_form(&g, best.q).unwrap() < best.value);
        let other = DistributionSpec::student(ShapeParam::Finite(12.0), vec![0.0; m], c.scale(1.0 - 2.0 / 12.0).unwrap()).unwrap();
        assert!(renyi_entropy_closed_form(&other, best.q).unwrap() < best.value);
    }

    #[test]
    fn critical_moments() {
        assert_eq!(critical_moment(&std1(TestFamily::Student, 3.0)), 3.0);
        assert_eq!(critical_moment(&std1(TestFamily::Student, f64::INFINITY)), f64::INFINITY);
        assert_eq!(critical_moment(&std1(TestFamily::PearsonII, 2.0)), f64::INFINITY);
    }

    #[test]
    fn estimator_conditions() {
        let t = std1(TestFamily::Student, 3.0);
        assert!(check_estimator_conditions(&t, 0.9, ConvergenceMode::Mean).unwrap().holds);

        let t2 = DistributionSpec::standard(TestFamily::Student, ShapeParam::Finite(3.0), 2).unwrap();
        let r = check_estimator_conditions(&t2, 0.6, ConvergenceMode::L2).unwrap();
        assert!(!r.holds);

        let g = std1(TestFamily::Student, f64::INFINITY);
        for q in [0.51, 0.7, 0.99] {
            assert!(check_estimator_conditions(&g, q, ConvergenceMode::L2).unwrap().holds);
        }
        let r = check_estimator_conditions(&g, 0.5, ConvergenceMode::L2).unwrap();
        assert!(!r.holds);
        assert_eq!(r.reason.as_deref(), Some("q ≤ 1/2"));
    }

    #[test]
    fn shape_param_parsing_and_serde() {
        assert_eq!("inf".parse::<ShapeParam>().unwrap(), ShapeParam::Infinite);
        assert_eq!("3.5".parse::<ShapeParam>().unwrap(), ShapeParam::Finite(3.5));
        assert!("abc".parse::<ShapeParam>().is_err());
        let v: Vec<ShapeParam> = serde_json::from_str(r#"[3, "inf", 4.5]"#).unwrap();
        assert_eq!(v, vec![ShapeParam::Finite(3.0), ShapeParam::Infinite, ShapeParam::Finite(4.5)]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[3.0,"inf",4.5]"#);
    }
}
