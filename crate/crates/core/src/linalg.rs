//! Small dense symmetric positive-definite matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_PIVOT: f64 = 1e-300;
const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive-definite `m × m` matrix with a cached lower Cholesky
/// factor. Entries are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpdRepr", into = "SpdRepr")]
pub struct SpdMatrix {
    dim: usize,
    entries: Vec<f64>,
    chol: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpdRepr {
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<SpdRepr> for SpdMatrix {
    type Error = Error;

    fn try_from(r: SpdRepr) -> Result<Self> {
        SpdMatrix::new(r.dim, r.entries)
    }
}

impl From<SpdMatrix> for SpdRepr {
    fn from(m: SpdMatrix) -> Self {
        SpdRepr {
            dim: m.dim,
            entries: m.entries,
        }
    }
}

impl SpdMatrix {
    /// Builds a matrix from row-major entries. The input is symmetrized as
    /// `(A + Aᵀ)/2` after checking asymmetry is within rounding, then
    /// factorized.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        let mut sym = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = sym[i * dim + j];
                let b = sym[j * dim + i];
                let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        diff: (a - b).abs(),
                    });
                }
                let avg = 0.5 * (a + b);
                sym[i * dim + j] = avg;
                sym[j * dim + i] = avg;
            }
        }
        let chol = cholesky(dim, &sym)?;
        Ok(Self {
            dim,
            entries: sym,
            chol,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0).expect("identity is positive definite")
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Result<Self> {
        let mut e = vec![0.0; dim * dim];
        for i in 0..dim {
            e[i * dim + i] = c;
        }
        Self::new(dim, e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Lower-triangular factor `L` with `L Lᵀ = self`, row-major.
    pub fn cholesky_factor(&self) -> &[f64] {
        &self.chol
    }

    /// `log |A| = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.chol[i * self.dim + i].ln()).sum::<f64>()
    }

    /// `c · A` for `c > 0`, refactorized.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("scale factor must be positive, got {c}")));
        }
        Self::new(self.dim, self.entries.iter().map(|v| v * c).collect())
    }

    /// Quadratic form `vᵀ A⁻¹ v`, via forward substitution against `L`.
    pub fn mahalanobis_sq(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        let m = self.dim;
        let mut y = [0.0f64; 8];
        let mut heap;
        let y: &mut [f64] = if m <= 8 {
            &mut y[..m]
        } else {
            heap = vec![0.0; m];
            &mut heap
        };
        let mut acc = 0.0;
        for i in 0..m {
            let mut s = v[i];
            for k in 0..i {
                s -= self.chol[i * m + k] * y[k];
            }
            y[i] = s / self.chol[i * m + i];
            acc += y[i] * y[i];
        }
        Ok(acc)
    }

    /// Writes `L z` into `out`.
    pub fn mul_factor(&self, z: &[f64], out: &mut [f64]) {
        let m = self.dim;
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..=i {
                s += self.chol[i * m + k] * z[k];
            }
            out[i] = s;
        }
    }
}

fn cholesky(dim: usize, a: &[f64]) -> Result<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= l[j * dim + k] * l[j * dim + k];
        }
        if !(d > MIN_PIVOT) {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d });
        }
        let djj = d.sqrt();
        l[j * dim + j] = djj;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            l[i * dim + j] = s / djj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_reproduces_matrix() {
        let a = SpdMatrix::new(3, vec![4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]).unwrap();
        let l = a.cholesky_factor();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - a.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn log_det_of_diagonal() {
        let a = SpdMatrix::new(2, vec![2.0, 0.0, 0.0, 8.0]).unwrap();
        assert!((a.log_det() - 16f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn symmetrizes_rounding_asymmetry() {
        let a = SpdMatrix::new(2, vec![1.0, 0.3, 0.3 + 1e-17, 1.0]).unwrap();
        assert_eq!(a.get(0, 1), a.get(1, 0));
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        assert!(matches!(
            SpdMatrix::new(2, vec![1.0, 2.0, 2.0, 1.0]),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            SpdMatrix::new(2, vec![1.0, 0.5, 0.1, 1.0]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(SpdMatrix::new(2, vec![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn mahalanobis_against_explicit_inverse() {
        let a = SpdMatrix::new(2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        // A⁻¹ = [[3, -1], [-1, 2]] / 5
        let v = [1.0, -2.0];
        let want = (3.0 * 1.0 + 2.0 * 1.0 * 2.0 + 2.0 * 4.0) / 5.0;
        assert!((a.mahalanobis_sq(&v).unwrap() - want).abs() < 1e-14);
        assert!(a.mahalanobis_sq(&[1.0]).is_err());
    }

    #[test]
    fn serde_round_trip_revalidates() {
        let a = SpdMatrix::new(2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        let b: SpdMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<SpdMatrix>(r#"{"dim":2,"entries":[1,2,2,1]}"#).is_err());
    }
}
