//! Seeded sampling from the Gaussian, Student and Pearson type II
//! families.
//!
//! Every draw comes from an [`RngStream`] addressed by `(seed, stream_id)`,
//! so a replicate's sample depends only on its own stream and never on
//! how many other streams were consumed before it or on which thread.

use std::io::{self, Write};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A ChaCha8 keystream keyed by `seed` on stream `stream_id`.
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller; the second variate of each pair is
    /// kept for the next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang, boosting shapes below one with
    /// `G(α+1)·U^{1/α}`.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            return g * self.uniform().powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    pub fn chi_square(&mut self, dof: f64) -> f64 {
        2.0 * self.gamma(dof / 2.0)
    }

    /// Beta(a, b) as `G_a / (G_a + G_b)`.
    pub fn beta(&mut self, a: f64, b: f64) -> f64 {
        let x = self.gamma(a);
        let y = self.gamma(b);
        x / (x + y)
    }
}

/// `N` points in `R^m`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    points: Vec<f64>,
}

impl Sample {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSample("dimension must be at least 1".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidSample("sample is empty".into()));
        }
        if points.len() % dim != 0 {
            return Err(Error::InvalidSample(format!(
                "{} coordinates do not split into rows of width {dim}",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!("non-finite coordinate in row {}", pos / dim)));
        }
        Ok(Self { dim, points })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::InvalidSample(format!("row {i} has {} columns, expected {dim}", r.len())));
            }
            points.extend_from_slice(r);
        }
        Self::new(dim, points)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.dim, self.points.iter().map(|v| v * c).collect())
    }

    /// Every point shifted by `b`.
    pub fn translated(&self, b: &[f64]) -> Result<Self> {
        if b.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: b.len(),
            });
        }
        let pts = self
            .rows()
            .flat_map(|r| r.iter().zip(b).map(|(x, s)| x + s))
            .collect();
        Self::new(self.dim, pts)
    }

    /// Rows reordered so that row `i` of the result is row `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let rows: Vec<&[f64]> = order.iter().map(|&i| self.row(i)).collect();
        Self::from_rows(&rows)
    }

    /// CSV with header `x1,…,xm` and shortest round-trip decimal
    /// formatting. Each `comments` line is written first, prefixed by `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for r in self.rows() {
            line.clear();
            for (j, v) in r.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format_f64(*v));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// A point uniform on the unit sphere `S^{m−1}`, written into `out`.
pub fn sample_uniform_sphere_into(rng: &mut RngStream, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            *v = rng.normal();
            norm2 += *v * *v;
        }
        if norm2 > 1e-200 {
            let inv = 1.0 / norm2.sqrt();
            for v in out.iter_mut() {
                *v *= inv;
            }
            return;
        }
    }
}

pub fn sample_uniform_sphere(m: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut out = vec![0.0; m];
    sample_uniform_sphere_into(rng, &mut out);
    out
}

/// Draws `n` points from `spec`.
///
/// Gaussian: `a + L z`. Student: `a + L z √(ν/W)` with `W ∼ χ²_ν`.
/// Pearson II: `a + R L u` with `R² ∼ Beta(m/2, η+1)`, `u` uniform on the
/// sphere. `L` is the lower Cholesky factor of `Σ`.
pub fn sample(spec: &DistributionSpec, n: usize, rng: &mut RngStream) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let m = spec.dim();
    let mut points = vec![0.0; n * m];
    let mut z = vec![0.0; m];
    let mut lz = vec![0.0; m];
    let a = spec.location();
    for row in points.chunks_exact_mut(m) {
        let radius = match spec.family() {
            Family::Gaussian => {
                z.iter_mut().for_each(|v| *v = rng.normal());
                1.0
            }
            Family::Student { nu } => {
                z.iter_mut().for_each(|v| *v = rng.normal());
                (nu / rng.chi_square(nu)).sqrt()
            }
            Family::PearsonII { eta } => {
                sample_uniform_sphere_into(rng, &mut z);
                rng.beta(m as f64 / 2.0, eta + 1.0).sqrt()
            }
        };
        spec.scale().mul_factor(&z, &mut lz);
        for j in 0..m {
            row[j] = a[j] + radius * lz[j];
        }
    }
    Sample::new(m, points)
}
