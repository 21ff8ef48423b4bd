//! Nearest-neighbour Rényi entropy estimation and maximum-entropy
//! goodness-of-fit tests for the multivariate Student and Pearson type II
//! families.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: log-gamma, digamma, log-beta and unit-ball volumes.
//! - [`linalg`]: the small symmetric positive-definite matrix type used for
//!   scale and covariance matrices.
//! - [`distributions`]: densities, closed-form Rényi entropies and their
//!   maxima over the fixed-covariance class.
//! - [`sampler`]: seeded, stream-addressable sampling of the three families.
//! - [`knn`]: exact k-nearest-neighbour distances and the entropy estimators.
//! - [`gof`]: the `W` and `W*` statistics.
//! - [`mc`]: Monte Carlo replication, critical values, power and rate fits.

pub mod distributions;
pub mod error;
pub mod gof;
pub mod knn;
pub mod linalg;
pub mod mc;
pub mod sampler;
pub mod special;
mod sum;

pub use distributions::{DistributionSpec, Family, ShapeParam};
pub use error::{Error, Result};
pub use linalg::SpdMatrix;
pub use sampler::{RngStream, Sample};
