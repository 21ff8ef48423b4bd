//! Exact k-nearest-neighbour distances and the nearest-neighbour Rényi and
//! Shannon entropy estimators.
//!
//! For a sample `X_1..X_N` in `R^m`, with `ρ_i` the distance from `X_i` to
//! its `k`-th nearest neighbour among the other points,
//!
//! ```text
//! ζ_i = (N − 1) C_k V_m ρ_i^m,      C_k = [Γ(k) / Γ(k + 1 − q)]^{1/(1−q)}
//! Ĝ   = (1/N) Σ ζ_i^{1−q},          Ĥ_q = log(Ĝ) / (1 − q)
//! ```
//!
//! and the Shannon estimator is the `q → 1` limit, where `C_k → e^{−ψ(k)}`.
//! All sums are taken over sorted terms with compensated summation, so the
//! estimates do not depend on the order of the points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::Sample;
use crate::special::{digamma, ln_gamma, ln_unit_ball_volume};
use crate::sum::order_free_sum;

/// Sample sizes above this use the k-d tree under [`KnnMethod::Auto`].
pub const TREE_THRESHOLD: usize = 512;

const LEAF_SIZE: usize = 12;
const PARALLEL_THRESHOLD: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnnMethod {
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

/// Row `i` holds the distances from point `i` to its 1st..`k_max`-th
/// nearest neighbours, non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnDistances {
    n: usize,
    k_max: usize,
    rho: Vec<f64>,
}

impl KnnDistances {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rho[i * self.k_max..(i + 1) * self.k_max]
    }

    /// Distance from point `i` to its `k`-th nearest neighbour (1-based `k`).
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.rho[i * self.k_max + k - 1]
    }

    fn kth_column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.rho.iter().skip(k - 1).step_by(self.k_max).copied()
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Fixed-capacity list of the best `(d², index)` candidates, ordered
/// lexicographically so that equal distances prefer the lower index.
struct Candidates {
    items: Vec<(f64, usize)>,
}

impl Candidates {
    fn new(k: usize) -> Self {
        Self {
            items: vec![(f64::INFINITY, usize::MAX); k],
        }
    }

    fn reset(&mut self) {
        self.items.iter_mut().for_each(|c| *c = (f64::INFINITY, usize::MAX));
    }

    #[inline]
    fn worst(&self) -> f64 {
        self.items[self.items.len() - 1].0
    }

    #[inline]
    fn offer(&mut self, d2: f64, j: usize) {
        let last = self.items.len() - 1;
        let (wd, wj) = self.items[last];
        if d2 > wd || (d2 == wd && j >= wj) {
            return;
        }
        let mut pos = last;
        while pos > 0 {
            let (pd, pj) = self.items[pos - 1];
            if pd < d2 || (pd == d2 && pj < j) {
                break;
            }
            self.items[pos] = self.items[pos - 1];
            pos -= 1;
        }
        self.items[pos] = (d2, j);
    }

    fn write_row(&self, i: usize, row: &mut [f64]) -> Result<()> {
        let (d0, j0) = self.items[0];
        if d0 == 0.0 {
            return Err(Error::DuplicatePoints {
                first: i.min(j0),
                second: i.max(j0),
            });
        }
        for (r, (d2, _)) in row.iter_mut().zip(&self.items) {
            *r = d2.sqrt();
        }
        Ok(())
    }
}

fn validate(sample: &Sample, k_max: usize) -> Result<()> {
    let n = sample.len();
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    if k_max >= n {
        return Err(Error::InvalidArgument(format!(
            "k_max = {k_max} must be smaller than the sample size {n}"
        )));
    }
    Ok(())
}

/// Exact `k`-NN distances, choosing the kernel by sample size.
pub fn knn_distances(sample: &Sample, k_max: usize) -> Result<KnnDistances> {
    knn_distances_with(sample, k_max, KnnMethod::Auto)
}

pub fn knn_distances_with(sample: &Sample, k_max: usize, method: KnnMethod) -> Result<KnnDistances> {
    validate(sample, k_max)?;
    let method = match method {
        KnnMethod::Auto if sample.len() > TREE_THRESHOLD => KnnMethod::KdTree,
        KnnMethod::Auto => KnnMethod::BruteForce,
        other => other,
    };
    let n = sample.len();
    let mut rho = vec![0.0; n * k_max];
    match method {
        KnnMethod::BruteForce => brute_force(sample, k_max, &mut rho)?,
        _ => {
            let tree = KdTree::build(sample);
            if n >= PARALLEL_THRESHOLD {
                // Collected in block order so the reported duplicate does not
                // depend on scheduling.
                let outcomes: Vec<Result<()>> = rho
                    .par_chunks_mut(k_max * 256)
                    .enumerate()
                    .map(|(c, block)| {
                        let mut cand = Candidates::new(k_max);
                        for (r, row) in block.chunks_exact_mut(k_max).enumerate() {
                            let i = c * 256 + r;
                            tree.query(sample.row(i), i, &mut cand);
                            cand.write_row(i, row)?;
                        }
                        Ok(())
                    })
                    .collect();
                outcomes.into_iter().collect::<Result<Vec<()>>>()?;
            } else {
                let mut cand = Candidates::new(k_max);
                for (i, row) in rho.chunks_exact_mut(k_max).enumerate() {
                    tree.query(sample.row(i), i, &mut cand);
                    cand.write_row(i, row)?;
                }
            }
        }
    }
    Ok(KnnDistances { n, k_max, rho })
}

fn brute_force(sample: &Sample, k_max: usize, rho: &mut [f64]) -> Result<()> {
    let n = sample.len();
    let mut cand = Candidates::new(k_max);
    for i in 0..n {
        cand.reset();
        let p = sample.row(i);
        for j in 0..n {
            if j != i {
                cand.offer(dist2(p, sample.row(j)), j);
            }
        }
        cand.write_row(i, &mut rho[i * k_max..(i + 1) * k_max])?;
    }
    Ok(())
}

enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Axis-aligned k-d tree with median splits on the widest coordinate.
struct KdTree {
    dim: usize,
    nodes: Vec<Node>,
    /// Original index of the point at each leaf slot.
    order: Vec<usize>,
    /// Coordinates in leaf order.
    coords: Vec<f64>,
}

impl KdTree {
    fn build(sample: &Sample) -> Self {
        let dim = sample.dim();
        let mut order: Vec<usize> = (0..sample.len()).collect();
        let mut nodes = Vec::with_capacity(2 * sample.len() / LEAF_SIZE + 1);
        Self::build_node(sample, &mut order, 0, &mut nodes);
        let coords = order.iter().flat_map(|&i| sample.row(i).iter().copied()).collect();
        Self {
            dim,
            nodes,
            order,
            coords,
        }
    }

    fn build_node(sample: &Sample, slots: &mut [usize], offset: usize, nodes: &mut Vec<Node>) -> usize {
        let id = nodes.len();
        if slots.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                start: offset,
                end: offset + slots.len(),
            });
            return id;
        }
        let dim = sample.dim();
        let mut axis = 0;
        let mut widest = -1.0;
        for d in 0..dim {
            let (lo, hi) = slots.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = sample.row(i)[d];
                (lo.min(v), hi.max(v))
            });
            if hi - lo > widest {
                widest = hi - lo;
                axis = d;
            }
        }
        let mid = slots.len() / 2;
        slots.select_nth_unstable_by(mid, |&a, &b| sample.row(a)[axis].total_cmp(&sample.row(b)[axis]));
        let value = sample.row(slots[mid])[axis];
        nodes.push(Node::Split {
            axis,
            value,
            left: 0,
            right: 0,
        });
        let (lo, hi) = slots.split_at_mut(mid);
        let left = Self::build_node(sample, lo, offset, nodes);
        let right = Self::build_node(sample, hi, offset + mid, nodes);
        if let Node::Split { left: l, right: r, .. } = &mut nodes[id] {
            *l = left;
            *r = right;
        }
        id
    }

    fn query(&self, point: &[f64], self_index: usize, cand: &mut Candidates) {
        cand.reset();
        self.search(0, point, self_index, cand);
    }

    fn search(&self, node: usize, point: &[f64], self_index: usize, cand: &mut Candidates) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    let j = self.order[slot];
                    if j != self_index {
                        let c = &self.coords[slot * self.dim..(slot + 1) * self.dim];
                        cand.offer(dist2(point, c), j);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = point[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, point, self_index, cand);
                // Ties at the bound may still hold a lower-index neighbour.
                if diff * diff <= cand.worst() {
                    self.search(far, point, self_index, cand);
                }
            }
        }
    }
}

/// A nearest-neighbour entropy estimate in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub q: f64,
    pub k: usize,
    pub n: usize,
    pub dim: usize,
}

fn check_k(dists: &KnnDistances, k: usize) -> Result<()> {
    if k < 1 || k > dists.k_max {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={} (computed neighbours)",
            dists.k_max
        )));
    }
    if dists.n < 2 {
        return Err(Error::InvalidSample("at least two points are required".into()));
    }
    Ok(())
}

/// `log Ĝ_{N,k,q}`, accumulated in log space.
pub fn log_g_estimate(dists: &KnnDistances, dim: usize, k: usize, q: f64) -> Result<f64> {
    check_k(dists, k)?;
    if !(q > 0.0) || !q.is_finite() || q == 1.0 {
        return Err(Error::domain("g_estimate", format!("order q must be positive and != 1, got {q}")));
    }
    if !((k as f64) > q - 1.0) {
        return Err(Error::domain("g_estimate", format!("requires k > q - 1, got k = {k}, q = {q}")));
    }
    let one_minus_q = 1.0 - q;
    let m = dim as f64;
    let mut terms = Vec::with_capacity(dists.n);
    for (i, rho) in dists.kth_column(k).enumerate() {
        if rho == 0.0 && q > 1.0 {
            return Err(Error::domain(
                "g_estimate",
                format!("zero neighbour distance at point {i} makes zeta^(1-q) diverge for q > 1"),
            ));
        }
        terms.push(one_minus_q * m * rho.ln());
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::domain("g_estimate", "all neighbour distances are zero"));
    }
    let sum = order_free_sum(terms.into_iter().map(|t| (t - max).exp()).collect());
    let n = dists.n as f64;
    let ln_ck_scaled = ln_gamma(k as f64)? - ln_gamma(k as f64 + 1.0 - q)?;
    let constant = one_minus_q * ((n - 1.0).ln() + ln_unit_ball_volume(dim)?) + ln_ck_scaled;
    Ok(constant + max + sum.ln() - n.ln())
}

/// `Ĝ_{N,k,q} = (1/N) Σ ζ_i^{1−q}`.
pub fn g_estimate(dists: &KnnDistances, dim: usize, k: usize, q: f64) -> Result<f64> {
    Ok(log_g_estimate(dists, dim, k, q)?.exp())
}

/// `Ĥ_{N,k,q}` from precomputed distances.
pub fn renyi_from_distances(dists: &KnnDistances, dim: usize, k: usize, q: f64) -> Result<EntropyEstimate> {
    let value = log_g_estimate(dists, dim, k, q)? / (1.0 - q);
    Ok(EntropyEstimate {
        value,
        q,
        k,
        n: dists.n,
        dim,
    })
}

/// Shannon estimate `(m/N) Σ log ρ_i + log V_m + log(N−1) − ψ(k)`.
pub fn shannon_from_distances(dists: &KnnDistances, dim: usize, k: usize) -> Result<EntropyEstimate> {
    check_k(dists, k)?;
    let n = dists.n as f64;
    let sum_log = order_free_sum(dists.kth_column(k).map(f64::ln).collect());
    if !sum_log.is_finite() {
        return Err(Error::InvalidSample("zero neighbour distance in Shannon estimate".into()));
    }
    let value = dim as f64 * sum_log / n + ln_unit_ball_volume(dim)? + (n - 1.0).ln() - digamma(k as f64)?;
    Ok(EntropyEstimate {
        value,
        q: 1.0,
        k,
        n: dists.n,
        dim,
    })
}

/// Rényi entropy estimate `Ĥ_{N,k,q}` for `q ≠ 1`.
pub fn renyi_estimate(sample: &Sample, k: usize, q: f64) -> Result<EntropyEstimate> {
    if !(q > 0.0) || q == 1.0 || !q.is_finite() {
        return Err(Error::domain("renyi_estimate", format!("order q must be positive and != 1, got {q}")));
    }
    if !((k as f64) > q - 1.0) {
        return Err(Error::domain("renyi_estimate", format!("requires k > q - 1, got k = {k}, q = {q}")));
    }
    let dists = knn_distances(sample, k)?;
    renyi_from_distances(&dists, sample.dim(), k, q)
}

/// Shannon entropy estimate `Ĥ_{N,k,1}`.
pub fn shannon_estimate(sample: &Sample, k: usize) -> Result<EntropyEstimate> {
    let dists = knn_distances(sample, k)?;
    shannon_from_distances(&dists, sample.dim(), k)
}

/// Rényi estimate for `q ≠ 1`, Shannon for `q = 1`.
pub fn entropy_estimate(sample: &Sample, k: usize, q: f64) -> Result<EntropyEstimate> {
    if q == 1.0 {
        shannon_estimate(sample, k)
    } else {
        renyi_estimate(sample, k, q)
    }
}
