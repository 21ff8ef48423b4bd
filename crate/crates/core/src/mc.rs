//! Monte Carlo experiment engine.
//!
//! Each replicate `j` at sample size `N` draws its sample from its own
//! stream `(master_seed, N << 32 | j)`, so values do not depend on the
//! worker count, on the order replicates run in, or on which other sample
//! sizes share the grid.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, ShapeParam, TestFamily};
use crate::error::{Error, Result};
use crate::gof::PreparedSample;
use crate::sampler::{format_f64, sample, RngStream};
use crate::sum::compensated_sum;

/// Interpolation rule used for every empirical quantile, recorded in
/// result metadata.
pub const QUANTILE_SCHEME: &str = "linear interpolation between order statistics, h = (M-1)(1-alpha)+1";

/// Significance levels reported as columns of the summary table.
pub const SUMMARY_ALPHAS: [f64; 3] = [0.05, 0.01, 0.10];

fn default_failure_fraction() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: TestFamily,
    pub true_param: ShapeParam,
    pub null_param: ShapeParam,
    pub dim: usize,
    pub n_grid: Vec<usize>,
    pub k: usize,
    pub replicates: usize,
    pub alpha_levels: Vec<f64>,
    pub master_seed: u64,
    /// Fraction of failed replicates above which a sample size aborts the
    /// experiment.
    #[serde(default = "default_failure_fraction")]
    pub max_failure_fraction: f64,
}

impl ExperimentConfig {
    /// Every constraint violation, in a stable order. Empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push("dim must be at least 1".to_string());
        }
        if self.k == 0 {
            out.push("k must be at least 1".to_string());
        }
        if self.replicates < 2 {
            out.push(format!("replicates must be at least 2, got {}", self.replicates));
        }
        if self.replicates > u32::MAX as usize {
            out.push("replicates must fit in 32 bits".to_string());
        }
        if self.n_grid.is_empty() {
            out.push("n_grid must not be empty".to_string());
        }
        for &n in &self.n_grid {
            if n < self.dim + 1 {
                out.push(format!("n_grid entry {n} is below dim + 1 = {}", self.dim + 1));
            }
            if n <= self.k {
                out.push(format!("n_grid entry {n} must exceed k = {}", self.k));
            }
            if n > u32::MAX as usize {
                out.push(format!("n_grid entry {n} must fit in 32 bits"));
            }
        }
        let mut sorted = self.n_grid.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            out.push("n_grid entries must be distinct".to_string());
        }
        for &a in &self.alpha_levels {
            if !(a > 0.0 && a < 1.0) {
                out.push(format!("alpha level {a} must lie in (0, 1)"));
            }
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            out.push(format!(
                "max_failure_fraction must lie in [0, 1], got {}",
                self.max_failure_fraction
            ));
        }
        out.extend(param_violations(self.family, "true_param", self.true_param));
        out.extend(param_violations(self.family, "null_param", self.null_param));
        if let (TestFamily::PearsonII, ShapeParam::Finite(eta)) = (self.family, self.null_param) {
            if eta > 0.0 && !((self.k as f64) > 1.0 / eta) {
                out.push(format!("k = {} must exceed 1/eta0 = {}", self.k, 1.0 / eta));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }
}

fn param_violations(family: TestFamily, name: &str, p: ShapeParam) -> Option<String> {
    match (family, p) {
        (_, ShapeParam::Infinite) => None,
        (TestFamily::Student, ShapeParam::Finite(v)) if !(v > 2.0 && v.is_finite()) => {
            Some(format!("{name} for the student family must satisfy nu > 2, got {v}"))
        }
        (TestFamily::PearsonII, ShapeParam::Finite(v)) if !(v > 0.0 && v.is_finite()) => {
            Some(format!("{name} for the pearson2 family must satisfy eta > 0, got {v}"))
        }
        _ => None,
    }
}

/// Stream identifier of replicate `j` at sample size `n`.
pub fn replicate_stream(n: usize, j: usize) -> u64 {
    ((n as u64) << 32) | j as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEntry {
    pub alpha: f64,
    pub value: f64,
}

/// Replicates and summaries at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeResult {
    pub n: usize,
    /// One entry per replicate index; `None` marks a failed replicate.
    pub values: Vec<Option<f64>>,
    pub failures: Vec<ReplicateFailure>,
    pub mean: f64,
    pub std_error: f64,
    pub quantiles: Vec<QuantileEntry>,
}

impl SizeResult {
    /// Successful replicate values in replicate order.
    pub fn successes(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub quantile_scheme: String,
    pub per_n: Vec<SizeResult>,
}

impl McResult {
    pub fn size(&self, n: usize) -> Option<&SizeResult> {
        self.per_n.iter().find(|s| s.n == n)
    }

    /// `(N, w̄)` pairs in grid order.
    pub fn mean_curve(&self) -> Vec<(usize, f64)> {
        self.per_n.iter().map(|s| (s.n, s.mean)).collect()
    }

    /// JSON rendering; replicate arrays are dropped unless requested.
    pub fn to_json(&self, include_replicates: bool) -> String {
        let mut value = serde_json::to_value(self).expect("result serializes");
        if !include_replicates {
            if let Some(sizes) = value.get_mut("per_n").and_then(|v| v.as_array_mut()) {
                for s in sizes {
                    if let Some(obj) = s.as_object_mut() {
                        obj.remove("values");
                    }
                }
            }
        }
        serde_json::to_string_pretty(&value).expect("json value serializes")
    }
}

/// Runs the configured experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<McResult> {
    let mut out = run_study(config, &[config.null_param])?;
    Ok(out.remove(0))
}

/// Evaluates several null parameters on the same replicate samples. The
/// result for each null equals `run_experiment` with that `null_param`.
pub fn run_study(base: &ExperimentConfig, nulls: &[ShapeParam]) -> Result<Vec<McResult>> {
    if nulls.is_empty() {
        return Err(Error::InvalidArgument("at least one null parameter is required".into()));
    }
    let configs: Vec<ExperimentConfig> = nulls
        .iter()
        .map(|&null_param| ExperimentConfig {
            null_param,
            ..base.clone()
        })
        .collect();
    let problems: Vec<String> = configs.iter().flat_map(|c| c.violations()).collect();
    if !problems.is_empty() {
        return Err(Error::InvalidArgument(problems.join("; ")));
    }
    let spec = DistributionSpec::standard(base.family, base.true_param, base.dim)?;

    let mut per_null: Vec<Vec<SizeResult>> = vec![Vec::with_capacity(base.n_grid.len()); nulls.len()];
    for &n in &base.n_grid {
        let outcomes: Vec<Result<Vec<f64>>> = (0..base.replicates)
            .into_par_iter()
            .map(|j| {
                let mut rng = RngStream::new(base.master_seed, replicate_stream(n, j));
                let x = sample(&spec, n, &mut rng)?;
                let prepared = PreparedSample::new(&x, base.k)?;
                nulls
                    .iter()
                    .map(|&p| prepared.statistic(base.family, p, base.k).map(|s| s.value))
                    .collect()
            })
            .collect();

        let mut values: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(base.replicates); nulls.len()];
        let mut failures = Vec::new();
        for (j, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(ws) if ws.iter().all(|w| w.is_finite()) => {
                    for (slot, w) in values.iter_mut().zip(ws) {
                        slot.push(Some(w));
                    }
                }
                Ok(_) => {
                    failures.push(ReplicateFailure {
                        replicate: j,
                        message: "non-finite statistic".into(),
                    });
                    values.iter_mut().for_each(|v| v.push(None));
                }
                Err(e) if e.is_data_error() => {
                    failures.push(ReplicateFailure {
                        replicate: j,
                        message: e.to_string(),
                    });
                    values.iter_mut().for_each(|v| v.push(None));
                }
                Err(e) => return Err(e),
            }
        }
        if failures.len() as f64 > base.max_failure_fraction * base.replicates as f64 {
            return Err(Error::Experiment(format!(
                "{} of {} replicates failed at N = {n} (first: replicate {}: {})",
                failures.len(),
                base.replicates,
                failures[0].replicate,
                failures[0].message
            )));
        }
        for (slot, vals) in per_null.iter_mut().zip(values) {
            slot.push(size_result(n, vals, failures.clone(), &base.alpha_levels)?);
        }
    }

    Ok(configs
        .into_iter()
        .zip(per_null)
        .map(|(config, per_n)| McResult {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            quantile_scheme: QUANTILE_SCHEME.to_string(),
            per_n,
        })
        .collect())
}

fn size_result(n: usize, values: Vec<Option<f64>>, failures: Vec<ReplicateFailure>, alphas: &[f64]) -> Result<SizeResult> {
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let (mean, std_error) = summarize(&ok)?;
    let quantiles = alphas
        .iter()
        .map(|&alpha| Ok(QuantileEntry { alpha, value: empirical_quantile(&ok, alpha)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SizeResult {
        n,
        values,
        failures,
        mean,
        std_error,
        quantiles,
    })
}

/// Upper-tail critical value `ŵ_α`: the `1 − α` quantile with
/// `h = (M−1)(1−α) + 1` and linear interpolation between the `⌊h⌋`-th and
/// `⌈h⌉`-th order statistics.
pub fn empirical_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("quantile of an empty sample".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("quantile input contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * (1.0 - alpha) + 1.0;
    let lo = h.floor();
    let lower = sorted[lo as usize - 1];
    let upper = sorted[(h.ceil() as usize).min(sorted.len()) - 1];
    if lower == upper {
        return Ok(lower);
    }
    Ok(lower + (h - lo) * (upper - lower))
}

/// Proportion of values strictly above `critical`.
pub fn estimate_power(values: &[f64], critical: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().filter(|&&w| w > critical).count() as f64 / values.len() as f64
}

/// Mean and standard error `s/√M` with the `M − 1` variance divisor.
pub fn summarize(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "summary needs at least 2 values, got {}",
            values.len()
        )));
    }
    let m = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / m;
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub log_a: f64,
    pub b: f64,
    pub r2: f64,
    /// Sample sizes dropped because their mean was not positive.
    pub excluded: Vec<usize>,
}

/// Least-squares fit of `log w̄ = log a + b log N` over the positive means.
pub fn fit_convergence_rate(pairs: &[(usize, f64)]) -> Result<RateFit> {
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(n, w) in pairs {
        if w > 0.0 && w.is_finite() && n > 0 {
            xs.push((n as f64).ln());
            ys.push(w.ln());
        } else {
            excluded.push(n);
        }
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 positive means, got {}",
            xs.len()
        )));
    }
    let k = xs.len() as f64;
    let x_bar = compensated_sum(xs.iter().copied()) / k;
    let y_bar = compensated_sum(ys.iter().copied()) / k;
    let sxx = compensated_sum(xs.iter().map(|x| (x - x_bar) * (x - x_bar)));
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs at least two distinct N".into()));
    }
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)));
    let b = sxy / sxx;
    let log_a = y_bar - b * x_bar;
    let ss_res = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| {
        let r = y - log_a - b * x;
        r * r
    }));
    let ss_tot = compensated_sum(ys.iter().map(|y| (y - y_bar) * (y - y_bar)));
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { log_a, b, r2, excluded })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Counts normalised to integrate to one.
    pub fn densities(&self) -> Vec<f64> {
        let total: usize = self.counts.iter().sum();
        self.counts
            .iter()
            .map(|&c| c as f64 / (total as f64 * self.bin_width))
            .collect()
    }
}

const MAX_BINS: usize = 10_000;

/// Histogram with Freedman–Diaconis width `2·IQR/M^{1/3}`.
pub fn histogram(values: &[f64]) -> Result<Histogram> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument("histogram needs at least 2 values".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidArgument("histogram values must be finite".into()));
    }
    let iqr = empirical_quantile(values, 0.25)? - empirical_quantile(values, 0.75)?;
    let mut width = 2.0 * iqr / (values.len() as f64).cbrt();
    let span = max - min;
    let bins = if span == 0.0 {
        width = 1.0;
        1
    } else if !(width > 0.0) {
        width = span;
        1
    } else {
        let b = ((span / width).ceil() as usize).clamp(1, MAX_BINS);
        width = span / b as f64;
        b
    };
    let start = if span == 0.0 { min - 0.5 } else { min };
    let edges: Vec<f64> = (0..=bins).map(|i| start + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - start) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram {
        bin_width: width,
        edges,
        counts,
    })
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dim: usize,
    pub true_param: ShapeParam,
    pub null_param: ShapeParam,
    pub n: usize,
    pub k: usize,
    pub mean: f64,
    pub std_error: f64,
    pub q05: f64,
    pub q01: f64,
    pub q10: f64,
    /// Rejection rate at the 5% critical value of the matching null run.
    pub power_at_005: Option<f64>,
    pub rate_b: Option<f64>,
}

/// Summary rows for a set of results. Power is filled in whenever the set
/// also holds a run whose true parameter equals this row's null parameter
/// at the same family, dimension, `k` and `N`.
pub fn summary_rows(results: &[McResult]) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for r in results {
        let c = &r.config;
        let reference = results.iter().find(|o| {
            o.config.family == c.family
                && o.config.dim == c.dim
                && o.config.k == c.k
                && o.config.true_param == c.null_param
                && o.config.null_param == c.null_param
        });
        let rate_b = fit_convergence_rate(&r.mean_curve()).ok().map(|f| f.b);
        for s in &r.per_n {
            let ok = s.successes();
            let power_at_005 = match reference.and_then(|o| o.size(s.n)) {
                Some(null_size) => {
                    let critical = empirical_quantile(&null_size.successes(), 0.05)?;
                    Some(estimate_power(&ok, critical))
                }
                None => None,
            };
            rows.push(SummaryRow {
                dim: c.dim,
                true_param: c.true_param,
                null_param: c.null_param,
                n: s.n,
                k: c.k,
                mean: s.mean,
                std_error: s.std_error,
                q05: empirical_quantile(&ok, SUMMARY_ALPHAS[0])?,
                q01: empirical_quantile(&ok, SUMMARY_ALPHAS[1])?,
                q10: empirical_quantile(&ok, SUMMARY_ALPHAS[2])?,
                power_at_005,
                rate_b,
            });
        }
    }
    Ok(rows)
}

pub const SUMMARY_HEADER: &str = "m,true_param,null_param,N,k,mean,stderr,q05,q01,q10,power_at_005,rate_b";

fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> io::Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// Writes the summary table, preceded by `# ` comment lines.
pub fn write_summary_csv<W: Write>(mut w: W, rows: &[SummaryRow], comments: &[String]) -> io::Result<()> {
    write_comments(&mut w, comments)?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.dim,
            r.true_param,
            r.null_param,
            r.n,
            r.k,
            format_f64(r.mean),
            format_f64(r.std_error),
            format_f64(r.q05),
            format_f64(r.q01),
            format_f64(r.q10),
            opt(r.power_at_005),
            opt(r.rate_b),
        )?;
    }
    Ok(())
}

pub const HISTOGRAM_HEADER: &str = "m,true_param,null_param,N,bin_lo,bin_hi,count,density";

/// Freedman–Diaconis histograms of every `(result, N)` replicate set.
pub fn write_histograms_csv<W: Write>(mut w: W, results: &[McResult], comments: &[String]) -> Result<()> {
    let io_err = |e: io::Error| Error::Experiment(format!("writing histograms: {e}"));
    write_comments(&mut w, comments).map_err(io_err)?;
    writeln!(w, "{HISTOGRAM_HEADER}").map_err(io_err)?;
    for r in results {
        let c = &r.config;
        for s in &r.per_n {
            let h = histogram(&s.successes())?;
            for ((edge, count), density) in h.edges.windows(2).zip(&h.counts).zip(h.densities()) {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    c.dim,
                    c.true_param,
                    c.null_param,
                    s.n,
                    format_f64(edge[0]),
                    format_f64(edge[1]),
                    count,
                    format_f64(density)
                )
                .map_err(io_err)?;
            }
        }
    }
    Ok(())
}
