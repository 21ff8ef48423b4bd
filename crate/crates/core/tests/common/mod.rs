#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

const STEP: f64 = 1.0 / 128.0;
const U_MAX: f64 = 4.0;

/// Double-exponential quadrature of `g` over the real line using
/// `x = ½ sinh(π sinh u)`.
pub fn integrate_real_line(g: impl Fn(f64) -> f64) -> f64 {
    let n = (U_MAX / STEP) as i64;
    let mut acc = 0.0;
    for i in -n..=n {
        let u = i as f64 * STEP;
        let s = std::f64::consts::PI * u.sinh();
        let x = 0.5 * s.sinh();
        let dx = FRAC_PI_2 * u.cosh() * s.cosh();
        let v = g(x) * dx;
        if v.is_finite() {
            acc += v;
        }
    }
    acc * STEP
}

/// Tanh-sinh quadrature over `(−1, 1)`. `g` receives `x` and `1 − x²`,
/// the latter computed without cancellation near the endpoints.
pub fn integrate_unit_interval(g: impl Fn(f64, f64) -> f64) -> f64 {
    let n = (U_MAX / STEP) as i64;
    let mut acc = 0.0;
    for i in -n..=n {
        let u = i as f64 * STEP;
        let v = FRAC_PI_2 * u.sinh();
        let c = v.cosh();
        let one_minus_x2 = 1.0 / (c * c);
        if one_minus_x2 == 0.0 {
            continue;
        }
        let w = FRAC_PI_2 * u.cosh() * one_minus_x2;
        acc += g(v.tanh(), one_minus_x2) * w;
    }
    acc * STEP
}

/// Asymptotic two-sided Kolmogorov–Smirnov critical value at `α = 0.01`.
pub fn ks_critical_001(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Largest gap between the empirical CDF of `values` and `cdf`.
pub fn ks_statistic(values: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}
