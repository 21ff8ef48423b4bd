//! Scalar special functions.
//!
//! Everything downstream works with logarithms of Gamma and Beta values and
//! only exponentiates at the end, so these are the primitives exposed here.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_SERIES_0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COEFFS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

fn lanczos_ln_gamma(x: f64) -> f64 {
    let tmp = x + LANCZOS_G;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut series = LANCZOS_SERIES_0;
    let mut y = x;
    for c in LANCZOS_COEFFS {
        y += 1.0;
        series += c / y;
    }
    tmp + (SQRT_TWO_PI * series / x).ln()
}

/// `log Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("argument must be positive and finite, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        return Ok((PI / (PI * x).sin()).ln() - lanczos_ln_gamma(1.0 - x));
    }
    Ok(lanczos_ln_gamma(x))
}

/// Digamma `ψ(x) = d/dx log Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("digamma", format!("argument must be positive and finite, got {x}")));
    }
    let mut x = x;
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Asymptotic expansion with Bernoulli numbers B_2 .. B_14.
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    Ok(shift + x.ln() - 0.5 * inv - tail)
}

/// `log B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::domain("ln_beta", format!("first argument must be positive, got {a}")));
    }
    if !(b > 0.0) {
        return Err(Error::domain("ln_beta", format!("second argument must be positive, got {b}")));
    }
    Ok(ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?)
}

/// `log V_m`, the log-volume of the unit ball in `m` dimensions.
pub fn ln_unit_ball_volume(m: usize) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain("unit_ball_volume", "dimension must be at least 1"));
    }
    let half = m as f64 / 2.0;
    Ok(half * PI.ln() - ln_gamma(half + 1.0)?)
}

/// Volume of the unit ball, `π^{m/2} / Γ(m/2 + 1)`.
pub fn unit_ball_volume(m: usize) -> Result<f64> {
    match m {
        1 => Ok(2.0),
        2 => Ok(PI),
        _ => Ok(ln_unit_ball_volume(m)?.exp()),
    }
}
