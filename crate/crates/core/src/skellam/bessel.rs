//! Modified Bessel functions of the first kind, evaluated in log space.
//!
//! Three regimes:
//! * `x < 30`: power series `I_v(x) = (x/2)^v / v! * sum_m q^m / (m! (v+1)_m)`
//!   with `q = x^2/4`. Every term is positive and the largest is below
//!   `e^30`, so the plain sum neither overflows nor cancels.
//! * `x >= 30` and `v^2 <= x/2`: exponentially scaled Hankel expansion
//!   `I_v(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(v) / x^k`.
//! * otherwise: the same power series accumulated with a running log-scale.
//!
//! The ratio `I_{v+1}/I_v` follows the same split, with a Gauss continued
//! fraction (modified Lentz) in the last regime.

use std::f64::consts::PI;

use crate::special::ln_factorial;

pub(crate) const SERIES_CUTOFF: f64 = 30.0;
const SERIES_EPS: f64 = 1e-17;
const MAX_SERIES_TERMS: usize = 100_000;

fn hankel_applies(order: u32, x: f64) -> bool {
    let v = order as f64;
    x >= SERIES_CUTOFF && v * v <= 0.5 * x
}

/// Power-series sums `S_v(x)` and `S_{v+1}(x)` (without the `(x/2)^v / v!`
/// prefactor). Only valid for `x < SERIES_CUTOFF`.
fn series_pair(order: u32, x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let v = order as f64;
    let (mut ta, mut tb) = (1.0f64, 1.0f64);
    let (mut sa, mut sb) = (1.0f64, 1.0f64);
    let peak = q.sqrt();
    for m in 1..MAX_SERIES_TERMS {
        let mf = m as f64;
        ta *= q / (mf * (mf + v));
        tb *= q / (mf * (mf + v + 1.0));
        sa += ta;
        sb += tb;
        if mf > peak && ta <= SERIES_EPS * sa {
            break;
        }
    }
    (sa, sb)
}

/// `ln S_v(x)` for arbitrary `x`, accumulated relative to the running
/// largest term so the sum never overflows.
fn log_series_scaled(order: u32, x: f64) -> f64 {
    let log_q = 2.0 * (0.5 * x).ln();
    let v = order as f64;
    let mut log_term = 0.0f64;
    let mut log_ref = 0.0f64;
    let mut acc = 1.0f64;
    let mut m = 1usize;
    loop {
        let mf = m as f64;
        log_term += log_q - mf.ln() - (mf + v).ln();
        if log_term > log_ref {
            acc = acc * (log_ref - log_term).exp() + 1.0;
            log_ref = log_term;
        } else {
            acc += (log_term - log_ref).exp();
            if log_term - log_ref < -40.0 {
                break;
            }
        }
        m += 1;
    }
    log_ref + acc.ln()
}

/// Scaled Hankel sum `sum_k (-1)^k a_k(v) / x^k`, truncated at the
/// smallest term of the asymptotic series.
fn hankel_sum(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut prev_abs = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * x);
        let abs = next.abs();
        if abs >= prev_abs {
            break;
        }
        sum += next;
        term = next;
        prev_abs = abs;
        if abs <= SERIES_EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// `ln I_order(x)` for `x >= 0`. Returns `-inf` for `x = 0, order > 0` and
/// NaN for negative or NaN input.
pub fn log_bessel_i(order: u32, x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return if order == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let prefactor = |v: u32| v as f64 * (0.5 * x).ln() - ln_factorial(v as u64);
    if x < SERIES_CUTOFF {
        let (s, _) = series_pair(order, x);
        prefactor(order) + s.ln()
    } else if hankel_applies(order, x) {
        x - 0.5 * (2.0 * PI * x).ln() + hankel_sum(order, x).ln()
    } else {
        prefactor(order) + log_series_scaled(order, x)
    }
}

/// `I_{order+1}(x) / I_order(x)`, which lies in `(0, 1)` for `x > 0`.
pub fn bessel_ratio(order: u32, x: f64) -> f64 {
    if x <= 0.0 || x.is_nan() {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < SERIES_CUTOFF {
        let (sa, sb) = series_pair(order, x);
        0.5 * x / (order as f64 + 1.0) * (sb / sa)
    } else if hankel_applies(order + 1, x) {
        hankel_sum(order + 1, x) / hankel_sum(order, x)
    } else {
        continued_fraction_ratio(order, x)
    }
}

/// `ln I_order(x)` together with `I_{order+1}(x)/I_order(x)`, sharing the
/// series pass in the small-argument regime.
pub(crate) fn log_bessel_i_with_ratio(order: u32, x: f64) -> (f64, f64) {
    if x > 0.0 && x < SERIES_CUTOFF {
        let (sa, sb) = series_pair(order, x);
        let v = order as f64;
        let prefactor = if order == 0 { 0.0 } else { v * (0.5 * x).ln() - ln_factorial(order as u64) };
        let log_i = prefactor + sa.ln();
        (log_i, 0.5 * x / (v + 1.0) * (sb / sa))
    } else {
        (log_bessel_i(order, x), bessel_ratio(order, x))
    }
}

/// Gauss continued fraction `I_{v+1}/I_v = 1/(b_1 + 1/(b_2 + ...))`,
/// `b_k = 2(v+k)/x`, evaluated with the modified Lentz algorithm.
fn continued_fraction_ratio(order: u32, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let v = order as f64;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0f64;
    let max_iter = (10.0 * x) as usize + 10_000;
    for k in 1..max_iter {
        let b = 2.0 * (v + k as f64) / x;
        d = b + d;
        if d == 0.0 {
            d = TINY;
        }
        c = b + 1.0 / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}
