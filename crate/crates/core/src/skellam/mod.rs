//! Skellam log-mass and negative log-likelihood with analytic rate
//! derivatives.
//!
//! For `y = N1 - N2` with `N1 ~ Pois(lp)`, `N2 ~ Pois(ln)`:
//!
//! ```text
//! ln P(y) = -(lp + ln) + (y/2) ln(lp/ln) + ln I_|y|(2 sqrt(lp ln))
//! ```
//!
//! Writing `x = 2 sqrt(lp ln)`, `v = |y|` and `r = I_{v+1}(x)/I_v(x)`, the
//! identity `I_v'(x) = I_{v+1}(x) + (v/x) I_v(x)` gives
//!
//! ```text
//! lp * d NLL/d lp = lp - (y + v)/2 - r x / 2
//! ln * d NLL/d ln = ln - (v - y)/2 - r x / 2
//! ```
//!
//! which is what the model back-propagates through `ln(rate)`.

mod bessel;

pub use bessel::{bessel_ratio, log_bessel_i};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// Lower bound applied to every rate produced by the model.
pub const RATE_FLOOR: f64 = 1e-12;

/// One evaluated Skellam likelihood term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkellamTerm {
    pub y: i64,
    pub lambda_pos: f64,
    pub lambda_neg: f64,
    pub log_prob: f64,
    /// Derivative of the negative log-likelihood w.r.t. `lambda_pos`.
    pub dl_dpos: f64,
    /// Derivative of the negative log-likelihood w.r.t. `lambda_neg`.
    pub dl_dneg: f64,
}

impl SkellamTerm {
    pub fn nll(&self) -> f64 {
        -self.log_prob
    }
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::domain(format!("{name} must be finite and positive, got {rate}")));
    }
    Ok(())
}

/// `ln P(y | lp, ln)`.
pub fn skellam_log_pmf(y: i64, lp: f64, ln: f64) -> Result<f64> {
    check_rate("lambda_pos", lp)?;
    check_rate("lambda_neg", ln)?;
    let x = 2.0 * (lp * ln).sqrt();
    let order = y.unsigned_abs() as u32;
    Ok(-(lp + ln) + 0.5 * y as f64 * (lp.ln() - ln.ln()) + log_bessel_i(order, x))
}

/// Negative log-likelihood of one observation with its rate derivatives.
pub fn skellam_nll_grad(y: i64, lp: f64, ln: f64) -> Result<SkellamTerm> {
    check_rate("lambda_pos", lp)?;
    check_rate("lambda_neg", ln)?;
    let (nll, dlog_pos, dlog_neg) = nll_log_grad(y, lp, ln);
    Ok(SkellamTerm {
        y,
        lambda_pos: lp,
        lambda_neg: ln,
        log_prob: -nll,
        dl_dpos: dlog_pos / lp,
        dl_dneg: dlog_neg / ln,
    })
}

/// Unchecked kernel used by the model: returns
/// `(nll, lp * dnll/dlp, ln * dnll/dln)` given already-validated rates.
#[inline]
pub(crate) fn nll_log_grad(y: i64, lp: f64, ln: f64) -> (f64, f64, f64) {
    nll_log_grad_with_logs(y, lp, ln, lp.ln(), ln.ln())
}

/// As [`nll_log_grad`] with `ln(lp)` and `ln(ln)` supplied by the caller.
#[inline]
pub(crate) fn nll_log_grad_with_logs(y: i64, lp: f64, ln: f64, log_lp: f64, log_ln: f64) -> (f64, f64, f64) {
    let x = 2.0 * (0.5 * (log_lp + log_ln)).exp();
    let order = y.unsigned_abs() as u32;
    let (log_i, ratio) = bessel::log_bessel_i_with_ratio(order, x);
    let yf = y as f64;
    let v = order as f64;
    let nll = lp + ln - 0.5 * yf * (log_lp - log_ln) - log_i;
    let shared = 0.5 * ratio * x;
    (nll, lp - 0.5 * (yf + v) - shared, ln - 0.5 * (v - yf) - shared)
}

/// Draws `Pois(lp) - Pois(ln)`.
pub fn sample_skellam<R: Rng + ?Sized>(rng: &mut R, lp: f64, ln: f64) -> i64 {
    let draw = |rng: &mut R, rate: f64| -> i64 {
        // Below ~1e-300 Poisson construction rejects the rate; the draw is 0
        // with overwhelming probability anyway.
        match Poisson::new(rate) {
            Ok(p) => p.sample(rng) as i64,
            Err(_) => 0,
        }
    };
    draw(rng, lp) - draw(rng, ln)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Plain (unscaled) power series; independent of the log-space kernel.
    fn series_oracle(order: u32, x: f64) -> f64 {
        let half = 0.5 * x;
        let mut fact_v = 1.0;
        for k in 1..=order {
            fact_v *= k as f64;
        }
        let mut term = half.powi(order as i32) / fact_v;
        let mut sum = term;
        for m in 1..200 {
            term *= half * half / (m as f64 * (m as f64 + order as f64));
            sum += term;
        }
        sum
    }

    #[test]
    fn log_pmf_at_unit_rates() {
        let got = skellam_log_pmf(0, 1.0, 1.0).unwrap();
        let want = -2.0 + series_oracle(0, 2.0).ln();
        assert!((got - want).abs() < 1e-13);
        assert!((got - (-1.176_006_458_517_043_7)).abs() < 1e-12);
    }

    #[test]
    fn nll_at_y_one() {
        let t = skellam_nll_grad(1, 1.0, 1.0).unwrap();
        let want = 2.0 - series_oracle(1, 2.0).ln();
        assert!((t.nll() - want).abs() < 1e-13);
        assert!((t.nll() - 1.535_865_526_453_840_3).abs() < 1e-12);
        assert!(t.log_prob <= 0.0);
    }

    #[test]
    fn large_equal_rates_do_not_overflow() {
        let v = skellam_log_pmf(0, 500.0, 500.0).unwrap();
        assert!((v - (-4.372_691_110_130_535)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn rejects_non_finite_rates() {
        assert!(matches!(skellam_log_pmf(0, f64::NAN, 1.0), Err(Error::Domain(_))));
        assert!(skellam_nll_grad(2, 1.0, f64::INFINITY).is_err());
        assert!(skellam_nll_grad(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn normalization_over_truncated_support() {
        for &(a, b) in &[(0.01, 0.02), (1.0, 1.0), (3.5, 0.2), (10.0, 10.0), (10.0, 0.5)] {
            let total: f64 = (-200..=200).map(|y| skellam_log_pmf(y, a, b).unwrap().exp()).sum();
            assert!(total <= 1.0 + 1e-12 && total >= 1.0 - 1e-9, "({a},{b}) -> {total}");
        }
    }

    #[test]
    fn gradients_at_the_mode_with_large_rates() {
        // At y = lp - ln the Gaussian limit gives dNLL/dlp = dNLL/dln = 1/(2(lp+ln)).
        let (a, b, y) = (205.0, 200.0, 5);
        let t = skellam_nll_grad(y, a, b).unwrap();
        let h = 1e-4;
        let f = |p: f64, q: f64| -skellam_log_pmf(y, p, q).unwrap();
        let fa = (f(a + h, b) - f(a - h, b)) / (2.0 * h);
        let fb = (f(a, b + h) - f(a, b - h)) / (2.0 * h);
        assert!((t.dl_dpos - fa).abs() < 1e-7 && (t.dl_dneg - fb).abs() < 1e-7);
        let gauss = 1.0 / (2.0 * (a + b));
        assert!((t.dl_dpos - gauss).abs() < 0.1 * gauss, "{}", t.dl_dpos);
        assert!((t.dl_dneg - gauss).abs() < 0.1 * gauss, "{}", t.dl_dneg);
    }

    #[test]
    fn sample_moments_match_skellam() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b) = (2.5, 1.2);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_skellam(&mut rng, a, b) as f64).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let var_true = a + b;
        assert!((mean - (a - b)).abs() < 3.0 * (var_true / n as f64).sqrt());
        // sd of the sample variance ~ sqrt((mu4 - sigma^4)/n), with mu4 = 3 sigma^4 + (a+b).
        let mu4 = 3.0 * var_true * var_true + var_true;
        assert!((var - var_true).abs() < 3.0 * ((mu4 - var_true * var_true) / n as f64).sqrt());
    }

    proptest! {
        #[test]
        fn pmf_symmetry(y in -30i64..30, a in 1e-3f64..50.0, b in 1e-3f64..50.0) {
            let l = skellam_log_pmf(y, a, b).unwrap();
            let r = skellam_log_pmf(-y, b, a).unwrap();
            prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
        }

        #[test]
        fn gradients_match_finite_differences(y in -6i64..7, la in -4.0f64..3.0, lb in -4.0f64..3.0) {
            let (a, b) = (la.exp(), lb.exp());
            let t = skellam_nll_grad(y, a, b).unwrap();
            let h = 1e-6;
            let f = |p: f64, q: f64| -skellam_log_pmf(y, p, q).unwrap();
            let ga = (f(a * (1.0 + h), b) - f(a * (1.0 - h), b)) / (2.0 * h * a);
            let gb = (f(a, b * (1.0 + h)) - f(a, b * (1.0 - h))) / (2.0 * h * b);
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-5 * x.abs().max(y.abs()).max(1e-2);
            prop_assert!(close(t.dl_dpos, ga), "dpos {} vs {}", t.dl_dpos, ga);
            prop_assert!(close(t.dl_dneg, gb), "dneg {} vs {}", t.dl_dneg, gb);
        }
    }
}
