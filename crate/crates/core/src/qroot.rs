//! The nome `q` controlling the decay of the approximate solution.
//!
//! `q` is the root of
//!
//! ```text
//! g(x) = 2 (Σ_{n≥0} x^{(2n+1)²/4})⁴ − (1/2 + Σ_{n≥1} x^{n²})⁴ + 3 Σ_{n≥0} x^{2n+1}/(1+x^{2n+1})²
//! ```
//!
//! located by bisection inside the certified bracket `(13/1000, 15/1000)`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::constants::{exact_f64, targets, pow, ratio, Exact};
use crate::error::{Error, Result};

/// Default number of terms kept in each series.
pub const DEFAULT_CUTOFF: usize = 16;

/// Largest admissible omitted term.
pub const OMITTED_TERM_LIMIT: f64 = 1e-18;

const BRACKET: (Exact, Exact) = (targets::Q_LOWER, targets::Q_UPPER);

/// Result of [`solve_q`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QRoot {
    pub q: f64,
    /// `|g(q)|`
    pub residual: f64,
    /// Final bisection bracket, `g(lo) < 0 < g(hi)`.
    pub bracket: (f64, f64),
    /// Rational bracket certified by the closed-form bounds:
    /// `ḡ(lo) < 0` and `g̲(hi) > 0`.
    pub certified_bracket: (String, String),
    pub series_cutoff: usize,
}

/// The three partial sums making up `g`.
fn series(x: f64, cutoff: usize) -> (f64, f64, f64) {
    let mut s1 = 0.0;
    let mut s2 = 0.5;
    let mut s3 = 0.0;
    for n in 0..=cutoff {
        let odd = (2 * n + 1) as f64;
        s1 += x.powf(odd * odd / 4.0);
        if n >= 1 {
            s2 += x.powi((n * n) as i32);
        }
        let p = x.powi(2 * n as i32 + 1);
        s3 += p / ((1.0 + p) * (1.0 + p));
    }
    (s1, s2, s3)
}

/// First omitted term of each series when truncating at `cutoff`.
fn omitted_terms(x: f64, cutoff: usize) -> [f64; 3] {
    let n = cutoff + 1;
    let odd = (2 * n + 1) as f64;
    let p = x.powi(2 * n as i32 + 1);
    [x.powf(odd * odd / 4.0), x.powi((n * n) as i32), p / ((1.0 + p) * (1.0 + p))]
}

/// Smallest cutoff whose first omitted terms are all below [`OMITTED_TERM_LIMIT`].
pub fn admissible_cutoff(x: f64) -> usize {
    (1..10_000)
        .find(|&c| omitted_terms(x, c).iter().all(|t| *t < OMITTED_TERM_LIMIT))
        .unwrap_or(10_000)
}

/// Evaluate `g(x)` with every series truncated after index `cutoff`.
pub fn g(x: f64, cutoff: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("g is defined on [0, 1), got {x}")));
    }
    if cutoff < 1 {
        return Err(Error::Config("series cutoff must be at least 1".into()));
    }
    let (s1, s2, s3) = series(x, cutoff);
    Ok(2.0 * s1.powi(4) - s2.powi(4) + 3.0 * s3)
}

/// Closed-form bounds `g̲(x) ≤ g(x) ≤ ḡ(x)`.
pub fn g_bounds(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0 && x < 0.5) {
        return Err(Error::Domain(format!("closed-form bounds need 0 < x < 1/2, got {x}")));
    }
    let lower = 2.0 * x - (0.5 + x + x.powi(4) / (1.0 - x)).powi(4) + 3.0 * x / ((1.0 + x) * (1.0 + x));
    let d = 1.0 - x * x;
    let upper = 2.0 * x / d.powi(4) - (0.5 + x).powi(4) + 3.0 * x / d;
    Ok((lower, upper))
}

/// `g̲` evaluated exactly at a rational point.
pub fn g_lower_exact(x: &BigRational) -> BigRational {
    let one = ratio(1, 1);
    let half = ratio(1, 2);
    let two = ratio(2, 1);
    let three = ratio(3, 1);
    let inner = &half + x + pow(x, 4) / (&one - x);
    &two * x - pow(&inner, 4) + &three * x / pow(&(&one + x), 2)
}

/// `ḡ` evaluated exactly at a rational point.
pub fn g_upper_exact(x: &BigRational) -> BigRational {
    let one = ratio(1, 1);
    let half = ratio(1, 2);
    let d = &one - x * x;
    ratio(2, 1) * x / pow(&d, 4) - pow(&(&half + x), 4) + ratio(3, 1) * x / d
}

/// Check `ḡ(13/1000) < 0 < g̲(15/1000)` in exact arithmetic.
pub fn certify_bracket() -> bool {
    let lo = ratio(13, 1000);
    let hi = ratio(15, 1000);
    let zero = ratio(0, 1);
    g_upper_exact(&lo) < zero && g_lower_exact(&hi) > zero
}

/// Bisection for the root of `g` on `[13/1000, 15/1000]`.
///
/// Stops once the bracket is no wider than `tol` and `|g| ≤ tol` at the
/// returned point.
pub fn solve_q(tol: f64) -> Result<QRoot> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let mut lo = BRACKET.0.to_f64();
    let mut hi = BRACKET.1.to_f64();
    let cutoff = DEFAULT_CUTOFF.max(admissible_cutoff(hi));
    let (mut glo, ghi) = (g(lo, cutoff)?, g(hi, cutoff)?);
    if !(glo < 0.0 && ghi > 0.0) {
        return Err(Error::Consistency(format!(
            "g does not change sign on [{lo}, {hi}]: g(lo) = {glo:e}, g(hi) = {ghi:e}"
        )));
    }

    loop {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid, cutoff)?;
        if hi - lo <= tol && gm.abs() <= tol {
            return Ok(QRoot {
                q: mid,
                residual: gm.abs(),
                bracket: (lo, hi),
                certified_bracket: (BRACKET.0.to_string(), BRACKET.1.to_string()),
                series_cutoff: cutoff,
            });
        }
        if mid <= lo || mid >= hi {
            return Err(Error::Consistency(format!(
                "bisection exhausted double precision at q = {mid} with |g| = {:e} > {tol:e}",
                gm.abs()
            )));
        }
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            continue;
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
}

/// `q` as an exact rational, for the strict comparisons.
pub fn q_exact(q: f64) -> BigRational {
    exact_f64(q).expect("q is finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn g_at_zero() {
        // Only the constant 1/2 of the middle sum survives.
        assert_eq!(g(0.0, 5).unwrap(), -1.0 / 16.0);
        assert_eq!(g(0.0, 16).unwrap(), -0.0625);
    }

    #[test]
    fn g_sign_at_bracket_ends() {
        assert!(g(0.013, 12).unwrap() < 0.0);
        assert!(g(0.015, 12).unwrap() > 0.0);
    }

    #[test]
    fn g_domain() {
        assert!(matches!(g(1.0, 4), Err(Error::Domain(_))));
        assert!(matches!(g(-0.1, 4), Err(Error::Domain(_))));
        assert!(matches!(g_bounds(0.0), Err(Error::Domain(_))));
        assert!(matches!(g_bounds(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_bounds_at_bracket_ends() {
        assert!(g_bounds(0.013).unwrap().1 < 0.0);
        assert!(g_bounds(0.015).unwrap().0 > 0.0);
        assert!(certify_bracket());
    }

    #[test]
    fn closed_form_bounds_sandwich_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = rng.random_range(0.001..0.4);
            let (lo, hi) = g_bounds(x).unwrap();
            let v = g(x, 16).unwrap();
            assert!(lo <= v && v <= hi, "x = {x}: {lo} {v} {hi}");
        }
    }

    #[test]
    fn closed_form_bounds_sandwich_grid() {
        for i in 0..100 {
            let x = 0.001 + (0.4 - 0.001) * (i as f64 + 0.5) / 100.0;
            let (lo, hi) = g_bounds(x).unwrap();
            let v = g(x, admissible_cutoff(x)).unwrap();
            assert!(lo <= v && v <= hi, "x = {x}");
        }
    }

    #[test]
    fn exact_bounds_agree_with_float() {
        let x = ratio(14, 1000);
        let (lo, hi) = g_bounds(0.014).unwrap();
        assert!((crate::constants::to_f64(&g_lower_exact(&x)) - lo).abs() < 1e-15);
        assert!((crate::constants::to_f64(&g_upper_exact(&x)) - hi).abs() < 1e-15);
    }

    #[test]
    fn g_increasing_in_bracket() {
        let mut prev = g(0.013, 16).unwrap();
        for i in 1..=20 {
            let x = 0.013 + 1e-4 * i as f64;
            let v = g(x, 16).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn cutoff_is_admissible_near_root() {
        assert!(admissible_cutoff(0.015) <= 8);
        assert!(admissible_cutoff(0.015) <= DEFAULT_CUTOFF);
    }

    #[test]
    fn solve_examples() {
        let r = solve_q(1e-14).unwrap();
        assert!((r.q - 0.014214).abs() < 5e-7, "q = {}", r.q);
        assert!(r.q > 0.013 && r.q < 0.015);
        assert!(g(r.q, 16).unwrap().abs() <= 1e-13);
        assert!(r.bracket.1 - r.bracket.0 <= 1e-14);
        assert!(g(r.bracket.0, 16).unwrap() < 0.0 || r.bracket.0 == r.bracket.1);
    }

    #[test]
    fn solve_is_deterministic() {
        let a = solve_q(1e-14).unwrap();
        let b = solve_q(1e-14).unwrap();
        assert_eq!(a.q.to_bits(), b.q.to_bits());
    }

    #[test]
    fn solve_rejects_bad_tolerance() {
        assert!(solve_q(0.0).is_err());
        assert!(solve_q(-1.0).is_err());
    }
}
