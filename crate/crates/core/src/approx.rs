//! The first-order approximate solution `u_k` and the closed-form
//! coefficients of `u_k³` and `u_k²·P_{m,n}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ModeIndex, SpectralField, WeightConfig};

/// Default number of stored `f_n` (indices `0..=20`).
pub const DEFAULT_NF: usize = 20;

/// An integer `k ≥ 1` and the frequency `Ω = (2k+1)/(2k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyContext {
    k: u64,
}

impl FrequencyContext {
    pub fn new(k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("k must be a positive integer".into()));
        }
        // 4k²(2n+1)² must stay far inside i128 for every mode we touch.
        if k > 1 << 40 {
            return Err(Error::Domain(format!("k = {k} is too large")));
        }
        Ok(FrequencyContext { k })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `(2k+1, 2k)`
    pub fn omega_ratio(&self) -> (u64, u64) {
        (2 * self.k + 1, 2 * self.k)
    }

    pub fn omega(&self) -> f64 {
        (2 * self.k + 1) as f64 / (2 * self.k) as f64
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }
}

/// `q`, the sequence `f_n = q^{n+1/2}/(1+q^{2n+1})`, and `β₀`, `β₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxCoefficients {
    pub q: f64,
    pub f: Vec<f64>,
    pub beta0: f64,
    pub beta1: f64,
    pub nf: usize,
    /// Upper bound on `Σ_{n>N_f} f_n`.
    pub f_tail: f64,
    /// Upper bound on the truncation error of `β₀` and `β₁`.
    pub beta_tail: f64,
}

/// `q^{n+1/2}/(1+q^{2n+1})`
pub fn f_formula(q: f64, n: usize) -> f64 {
    let p = q.powi(n as i32) * q.sqrt();
    p / (1.0 + p * p)
}

impl ApproxCoefficients {
    pub fn build(q: f64, nf: usize) -> Result<Self> {
        if !(q > 0.013 && q < 0.015) {
            return Err(Error::Domain(format!("q = {q} lies outside (0.013, 0.015)")));
        }
        if nf < 4 {
            return Err(Error::Config(format!("N_f must be at least 4, got {nf}")));
        }
        let f: Vec<f64> = (0..=nf).map(|n| f_formula(q, n)).collect();
        let sum_sq: f64 = f.iter().map(|x| x * x).sum();
        let sum_adj: f64 = f.windows(2).map(|w| w[0] * w[1]).sum::<f64>() + f[nf] * f_formula(q, nf + 1);
        let beta0 = 4.0 * sum_sq + 2.0 * sum_adj + 5.0 * f[0] * f[0];
        let beta1 = 2.0 * sum_adj + 3.0 * f[0] * f[0];

        // f_n < q^{n+1/2}, so the omitted parts are geometric.
        let f_tail = q.powf(nf as f64 + 1.5) / (1.0 - q);
        let beta_tail = 6.0 * q.powi(2 * nf as i32 + 3) / (1.0 - q * q);

        let c = ApproxCoefficients { q, f, beta0, beta1, nf, f_tail, beta_tail };
        let ((b0lo, b0hi), (b1lo, b1hi)) = ((0.113, 0.135), (0.038, 0.045));
        if !(b0lo < c.beta0 && c.beta0 < b0hi && b1lo < c.beta1 && c.beta1 < b1hi) {
            return Err(Error::Consistency(format!(
                "beta constants out of range: beta0 = {}, beta1 = {}",
                c.beta0, c.beta1
            )));
        }
        Ok(c)
    }

    /// `f_n`, using the stored value when available.
    pub fn f(&self, n: usize) -> f64 {
        self.f.get(n).copied().unwrap_or_else(|| f_formula(self.q, n))
    }

    /// `Σ_{j=0}^{N_f} f_j f_{j+a}`
    pub fn shifted_sum(&self, a: usize) -> f64 {
        (0..=self.nf).map(|j| self.f[j] * self.f(j + a)).sum()
    }

    /// Bound on `Σ_{j>N_f} f_j f_{j+a}`.
    pub fn shifted_sum_tail(&self, a: usize) -> f64 {
        self.q.powi((2 * self.nf + 3 + a) as i32) / (1.0 - self.q * self.q)
    }
}

/// Closed-form brackets on `β₀` and `β₁` in terms of `q`:
/// `((β₀_lo, β₀_hi), (β₁_lo, β₁_hi))`.
pub fn beta_closed_bounds(q: f64) -> ((f64, f64), (f64, f64)) {
    let d = 1.0 - q * q;
    let s = (1.0 + q) * (1.0 + q);
    let b0lo = (4.0 * q / d + 2.0 * q * q / d + 5.0 * q) / s;
    let b0hi = 4.0 * q / d + 2.0 * q * q / d + 5.0 * q / s;
    let b1lo = (2.0 * q * q / d + 3.0 * q) / s;
    let b1hi = 2.0 * q * q / d + 3.0 * q / s;
    ((b0lo, b0hi), (b1lo, b1hi))
}

/// `u_k = √(128/k) Σ f_n P_{n,n}`, truncated at `N_f`.
pub fn build_uk(ctx: &FrequencyContext, coeffs: &ApproxCoefficients, weight: WeightConfig) -> SpectralField {
    let amp = (128.0 / ctx.kf()).sqrt();
    let field = SpectralField::from_modes(
        weight,
        coeffs.f.iter().enumerate().map(|(n, fv)| (n as u32, n as u32, amp * fv)),
    );
    let r4q = weight.rho_pow(4) * coeffs.q;
    let first = weight.rho_pow(2 * (2 * coeffs.nf as u32 + 3)) * coeffs.q.powf(coeffs.nf as f64 + 1.5);
    let tail = amp * first / (1.0 - r4q);
    field.with_tail(tail).expect("tail is finite and non-negative")
}

/// `‖u_k‖·√k` is enclosed by `√128·ρ²√q/(1+q)` and `√128·ρ²√q/(1−ρ⁴q)`.
pub fn uk_norm_closed_bounds(q: f64, weight: WeightConfig) -> (f64, f64) {
    let s = 128f64.sqrt() * weight.rho_pow(2) * q.sqrt();
    (s / (1.0 + q), s / (1.0 - weight.rho_pow(4) * q))
}

/// Coefficient `b_{m,n}` of `u_k³ = (1024√2/k^{3/2}) Σ b_{m,n} P_{m,n}`.
///
/// The off-diagonal cases are evaluated from the sinh quotients rewritten as
/// powers of `q`, e.g. `sinh[(m+½)ln q] + sinh[(n+½)ln q] =
/// −(1 + q^{m−n} − q^{m+n+1} − q^{2m+1}) / (2q^{m+½})` for `m > n`.
pub fn b_coeff(m: u32, n: u32, coeffs: &ApproxCoefficients) -> f64 {
    let q = coeffs.q;
    if m == n {
        let s = (2 * m + 1) as f64;
        return s * s / 128.0 * coeffs.f(m as usize);
    }
    let (hi, lo) = if m > n { (m, n) } else { (n, m) };
    let diff = (hi - lo) as i32;
    let sum1 = (hi + lo + 1) as i32;
    let head = q.powi(hi as i32) * q.sqrt();
    let q_top = q.powi(2 * hi as i32 + 1);
    if diff % 2 == 1 {
        let bracket = 1.0 + q.powi(diff) - q.powi(sum1) - q_top;
        -3.0 / 32.0 * sum1 as f64 * head / bracket
    } else {
        let bracket = 1.0 - q.powi(diff) + q.powi(sum1) - q_top;
        3.0 / 32.0 * diff as f64 * head / bracket
    }
}

/// `1024√2 / k^{3/2}`
pub fn cube_prefactor(ctx: &FrequencyContext) -> f64 {
    1024.0 * std::f64::consts::SQRT_2 / ctx.kf().powf(1.5)
}

/// Coefficient `c_{μ,ν}` in `u_k² P_{m,n} = Σ c_{μ,ν} P_{μ+m,ν+n}`.
/// Depends only on `|μ|` and `|ν|`.
pub fn c_coeff(mu: i64, nu: i64, ctx: &FrequencyContext, coeffs: &ApproxCoefficients) -> f64 {
    let a = mu.unsigned_abs() as usize;
    let b = nu.unsigned_abs() as usize;
    let pre = 128.0 / ctx.kf();
    let f = |i: usize| coeffs.f(i);
    let value = if a == 0 && b == 0 {
        0.25 * coeffs.shifted_sum(0)
    } else if a == b {
        let wrap: f64 = (0..a).map(|j| f(j) * f(a - 1 - j)).sum();
        (2.0 * coeffs.shifted_sum(a) + wrap) / 16.0
    } else if b == 0 || a == 0 {
        let s = a.max(b);
        if s % 2 == 1 {
            let fv = f((s - 1) / 2);
            -fv * fv / 8.0
        } else {
            0.0
        }
    } else if (a + b) % 2 == 1 {
        -f((a + b - 1) / 2) * f((a.abs_diff(b) - 1) / 2) / 8.0
    } else {
        0.0
    };
    pre * value
}

/// Bound on the error of [`c_coeff`] from truncating its infinite sums.
pub fn c_series_tail(mu: i64, nu: i64, ctx: &FrequencyContext, coeffs: &ApproxCoefficients) -> f64 {
    let a = mu.unsigned_abs() as usize;
    let b = nu.unsigned_abs() as usize;
    let pre = 128.0 / ctx.kf();
    if a != b {
        0.0
    } else if a == 0 {
        pre * 0.25 * coeffs.shifted_sum_tail(0)
    } else {
        pre * coeffs.shifted_sum_tail(a) / 8.0
    }
}

/// `c_{μ,ν}` for `|μ|, |ν| ≤ l`, computed once.
#[derive(Clone, Debug)]
pub struct CTable {
    l: usize,
    vals: Vec<f64>,
    /// Largest per-entry series truncation error.
    pub series_tail: f64,
}

impl CTable {
    pub fn new(ctx: &FrequencyContext, coeffs: &ApproxCoefficients, l: usize) -> Self {
        let n = l + 1;
        let mut vals = vec![0.0; n * n];
        let mut series_tail: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                vals[a * n + b] = c_coeff(a as i64, b as i64, ctx, coeffs);
                series_tail = series_tail.max(c_series_tail(a as i64, b as i64, ctx, coeffs));
            }
        }
        CTable { l, vals, series_tail }
    }

    pub fn cutoff(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn get(&self, mu: i64, nu: i64) -> f64 {
        let a = mu.unsigned_abs() as usize;
        let b = nu.unsigned_abs() as usize;
        self.vals[a * (self.l + 1) + b]
    }
}

/// `u_k³` assembled from the closed-form `b_{m,n}` for `m, n ≤ max`.
pub fn uk_cube_closed_form(
    ctx: &FrequencyContext,
    coeffs: &ApproxCoefficients,
    weight: WeightConfig,
    max: u32,
) -> SpectralField {
    let pre = cube_prefactor(ctx);
    let mut modes = Vec::new();
    for m in 0..=max {
        for n in 0..=max {
            modes.push((m, n, pre * b_coeff(m, n, coeffs)));
        }
    }
    SpectralField::from_modes(weight, modes)
}

/// `Σ_{m,n ≤ max} ρ^{2(m+n+1)} |b_{m,n}|`
pub fn b_weighted_sum(coeffs: &ApproxCoefficients, weight: WeightConfig, max: u32) -> f64 {
    let pw = weight.powers(2 * (2 * max + 1));
    let mut s = 0.0;
    for m in 0..=max {
        for n in 0..=max {
            s += pw[ModeIndex::new(m, n).weight_exponent() as usize] * b_coeff(m, n, coeffs).abs();
        }
    }
    s
}
