//! `L_k`, its inverse, the preconditioner `A`, the multiplication operator
//! `Λ_k h = u_k² h`, the fixed-point map `N_k` and its linear part `H_k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::approx::{build_uk, ApproxCoefficients, CTable, FrequencyContext, DEFAULT_NF};
use crate::error::{Error, Result};
use crate::qroot::solve_q;
use crate::spectral::{triple_product, DenseBlock, ModeIndex, SpectralField, WeightConfig};

/// `4k²·λ_{m,n} = −(2k+1)²(2m+1)² + 4k²(2n+1)²`, exact.
///
/// The first term is odd and the second even, so the value is never zero.
pub fn l_eigen_numerator(k: u64, m: u32, n: u32) -> i128 {
    let t = (2 * k as i128 + 1) * (2 * m as i128 + 1);
    let s = 2 * k as i128 * (2 * n as i128 + 1);
    s * s - t * t
}

/// Eigenvalue of `L_k = Ω²∂τ² − ∂x²` on `P_{m,n}`.
pub fn l_eigenvalue(ctx: &FrequencyContext, m: u32, n: u32) -> f64 {
    let k = ctx.k();
    l_eigen_numerator(k, m, n) as f64 / (4.0 * (k as f64) * (k as f64))
}

/// `1 / λ_{m,n}`
pub fn l_inv_eigenvalue(ctx: &FrequencyContext, m: u32, n: u32) -> f64 {
    let k = ctx.kf();
    4.0 * k * k / l_eigen_numerator(ctx.k(), m, n) as f64
}

/// Uniform bound `‖L_k⁻¹‖ ≤ 4k²/(4k−1)`.
pub fn l_inv_norm_bound(ctx: &FrequencyContext) -> f64 {
    let k = ctx.kf();
    4.0 * k * k / (4.0 * k - 1.0)
}

/// `4k² / (2·max{2k(2n+1), (2k+1)(2m+1)} − 1)`, an upper bound on `|1/λ_{m,n}|`.
pub fn l_inv_column_bound(ctx: &FrequencyContext, m: u32, n: u32) -> f64 {
    let k = ctx.kf();
    let t = (2.0 * k + 1.0) * (2 * m + 1) as f64;
    let s = 2.0 * k * (2 * n + 1) as f64;
    4.0 * k * k / (2.0 * t.max(s) - 1.0)
}

/// Column bound at a signed index, `4k²/(2·max{2k|2ν+1|, (2k+1)|2μ+1|} − 1)`.
pub fn l_inv_column_bound_signed(ctx: &FrequencyContext, mu: i64, nu: i64) -> f64 {
    let k = ctx.kf();
    let t = (2.0 * k + 1.0) * (2 * mu + 1).unsigned_abs() as f64;
    let s = 2.0 * k * (2 * nu + 1).unsigned_abs() as f64;
    4.0 * k * k / (2.0 * t.max(s) - 1.0)
}

/// The weaker signed bound `4k²/(4k·max{|2μ+1|, |2ν+1|} − 1)`.
pub fn l_inv_column_bound_weak(ctx: &FrequencyContext, mu: i64, nu: i64) -> f64 {
    let k = ctx.kf();
    let w = (2 * mu + 1).unsigned_abs().max((2 * nu + 1).unsigned_abs()) as f64;
    4.0 * k * k / (4.0 * k * w - 1.0)
}

/// `L_k⁻¹ v`. The tail budget is scaled by `4k²/(4k−1)`.
pub fn apply_l_inv(ctx: &FrequencyContext, v: &SpectralField) -> SpectralField {
    let coeffs: BTreeMap<_, _> = v.iter().map(|(md, c)| (md, c * l_inv_eigenvalue(ctx, md.m, md.n))).collect();
    SpectralField::from_parts(coeffs, v.tail() * l_inv_norm_bound(ctx), v.weight())
}

/// `L_k v` on the stored coefficients. `L_k` is unbounded, so the tail
/// budget of `v` has no image and the result carries none.
pub fn apply_l(ctx: &FrequencyContext, v: &SpectralField) -> SpectralField {
    let coeffs: BTreeMap<_, _> = v.iter().map(|(md, c)| (md, c * l_eigenvalue(ctx, md.m, md.n))).collect();
    SpectralField::from_parts(coeffs, 0.0, v.weight())
}

/// Entries of the 3×3 block of `A` on `Y₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorAConstants {
    /// `−1/(24β₀−1)`
    pub a00: f64,
    /// `24β₁/(24β₀−1)`, shared by the `P_{0,1}` and `P_{1,0}` columns.
    pub a01: f64,
}

impl OperatorAConstants {
    pub fn from_betas(beta0: f64, beta1: f64) -> Result<Self> {
        let d = 24.0 * beta0 - 1.0;
        if !(d > 0.0) {
            return Err(Error::Consistency(format!("24·beta0 − 1 = {d} is not positive")));
        }
        Ok(OperatorAConstants { a00: -1.0 / d, a01: 24.0 * beta1 / d })
    }

    pub fn from_coeffs(coeffs: &ApproxCoefficients) -> Result<Self> {
        Self::from_betas(coeffs.beta0, coeffs.beta1)
    }
}

/// `A = 𝒜Π + (I − Π)` with `Π` the projection onto `Y₁`.
///
/// In the basis `(P_{0,0}, P_{0,1}, P_{1,0})`:
///
/// ```text
/// ⎡ a00 a01 a01 ⎤
/// ⎢  0   1   0  ⎥
/// ⎣  0   0   1  ⎦
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorA {
    pub constants: OperatorAConstants,
}

const P00: ModeIndex = ModeIndex::new(0, 0);
const P01: ModeIndex = ModeIndex::new(0, 1);
const P10: ModeIndex = ModeIndex::new(1, 0);

impl OperatorA {
    pub fn new(constants: OperatorAConstants) -> Self {
        OperatorA { constants }
    }

    pub fn apply(&self, v: &SpectralField) -> SpectralField {
        let OperatorAConstants { a00, a01 } = self.constants;
        let mut out = v.clone();
        let c00 = a00 * v.coeff(P00) + a01 * (v.coeff(P01) + v.coeff(P10));
        out.set(P00, c00);
        out
    }

    /// `A⁻¹ v`; the block is upper triangular with diagonal `(a00, 1, 1)`.
    pub fn apply_inverse(&self, v: &SpectralField) -> SpectralField {
        let OperatorAConstants { a00, a01 } = self.constants;
        let mut out = v.clone();
        let c00 = (v.coeff(P00) - a01 * (v.coeff(P01) + v.coeff(P10))) / a00;
        out.set(P00, c00);
        out
    }

    /// `(I − A) v`, which is supported on `P_{0,0}` and carries no tail.
    pub fn apply_complement(&self, v: &SpectralField) -> SpectralField {
        let OperatorAConstants { a00, a01 } = self.constants;
        let c = (1.0 - a00) * v.coeff(P00) - a01 * (v.coeff(P01) + v.coeff(P10));
        SpectralField::mode(v.weight(), P00, c)
    }

    /// `‖A P‖/‖P‖` for the basis function `P`.
    pub fn column_ratio(&self, mode: ModeIndex, weight: WeightConfig) -> f64 {
        let p = SpectralField::mode(weight, mode, 1.0);
        self.apply(&p).norm() / p.norm()
    }

    /// The operator norm: the largest column ratio, attained on `Y₁`
    /// since `A` is the identity elsewhere.
    pub fn norm(&self, weight: WeightConfig) -> f64 {
        [P00, P01, P10]
            .into_iter()
            .map(|md| self.column_ratio(md, weight))
            .fold(1.0, f64::max)
    }
}

/// Everything needed to evaluate `N_k` and `H_k` at one frequency.
#[derive(Clone, Debug)]
pub struct Problem {
    pub ctx: FrequencyContext,
    pub coeffs: ApproxCoefficients,
    pub weight: WeightConfig,
    pub uk: SpectralField,
    pub a: OperatorA,
}

impl Problem {
    pub fn new(ctx: FrequencyContext, coeffs: ApproxCoefficients, weight: WeightConfig) -> Result<Self> {
        let uk = build_uk(&ctx, &coeffs, weight);
        let a = OperatorA::new(OperatorAConstants::from_coeffs(&coeffs)?);
        Ok(Problem { ctx, coeffs, weight, uk, a })
    }

    /// Solve for `q` and build everything with default cutoffs.
    pub fn with_defaults(k: u64) -> Result<Self> {
        let ctx = FrequencyContext::new(k)?;
        let q = solve_q(1e-14)?.q;
        Problem::new(ctx, ApproxCoefficients::build(q, DEFAULT_NF)?, WeightConfig::default())
    }

    /// `Λ_k h = u_k² h` by convolution.
    pub fn apply_lambda(&self, h: &SpectralField) -> Result<SpectralField> {
        triple_product(&self.uk, &self.uk, h)
    }

    /// `N_k(h) = −L_k⁻¹(u_k + A h)³ − u_k + (I − A) h`.
    pub fn residual_n(&self, h: &SpectralField) -> Result<SpectralField> {
        let ah = self.a.apply(h);
        let v = self.uk.add(&ah)?;
        let cube = triple_product(&v, &v, &v)?;
        let mut out = apply_l_inv(&self.ctx, &cube).scale(-1.0);
        out = out.add(&self.uk.scale(-1.0))?;
        out.add(&self.a.apply_complement(h))
    }

    /// `H_k(h) = −3 L_k⁻¹(u_k² A h) + h − A h`.
    pub fn apply_h(&self, h: &SpectralField) -> Result<SpectralField> {
        let lam = self.apply_lambda(&self.a.apply(h))?;
        apply_l_inv(&self.ctx, &lam).scale(-3.0).add(&self.a.apply_complement(h))
    }

    /// `u_k + A h`
    pub fn assemble(&self, h: &SpectralField) -> Result<SpectralField> {
        self.uk.add(&self.a.apply(h))
    }
}

/// `Λ_k h` through the shift expansion `u_k² P_{m,n} = Σ c_{μ,ν} P_{μ+m,ν+n}`
/// truncated at `|μ|, |ν| ≤ L`. `lattice_tail` bounds
/// `Σ_{J_L} |c_{μ,ν}| ρ^{4max{|μ|,|ν|}}`; it and the series error of the
/// table entries are charged to the tail budget.
pub fn apply_lambda_ctable(
    table: &CTable,
    lattice_tail: f64,
    uk_norm: f64,
    h: &SpectralField,
) -> SpectralField {
    let l = table.cutoff() as i64;
    let weight = h.weight();
    let rows = (h.max_m() as i64 + l + 2) as usize;
    let cols = (h.max_n() as i64 + l + 2) as usize;
    let mut out = DenseBlock::new(rows, cols);
    for (md, a) in h.iter() {
        for mu in -l..=l {
            for nu in -l..=l {
                let c = table.get(mu, nu);
                if c != 0.0 {
                    out.add_signed(md.m as i64 + mu, md.n as i64 + nu, a * c);
                }
            }
        }
    }
    let per_unit = lattice_tail + table_series_error(table, weight);
    let tail = per_unit * h.coeff_norm() + uk_norm * uk_norm * h.tail();
    out.into_field(tail, weight)
}

/// Bound on `Σ_{|μ|,|ν| ≤ L} |error of c_{μ,ν}| ρ^{4max{|μ|,|ν|}}`.
pub fn table_series_error(table: &CTable, weight: WeightConfig) -> f64 {
    let l = table.cutoff() as u32;
    // Only |μ| = |ν| entries carry a series; there are 4 of them per a ≥ 1.
    (0..=l)
        .map(|a| {
            let count = if a == 0 { 1.0 } else { 4.0 };
            count * table.series_tail * weight.rho_pow(4 * a)
        })
        .sum()
}
