//! Numeric checks of the inequalities behind the contraction argument.
//!
//! Every check produces a [`BoundReport`]: the measured quantity (with all
//! truncation tails added), the exact constant it is compared against, and
//! which cutoffs were used. Comparisons against constants are decided in
//! exact rational arithmetic on the measured double.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::approx::{b_coeff, ApproxCoefficients, CTable, FrequencyContext};
use crate::constants::{exact_f64, pow, ratio, sqrt2_bracket, targets, Exact, Relation};
use crate::error::{Error, Result};
use crate::fixed_point::ball_radius;
use crate::operators::{l_inv_eigenvalue, l_inv_norm_bound, table_series_error, Problem};
use crate::qroot::{certify_bracket, g_lower_exact, g_upper_exact};
use crate::spectral::{canonicalize, triple_product, DenseBlock, ModeIndex, SpectralField, WeightConfig};

/// Cutoffs and tails that went into a measured value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub cutoffs: BTreeMap<String, u64>,
    /// Total of all tail bounds added to the measured value.
    pub tail_added: f64,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

impl Truncation {
    pub fn new() -> Self {
        Truncation::default()
    }

    pub fn cutoff(mut self, name: &str, value: u64) -> Self {
        self.cutoffs.insert(name.to_string(), value);
        self
    }

    pub fn tail(mut self, t: f64) -> Self {
        self.tail_added += t;
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = s.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub k: Option<u64>,
    pub measured: f64,
    pub bound: f64,
    /// The constant as an exact expression, e.g. `"139/85"`.
    pub bound_exact: String,
    pub relation: Relation,
    /// Distance to the bound on the passing side; negative on failure.
    pub margin: f64,
    pub pass: bool,
    pub truncation: Truncation,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub details: Option<serde_json::Value>,
}

impl BoundReport {
    pub fn new(name: &str, k: Option<u64>, measured: f64, bound: Exact, relation: Relation, truncation: Truncation) -> Self {
        let pass = bound.holds(relation, measured);
        Self::assemble(name, k, measured, bound, relation, pass, truncation)
    }

    /// A report whose measured value is known exactly.
    pub fn exact(name: &str, k: Option<u64>, measured: &BigRational, bound: Exact, relation: Relation, truncation: Truncation) -> Self {
        let pass = bound.holds_exact(relation, measured);
        let m = measured.to_f64().unwrap_or(f64::NAN);
        Self::assemble(name, k, m, bound, relation, pass, truncation)
    }

    fn assemble(name: &str, k: Option<u64>, measured: f64, bound: Exact, relation: Relation, pass: bool, truncation: Truncation) -> Self {
        let b = bound.to_f64();
        let margin = match relation {
            Relation::AtMost => b - measured,
            Relation::AtLeast => measured - b,
        };
        BoundReport {
            name: name.to_string(),
            k,
            measured,
            bound: b,
            bound_exact: bound.to_string(),
            relation,
            margin,
            pass,
            truncation,
            details: None,
        }
    }

    pub fn with_details(mut self, d: serde_json::Value) -> Self {
        self.details = Some(d);
        self
    }
}

fn need_k_at_least_100(ctx: &FrequencyContext, what: &str) -> Result<()> {
    if ctx.k() < targets::H_MIN_K {
        return Err(Error::OutOfRange(format!("{what} only applies for k ≥ 100, got k = {}", ctx.k())));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Elementary inequalities
// ---------------------------------------------------------------------------

/// `|t² − s²| − (2·max{t,s} − 1)`, exactly.
pub fn gap_slack(t: f64, s: f64) -> BigRational {
    let (te, se) = (exact_f64(t).expect("finite"), exact_f64(s).expect("finite"));
    let diff = (&te * &te - &se * &se).abs();
    let mx = if te > se { te } else { se };
    diff - (ratio(2, 1) * mx - ratio(1, 1))
}

/// `|t² − s²| ≥ 2·max{t,s} − 1` for `t, s ≥ 1` with `|t − s| ≥ 1`, on
/// `samples` points drawn uniformly from `[1, 1000]²` by rejection.
pub fn check_gap_inequality(samples: usize, seed: u64) -> Result<BoundReport> {
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min: Option<BigRational> = None;
    let mut drawn = 0;
    while drawn < samples {
        let t: f64 = rng.random_range(1.0..=1000.0);
        let s: f64 = rng.random_range(1.0..=1000.0);
        if (t - s).abs() < 1.0 {
            continue;
        }
        drawn += 1;
        let slack = gap_slack(t, s);
        if min.as_ref().is_none_or(|m| slack < *m) {
            min = Some(slack);
        }
    }
    let min = min.expect("at least one sample");
    Ok(BoundReport::exact("gap_inequality", None, &min, Exact::rational(0, 1), Relation::AtLeast, Truncation::new().cutoff("samples", samples as u64))
        .with_details(json!({ "seed": seed, "min_slack": min.to_f64() })))
}

/// The quotient `k² / (16(m−n)(m+n+1)k² + (2m+1)²(4k+1))` as a reduced pair.
pub fn fraction_terms(k: u64, m: u32, n: u32) -> (i128, i128) {
    let (k, m, n) = (k as i128, m as i128, n as i128);
    let den = 16 * (m - n) * (m + n + 1) * k * k + (2 * m + 1) * (2 * m + 1) * (4 * k + 1);
    (k * k, den)
}

/// Exhaustive integer check of `|k² / (16(m−n)(m+n+1)k² + (2m+1)²(4k+1))| ≤ 1`
/// over `1 ≤ k ≤ k_max`, `0 ≤ m < n ≤ n_max`.
pub fn check_fraction_inequality(k_max: u64, n_max: u32) -> Result<BoundReport> {
    if k_max < 2 || n_max < 2 {
        return Err(Error::Config("fraction inequality scan needs k_max, n_max ≥ 2".into()));
    }
    let mut worst = (0i128, 1i128);
    let mut violations = 0u64;
    let mut worst_at = (0, 0, 0);
    for k in 1..=k_max {
        for n in 1..=n_max {
            for m in 0..n {
                let (num, den) = fraction_terms(k, m, n);
                let den = den.abs();
                if den == 0 || num > den {
                    violations += 1;
                }
                if den != 0 && num * worst.1 > worst.0 * den {
                    worst = (num, den);
                    worst_at = (k, m, n);
                }
            }
        }
    }
    let measured = BigRational::new(BigInt::from(worst.0), BigInt::from(worst.1));
    Ok(BoundReport::exact(
        "fraction_inequality",
        None,
        &measured,
        Exact::rational(1, 1),
        Relation::AtMost,
        Truncation::new().cutoff("k_max", k_max).cutoff("n_max", n_max as u64),
    )
    .with_details(json!({ "violations": violations, "worst_kmn": [worst_at.0, worst_at.1, worst_at.2] })))
}

// ---------------------------------------------------------------------------
// Norms of u_k, u_k³ and N_k(0)
// ---------------------------------------------------------------------------

/// `‖u_k‖·√k` against `3/2` from above and `5/4` from below. The lower
/// comparison uses the stored norm minus the tail.
pub fn check_uk_norm(pr: &Problem) -> Vec<BoundReport> {
    let k = pr.ctx.k();
    let s = pr.ctx.kf().sqrt();
    let tr = Truncation::new().cutoff("nf", pr.coeffs.nf as u64).tail(pr.uk.tail());
    vec![
        BoundReport::new("uk_norm_upper", Some(k), pr.uk.norm() * s, targets::UK_UPPER, Relation::AtMost, tr.clone()),
        BoundReport::new(
            "uk_norm_lower",
            Some(k),
            (pr.uk.coeff_norm() - pr.uk.tail()) * s,
            targets::UK_LOWER,
            Relation::AtLeast,
            tr,
        ),
    ]
}

/// `‖u_k³‖·k^{3/2} ≤ 2√2`.
pub fn check_uk3_norm(pr: &Problem) -> Result<BoundReport> {
    let cube = triple_product(&pr.uk, &pr.uk, &pr.uk)?;
    let k = pr.ctx.k();
    Ok(BoundReport::new(
        "uk3_norm",
        Some(k),
        cube.norm() * pr.ctx.kf().powf(1.5),
        targets::UK3,
        Relation::AtMost,
        Truncation::new().cutoff("nf", pr.coeffs.nf as u64).tail(cube.tail()),
    ))
}

/// `‖N_k(0)‖·k^{3/2} ≤ 8√2`.
pub fn check_residue_norm(pr: &Problem) -> Result<BoundReport> {
    let n0 = pr.residual_n(&SpectralField::zero(pr.weight))?;
    Ok(BoundReport::new(
        "residue_norm",
        Some(pr.ctx.k()),
        n0.norm() * pr.ctx.kf().powf(1.5),
        targets::RESIDUE,
        Relation::AtMost,
        Truncation::new().cutoff("nf", pr.coeffs.nf as u64).tail(n0.tail()),
    ))
}

/// Bound on `Σ ρ^{2(m+n+1)} |b_{m,n}|` over pairs with `max{m,n} > cutoff`,
/// from `|b_{m,n}| ≤ (3/32)(2M+1) q^{M+1/2}/(1−2q)` with `M = max{m,n}`.
pub fn b_sum_tail(q: f64, weight: WeightConfig, cutoff: u32) -> f64 {
    let mut s = 0.0;
    let mut mm = cutoff + 1;
    loop {
        let w = (2 * mm + 1) as f64;
        let term = 3.0 / 32.0 * w * w * weight.rho_pow(2 * (2 * mm + 1)) * q.powf(mm as f64 + 0.5) / (1.0 - 2.0 * q);
        s += term;
        if term < 1e-30 * s || term == 0.0 {
            // Remaining terms shrink geometrically by at least a factor 2.
            return s + term;
        }
        mm += 1;
    }
}

/// `Σ_{m,n ≤ cutoff} ρ^{2(m+n+1)} |b_{m,n}| < 19/10000`, plus the tail over
/// the remaining pairs.
pub fn check_b_sum(coeffs: &ApproxCoefficients, weight: WeightConfig, cutoff: u32) -> BoundReport {
    let pw = weight.powers(2 * (2 * cutoff + 1));
    let mut s = 0.0;
    for m in 0..=cutoff {
        for n in 0..=cutoff {
            s += pw[ModeIndex::new(m, n).weight_exponent() as usize] * b_coeff(m, n, coeffs).abs();
        }
    }
    let tail = b_sum_tail(coeffs.q, weight, cutoff);
    BoundReport::new(
        "b_sum",
        None,
        s + tail,
        targets::B_SUM,
        Relation::AtMost,
        Truncation::new().cutoff("mode_box", cutoff as u64).tail(tail),
    )
}

// ---------------------------------------------------------------------------
// Operator A
// ---------------------------------------------------------------------------

/// Column bound on `A` and its two distinct matrix entries.
pub fn check_a_norm(pr: &Problem) -> Vec<BoundReport> {
    let w = pr.weight;
    let cols: Vec<(String, f64)> = [(0, 0), (0, 1), (1, 0)]
        .iter()
        .map(|&(m, n)| (format!("P{m}{n}"), pr.a.column_ratio(ModeIndex::new(m, n), w)))
        .collect();
    let max = cols.iter().map(|c| c.1).fold(1.0, f64::max);
    let ac = pr.a.constants;
    vec![
        BoundReport::new("A_norm", None, max, targets::A_NORM, Relation::AtMost, Truncation::new().note("off Y1 every column ratio is 1"))
            .with_details(json!({ "columns": cols.into_iter().collect::<BTreeMap<_, _>>() })),
        BoundReport::new("A_entry_00", None, ac.a00.abs(), targets::A00, Relation::AtMost, Truncation::new()),
        BoundReport::new("A_entry_01", None, ac.a01.abs(), targets::A01, Relation::AtMost, Truncation::new()),
    ]
}

// ---------------------------------------------------------------------------
// Tail of the shift lattice
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub l: usize,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Bound on `Σ_{J_l} |c_{μ,ν}| ρ^{4max{|μ|,|ν|}}`.
    pub value: f64,
}

/// `(α₀, α₁, α₂)`
pub fn alphas(q: f64, weight: WeightConfig) -> (f64, f64, f64) {
    let r = weight.rho_pow(4) * q;
    let a0 = (1.0 + 2.0 * q - q * q) + (1.0 - 2.0 * q - q * q) * r;
    let a1 = 2.0 * (1.0 + q - q * q) - 2.0 * (1.0 + 2.0 * q - q * q) * r + 2.0 * q * r * r;
    let a2 = (1.0 - q * q) * (1.0 - r) * (1.0 - r);
    (a0, a1, a2)
}

/// `64(qρ⁴)^{l+1}(α₂l² + α₁l + α₀) / (k(1−q²)(1−qρ⁴)³)`
pub fn tail_bound(l: usize, ctx: &FrequencyContext, q: f64, weight: WeightConfig) -> Result<TailBound> {
    if l == 0 {
        return Err(Error::Config("the tail bound needs l ≥ 1".into()));
    }
    let (a0, a1, a2) = alphas(q, weight);
    let r = weight.rho_pow(4) * q;
    let lf = l as f64;
    let value = 64.0 * r.powi(l as i32 + 1) * (a2 * lf * lf + a1 * lf + a0) / (ctx.kf() * (1.0 - q * q) * (1.0 - r).powi(3));
    Ok(TailBound { l, alpha0: a0, alpha1: a1, alpha2: a2, value })
}

/// `Σ_{(μ,ν)∈J_l, |μ|,|ν| ≤ cutoff} |c_{μ,ν}| ρ^{4max{|μ|,|ν|}}` from a table
/// of cutoff `≥ cutoff`.
pub fn lattice_tail_sum(table: &CTable, weight: WeightConfig, l: usize, cutoff: usize) -> f64 {
    let mult = |a: usize| if a == 0 { 1.0 } else { 2.0 };
    let mut s = 0.0;
    for a in 0..=cutoff {
        for b in 0..=cutoff {
            let mx = a.max(b);
            if mx <= l {
                continue;
            }
            let c = table.get(a as i64, b as i64);
            if c != 0.0 {
                s += mult(a) * mult(b) * c.abs() * weight.rho_pow(4 * mx as u32);
            }
        }
    }
    s
}

/// Brute-force lattice sums against [`tail_bound`] for `l = 1..=l_max`.
/// The measured value is the largest ratio of the two.
pub fn check_tail_sum(pr: &Problem, l_max: usize, cutoff: usize) -> Result<BoundReport> {
    if l_max == 0 || cutoff <= l_max {
        return Err(Error::Config("tail sum check needs 1 ≤ l_max < cutoff".into()));
    }
    let table = CTable::new(&pr.ctx, &pr.coeffs, cutoff);
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for l in 1..=l_max {
        let brute = lattice_tail_sum(&table, pr.weight, l, cutoff);
        let closed = tail_bound(l, &pr.ctx, pr.coeffs.q, pr.weight)?.value;
        worst = worst.max(brute / closed);
        rows.push(json!({ "l": l, "lattice_sum": brute, "closed_form": closed }));
    }
    Ok(BoundReport::new(
        "tail_sum",
        Some(pr.ctx.k()),
        worst,
        Exact::rational(1, 1),
        Relation::AtMost,
        Truncation::new().cutoff("lattice", cutoff as u64).cutoff("l_max", l_max as u64).note("measured = max over l of lattice sum / closed form"),
    )
    .with_details(json!(rows)))
}

pub fn check_alpha_caps(q: f64, weight: WeightConfig) -> Vec<BoundReport> {
    let (a0, a1, a2) = alphas(q, weight);
    vec![
        BoundReport::new("alpha0", None, a0, targets::ALPHA0, Relation::AtMost, Truncation::new()),
        BoundReport::new("alpha1", None, a1, targets::ALPHA1, Relation::AtMost, Truncation::new()),
        BoundReport::new("alpha2", None, a2, targets::ALPHA2, Relation::AtMost, Truncation::new()),
    ]
}

// ---------------------------------------------------------------------------
// Columns of H_k
// ---------------------------------------------------------------------------

/// Shift-lattice data shared by all column computations at one `k`.
pub struct Lattice {
    pub table: CTable,
    /// `T(L)` from [`tail_bound`].
    pub tail: f64,
    /// Series error of the table entries, weighted like the tail.
    pub series_error: f64,
}

impl Lattice {
    pub fn new(pr: &Problem, l: usize) -> Result<Self> {
        let table = CTable::new(&pr.ctx, &pr.coeffs, l);
        let tail = tail_bound(l, &pr.ctx, pr.coeffs.q, pr.weight)?.value;
        let series_error = table_series_error(&table, pr.weight);
        Ok(Lattice { table, tail, series_error })
    }

    pub fn cutoff(&self) -> usize {
        self.table.cutoff()
    }
}

/// `‖H_k P_{m,n}‖ / ‖P_{m,n}‖` split into its lattice part and tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnNorm {
    pub m: u32,
    pub n: u32,
    pub truncated: f64,
    pub tail: f64,
    pub ratio: f64,
}

/// `H_k P_{m,n} = −3 L_k⁻¹ Λ_k A P_{m,n} + (I − A) P_{m,n}` through the
/// shift lattice, with the remaining shifts bounded by `3‖L_k⁻¹‖·T(L)`.
pub fn h_column(pr: &Problem, lat: &Lattice, m: u32, n: u32) -> ColumnNorm {
    let w = pr.weight;
    let p = SpectralField::mode(w, ModeIndex::new(m, n), 1.0);
    let ap = pr.a.apply(&p);
    let l = lat.cutoff() as i64;
    let rows = (ap.max_m() as i64 + l + 2) as usize;
    let cols = (ap.max_n() as i64 + l + 2) as usize;
    let mut block = DenseBlock::new(rows, cols);
    for (md, a) in ap.iter() {
        for mu in -l..=l {
            for nu in -l..=l {
                let c = lat.table.get(mu, nu);
                if c != 0.0 {
                    block.add_signed(md.m as i64 + mu, md.n as i64 + nu, a * c);
                }
            }
        }
    }
    let ctx = &pr.ctx;
    for i in 0..rows {
        for j in 0..cols {
            let v = &mut block.data[i * cols + j];
            if *v != 0.0 {
                *v *= -3.0 * l_inv_eigenvalue(ctx, i as u32, j as u32);
            }
        }
    }
    let comp = pr.a.apply_complement(&p);
    for (md, c) in comp.iter() {
        block.add(md.m as usize, md.n as usize, c);
    }
    let pw = w.powers(2 * (rows + cols) as u32);
    let mut norm = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            norm += pw[2 * (i + j + 1)] * block.data[i * cols + j].abs();
        }
    }
    let pn = p.norm();
    let tail = 3.0 * l_inv_norm_bound(ctx) * (lat.tail + lat.series_error) * ap.coeff_norm();
    ColumnNorm { m, n, truncated: norm / pn, tail: tail / pn, ratio: (norm + tail) / pn }
}

/// `‖𝒥_k^{(m,n)}‖/‖P_{m,n}‖`, bounded by `Σ_{J₁} |c_{μ,ν}|·‖L_k⁻¹P_{μ+m,ν+n}‖`
/// over the lattice plus `‖L_k⁻¹‖·T(L)` for the rest.
pub fn j_column(pr: &Problem, lat: &Lattice, m: u32, n: u32) -> ColumnNorm {
    let l = lat.cutoff() as i64;
    let w = pr.weight;
    let mut s = 0.0;
    for mu in -l..=l {
        for nu in -l..=l {
            if mu.abs().max(nu.abs()) <= 1 {
                continue;
            }
            let c = lat.table.get(mu, nu);
            if c == 0.0 {
                continue;
            }
            let (md, _) = canonicalize(m as i64 + mu, n as i64 + nu);
            s += c.abs() * l_inv_eigenvalue(&pr.ctx, md.m, md.n).abs() * w.weight(md);
        }
    }
    let pn = w.weight(ModeIndex::new(m, n));
    let tail = l_inv_norm_bound(&pr.ctx) * (lat.tail + lat.series_error) * pn;
    ColumnNorm { m, n, truncated: s / pn, tail: tail / pn, ratio: (s + tail) / pn }
}

/// Closed-form bound `256k q²ρ⁸(α₀+α₁+α₂) / ((4k−1)(1−q²)(1−qρ⁴)³)` on
/// `‖𝒥_k^{(m,n)}‖/‖P_{m,n}‖`.
pub fn j_closed_form(ctx: &FrequencyContext, q: f64, weight: WeightConfig) -> f64 {
    let (a0, a1, a2) = alphas(q, weight);
    let k = ctx.kf();
    let r = weight.rho_pow(4) * q;
    256.0 * k * q * q * weight.rho_pow(8) * (a0 + a1 + a2) / ((4.0 * k - 1.0) * (1.0 - q * q) * (1.0 - r).powi(3))
}

/// Bound on `‖ℐ_k^{(m,n)}‖/‖P_{m,n}‖` valid whenever `m ≥ 4` or `n ≥ 4`.
pub fn i_uniform_bound(ctx: &FrequencyContext, q: f64, weight: WeightConfig) -> f64 {
    let k = ctx.kf();
    let d = 1.0 - q * q;
    let t1 = (q + q * q / d) * 128.0 * k / (28.0 * k - 1.0);
    let t2 = (q + q / d) * 128.0 * k / (36.0 * k - 1.0);
    let t3 = (q + q * q / d) * 128.0 * k / (44.0 * k - 1.0);
    (t1 + t2 + t3) * weight.rho_pow(4)
}

/// `3(ℐ + 𝒥)` bound covering every column outside `Y₂`.
pub fn z2_uniform_estimate(ctx: &FrequencyContext, q: f64, weight: WeightConfig) -> f64 {
    3.0 * (i_uniform_bound(ctx, q, weight) + j_closed_form(ctx, q, weight))
}

/// Result of scanning the columns `m, n ≤ M` of `H_k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HScan {
    pub k: u64,
    pub scan_depth: u32,
    pub lattice: usize,
    pub columns: Vec<ColumnNorm>,
    pub scan_max: f64,
    pub scan_argmax: (u32, u32),
    pub uniform_estimate: f64,
    /// `max(scan_max, uniform_estimate)`
    pub measured: f64,
}

impl HScan {
    pub fn column(&self, m: u32, n: u32) -> Option<&ColumnNorm> {
        self.columns.iter().find(|c| c.m == m && c.n == n)
    }
}

pub fn scan_h_columns(pr: &Problem, scan_depth: u32, lattice: usize) -> Result<HScan> {
    need_k_at_least_100(&pr.ctx, "the bound on H_k")?;
    if scan_depth < 8 {
        return Err(Error::Config(format!("scan depth must be at least 8, got {scan_depth}")));
    }
    let lat = Lattice::new(pr, lattice)?;
    let side = scan_depth as usize + 1;
    let columns: Vec<ColumnNorm> = (0..side * side)
        .into_par_iter()
        .map(|i| h_column(pr, &lat, (i / side) as u32, (i % side) as u32))
        .collect();
    let best = columns
        .iter()
        .copied()
        .fold(None::<ColumnNorm>, |acc, c| match acc {
            Some(a) if a.ratio >= c.ratio => Some(a),
            _ => Some(c),
        })
        .expect("non-empty scan");
    let uniform = z2_uniform_estimate(&pr.ctx, pr.coeffs.q, pr.weight);
    Ok(HScan {
        k: pr.ctx.k(),
        scan_depth,
        lattice,
        scan_max: best.ratio,
        scan_argmax: (best.m, best.n),
        uniform_estimate: uniform,
        measured: best.ratio.max(uniform),
        columns,
    })
}

/// `‖H_k‖ < 88/100` and the table of sixteen column bounds on `Y₂`.
pub fn check_h_norm(pr: &Problem, scan_depth: u32, lattice: usize) -> Result<Vec<BoundReport>> {
    let scan = scan_h_columns(pr, scan_depth, lattice)?;
    Ok(h_reports(&scan))
}

pub fn h_reports(scan: &HScan) -> Vec<BoundReport> {
    let k = Some(scan.k);
    let max_tail = scan.columns.iter().map(|c| c.tail).fold(0.0, f64::max);
    let tr = Truncation::new()
        .cutoff("scan_depth", scan.scan_depth as u64)
        .cutoff("lattice", scan.lattice as u64)
        .tail(max_tail)
        .note(format!(
            "columns with m,n <= {d} scanned; columns with m > {d} or n > {d} covered by the uniform estimate",
            d = scan.scan_depth
        ));
    let mut out = vec![BoundReport::new("H_norm", k, scan.measured, targets::H_NORM, Relation::AtMost, tr).with_details(json!({
        "scanned_columns": scan.columns.len(),
        "scan_max": scan.scan_max,
        "scan_argmax": [scan.scan_argmax.0, scan.scan_argmax.1],
        "uniform_estimate": scan.uniform_estimate,
    }))];
    for ((m, n), bound) in targets::H_TABLE {
        let c = scan.column(m, n).expect("Y2 is inside the scan box");
        out.push(BoundReport::new(
            &format!("H_column_{m}_{n}"),
            k,
            c.ratio,
            bound,
            Relation::AtMost,
            Truncation::new().cutoff("lattice", scan.lattice as u64).tail(c.tail),
        ));
    }
    out
}

/// Default sample of columns for [`check_j_bound`].
pub const J_SAMPLE: [(u32, u32); 10] = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 3), (3, 3), (5, 7), (10, 0), (0, 10), (20, 20)];

/// `‖𝒥_k^{(m,n)}‖ < ‖P_{m,n}‖/16` on the given columns; the measured value
/// is the largest ratio.
pub fn check_j_bound(pr: &Problem, modes: &[ModeIndex], lattice: usize) -> Result<BoundReport> {
    need_k_at_least_100(&pr.ctx, "the bound on J")?;
    if modes.is_empty() {
        return Err(Error::Config("need at least one column".into()));
    }
    let lat = Lattice::new(pr, lattice)?;
    let cols: Vec<ColumnNorm> = modes.par_iter().map(|md| j_column(pr, &lat, md.m, md.n)).collect();
    let worst = cols.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let tail = cols.iter().map(|c| c.tail).fold(0.0, f64::max);
    let per: Vec<_> = cols.iter().map(|c| json!({ "m": c.m, "n": c.n, "ratio": c.ratio })).collect();
    Ok(BoundReport::new(
        "J_bound",
        Some(pr.ctx.k()),
        worst,
        targets::J_PART,
        Relation::AtMost,
        Truncation::new().cutoff("lattice", lattice as u64).cutoff("columns", modes.len() as u64).tail(tail),
    )
    .with_details(json!({ "columns": per, "closed_form": j_closed_form(&pr.ctx, pr.coeffs.q, pr.weight) })))
}

// ---------------------------------------------------------------------------
// The contraction certificate
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoremCertificate {
    pub k: u64,
    pub delta_k: f64,
    pub h_norm: f64,
    pub l_inv_norm: f64,
    pub uk_norm: f64,
    pub a_norm: f64,
    /// `‖H_k‖ + 6‖L⁻¹‖‖u_k‖‖A‖²δ + 3‖L⁻¹‖‖A‖³δ²`
    pub contraction: BoundReport,
    /// `(929/1000)δ + 8√2 k^{−3/2} < δ`, divided by `δ`.
    pub ball_mapping: BoundReport,
    pub pass: bool,
}

/// Both inequalities of the certificate, for any `k ≥ 100`.
pub fn certificate_inequalities(pr: &Problem, scan_depth: u32, lattice: usize) -> Result<TheoremCertificate> {
    let scan = scan_h_columns(pr, scan_depth, lattice)?;
    let k = pr.ctx.k();
    let delta = ball_radius(k);
    let linv = l_inv_norm_bound(&pr.ctx);
    let uk = pr.uk.norm();
    let a = pr.a.norm(pr.weight);
    let c = scan.measured + 6.0 * linv * uk * a * a * delta + 3.0 * linv * a.powi(3) * delta * delta;
    let contraction = BoundReport::new(
        "theorem_contraction",
        Some(k),
        c,
        targets::CONTRACTION,
        Relation::AtMost,
        Truncation::new().cutoff("scan_depth", scan_depth as u64).cutoff("lattice", lattice as u64),
    )
    .with_details(json!({ "h_norm": scan.measured, "l_inv_norm": linv, "uk_norm": uk, "a_norm": a, "delta_k": delta }));

    // 929/1000 + 8√2 k^{−3/2}/δ_k = 929/1000 + 4000√2/k, decided with the
    // upper end of the √2 enclosure.
    let (_, s2hi) = sqrt2_bracket();
    let lhs_exact = ratio(929, 1000) + ratio(4000, 1) * s2hi / BigRational::from_integer(BigInt::from(k));
    let lhs = 0.929 + 4000.0 * std::f64::consts::SQRT_2 / k as f64;
    let pass_ball = lhs_exact < ratio(1, 1);
    let n0 = pr.residual_n(&SpectralField::zero(pr.weight))?.norm();
    let mut ball = BoundReport::new("theorem_ball_mapping", Some(k), lhs, Exact::rational(1, 1), Relation::AtMost, Truncation::new())
        .with_details(json!({
            "measured_variant": (c * delta + n0) / delta,
            "residue_norm": n0,
        }));
    ball.pass = pass_ball;
    let pass = contraction.pass && ball.pass;
    Ok(TheoremCertificate { k, delta_k: delta, h_norm: scan.measured, l_inv_norm: linv, uk_norm: uk, a_norm: a, contraction, ball_mapping: ball, pass })
}

/// The certificate at a `k` covered by the existence theorem.
pub fn contraction_certificate(pr: &Problem, scan_depth: u32, lattice: usize) -> Result<TheoremCertificate> {
    if pr.ctx.k() < targets::THEOREM_K {
        return Err(Error::OutOfRange(format!(
            "the certificate applies to k ≥ {}, got k = {}",
            targets::THEOREM_K,
            pr.ctx.k()
        )));
    }
    certificate_inequalities(pr, scan_depth, lattice)
}

// ---------------------------------------------------------------------------
// Exact rational checks
// ---------------------------------------------------------------------------

/// Upper bound of `Σ cᵢ qⁱ` over `q ∈ [lo, hi] ⊂ (0, ∞)`.
fn poly_upper(c: &[BigRational], lo: &BigRational, hi: &BigRational) -> BigRational {
    c.iter()
        .enumerate()
        .map(|(i, ci)| {
            let x = if ci.is_negative() { lo } else { hi };
            ci * pow(x, i as u32)
        })
        .fold(BigRational::zero(), |a, b| a + b)
}

fn rho_exact(weight: WeightConfig) -> BigRational {
    ratio(weight.numerator() as i64, weight.denominator() as i64)
}

/// `α₀, α₁, α₂` as polynomials in `q` with coefficients in `ρ⁴`.
fn alpha_polys(weight: WeightConfig) -> [Vec<BigRational>; 3] {
    let r = pow(&rho_exact(weight), 4);
    let r2 = &r * &r;
    let i = |n: i64| ratio(n, 1);
    [
        vec![i(1), i(2) + &r, -i(1) - i(2) * &r, -r.clone()],
        vec![i(2), i(2) - i(2) * &r, -i(2) - i(4) * &r, i(2) * &r + i(2) * &r2],
        vec![i(1), -i(2) * &r, &r2 - i(1), i(2) * &r, -r2.clone()],
    ]
}

/// Exact comparisons that do not depend on any floating-point computation:
/// the bracket for `q`, the caps on `α` and `β`, the entries of `A`, the
/// bounds on `‖u_k‖`, and the closed-form bounds on `𝒥` and `ℐ` at `k`.
/// Everything is evaluated over the whole bracket `q ∈ [13/1000, 15/1000]`.
pub fn strict_checks(k: u64, weight: WeightConfig) -> Vec<BoundReport> {
    let lo = targets::Q_LOWER.lower();
    let hi = targets::Q_UPPER.upper();
    let one = ratio(1, 1);
    let rho = rho_exact(weight);
    let r4 = pow(&rho, 4);
    let tr = || Truncation::new().note("exact rational evaluation over q in [13/1000, 15/1000]");
    let mut out = Vec::new();

    let g_hi = g_upper_exact(&lo);
    let g_lo = g_lower_exact(&hi);
    out.push(BoundReport::exact("strict_q_bracket_upper_fn", None, &g_hi, Exact::rational(0, 1), Relation::AtMost, tr()));
    out.push(BoundReport::exact("strict_q_bracket_lower_fn", None, &g_lo, Exact::rational(0, 1), Relation::AtLeast, tr()));
    debug_assert_eq!(certify_bracket(), out[0].pass && out[1].pass);

    let caps = [targets::ALPHA0, targets::ALPHA1, targets::ALPHA2];
    for (idx, (poly, cap)) in alpha_polys(weight).iter().zip(caps).enumerate() {
        let up = poly_upper(poly, &lo, &hi);
        out.push(BoundReport::exact(&format!("strict_alpha{idx}"), None, &up, cap, Relation::AtMost, tr()));
    }

    // β brackets, each piece evaluated at the endpoint that is unfavourable.
    let sq = |x: &BigRational| x * x;
    let q_over = |x: &BigRational, y: &BigRational| x / (&one - sq(y));
    let b0_lo = (ratio(4, 1) * q_over(&lo, &lo) + ratio(2, 1) * q_over(&sq(&lo), &lo) + ratio(5, 1) * &lo) / sq(&(&one + &hi));
    let b0_hi = ratio(4, 1) * q_over(&hi, &hi) + ratio(2, 1) * q_over(&sq(&hi), &hi) + ratio(5, 1) * &hi / sq(&(&one + &lo));
    let b1_lo = (ratio(2, 1) * q_over(&sq(&lo), &lo) + ratio(3, 1) * &lo) / sq(&(&one + &hi));
    let b1_hi = ratio(2, 1) * q_over(&sq(&hi), &hi) + ratio(3, 1) * &hi / sq(&(&one + &lo));
    out.push(BoundReport::exact("strict_beta0_lower", None, &b0_lo, targets::BETA0_LOWER, Relation::AtLeast, tr()));
    out.push(BoundReport::exact("strict_beta0_upper", None, &b0_hi, targets::BETA0_UPPER, Relation::AtMost, tr()));
    out.push(BoundReport::exact("strict_beta1_lower", None, &b1_lo, targets::BETA1_LOWER, Relation::AtLeast, tr()));
    out.push(BoundReport::exact("strict_beta1_upper", None, &b1_hi, targets::BETA1_UPPER, Relation::AtMost, tr()));

    // A from the β caps.
    let d = ratio(24, 1) * targets::BETA0_LOWER.lower() - &one;
    let a00 = &one / &d;
    let a01 = ratio(24, 1) * targets::BETA1_UPPER.upper() / &d;
    let col = &one + &a01 / sq(&rho);
    out.push(BoundReport::exact("strict_A_entry_00", None, &a00, targets::A00, Relation::AtMost, tr()));
    out.push(BoundReport::exact("strict_A_entry_01", None, &a01, targets::A01, Relation::AtMost, tr()));
    out.push(BoundReport::exact("strict_A_norm", None, &col, targets::A_NORM, Relation::AtMost, tr()));

    // ‖u_k‖²·k bounds, squared to stay rational: 128ρ⁴q/(1−ρ⁴q)² < 9/4 and
    // 128ρ⁴q/(1+q)² > 25/16; both sides increase with q.
    let uk_up = ratio(128, 1) * &r4 * &hi / sq(&(&one - &r4 * &hi));
    let uk_lo = ratio(128, 1) * &r4 * &lo / sq(&(&one + &lo));
    out.push(BoundReport::exact("strict_uk_norm_sq_upper", None, &uk_up, Exact::rational(9, 4), Relation::AtMost, tr()));
    out.push(BoundReport::exact("strict_uk_norm_sq_lower", None, &uk_lo, Exact::rational(25, 16), Relation::AtLeast, tr()));

    // Closed forms for 𝒥 and ℐ, decreasing in k.
    let kk = ratio(k.max(1) as i64, 1);
    let alpha_sum = targets::ALPHA0.upper() + targets::ALPHA1.upper() + targets::ALPHA2.upper();
    let j_up = ratio(256, 1) * &kk * sq(&hi) * pow(&rho, 8) * alpha_sum
        / ((ratio(4, 1) * &kk - &one) * (&one - sq(&hi)) * pow(&(&one - &hi * &r4), 3));
    out.push(BoundReport::exact("strict_J_closed_form", Some(k), &j_up, targets::J_PART, Relation::AtMost, tr()));
    let dq = &one - sq(&hi);
    let f = |c: i64| ratio(128, 1) * &kk / (ratio(c, 1) * &kk - &one);
    let i_up = ((&hi + sq(&hi) / &dq) * f(28) + (&hi + &hi / &dq) * f(36) + (&hi + sq(&hi) / &dq) * f(44)) * &r4;
    out.push(BoundReport::exact("strict_I_uniform", Some(k), &i_up, Exact::rational(23, 100), Relation::AtMost, tr()));
    let z2 = ratio(3, 1) * (ratio(23, 100) + targets::J_PART.upper());
    out.push(BoundReport::exact("strict_Z2_column", Some(k), &z2, targets::H_NORM, Relation::AtMost, tr()));

    let frac = check_fraction_inequality(200, 50).expect("valid range");
    out.push(BoundReport { name: "strict_fraction_inequality".into(), ..frac });
    out
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub k: u64,
    pub theorem_k: u64,
    pub scan_depth: u32,
    pub lattice: usize,
    pub seed: u64,
    pub strict: bool,
    pub gap_samples: usize,
    pub fraction_k_max: u64,
    pub fraction_n_max: u32,
    pub tail_l_max: usize,
    pub tail_cutoff: usize,
    pub b_cutoff: u32,
}

pub const DEFAULT_SEED: u64 = 20_240_517;
pub const DEFAULT_SCAN_DEPTH: u32 = 48;
pub const DEFAULT_LATTICE: usize = 40;

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            k: targets::H_MIN_K,
            theorem_k: targets::THEOREM_K,
            scan_depth: DEFAULT_SCAN_DEPTH,
            lattice: DEFAULT_LATTICE,
            seed: DEFAULT_SEED,
            strict: false,
            gap_samples: 10_000,
            fraction_k_max: 200,
            fraction_n_max: 50,
            tail_l_max: 10,
            tail_cutoff: 400,
            b_cutoff: 40,
        }
    }
}

type Check<'a> = Box<dyn Fn() -> Result<Vec<BoundReport>> + Send + Sync + 'a>;

/// Run every check. Single-k checks use `cfg.k`; the certificate uses
/// `cfg.theorem_k`. Reports are sorted by name, then `k`.
pub fn run_suite(pr: &Problem, theorem_pr: &Problem, cfg: &SuiteConfig) -> Result<Vec<BoundReport>> {
    let mut checks: Vec<Check> = vec![
        Box::new(|| Ok(vec![check_gap_inequality(cfg.gap_samples, cfg.seed)?])),
        Box::new(|| Ok(vec![check_fraction_inequality(cfg.fraction_k_max, cfg.fraction_n_max)?])),
        Box::new(|| Ok(check_uk_norm(pr))),
        Box::new(|| Ok(vec![check_uk3_norm(pr)?])),
        Box::new(|| Ok(vec![check_residue_norm(pr)?])),
        Box::new(|| Ok(vec![check_b_sum(&pr.coeffs, pr.weight, cfg.b_cutoff)])),
        Box::new(|| Ok(check_a_norm(pr))),
        Box::new(|| Ok(check_alpha_caps(pr.coeffs.q, pr.weight))),
        Box::new(|| Ok(vec![check_tail_sum(pr, cfg.tail_l_max, cfg.tail_cutoff)?])),
        Box::new(|| {
            let modes: Vec<_> = J_SAMPLE.iter().map(|&(m, n)| ModeIndex::new(m, n)).collect();
            Ok(vec![check_j_bound(pr, &modes, cfg.lattice)?])
        }),
        Box::new(|| check_h_norm(pr, cfg.scan_depth, cfg.lattice)),
        Box::new(|| {
            let cert = contraction_certificate(theorem_pr, cfg.scan_depth, cfg.lattice)?;
            Ok(vec![cert.contraction, cert.ball_mapping])
        }),
    ];
    if cfg.strict {
        checks.push(Box::new(|| Ok(strict_checks(pr.ctx.k(), pr.weight))));
    }
    let results: Vec<Result<Vec<BoundReport>>> = checks.par_iter().map(|c| c()).collect();
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    out.sort_by(|a, b| a.name.cmp(&b.name).then(a.k.cmp(&b.k)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(k: u64) -> Problem {
        Problem::with_defaults(k).unwrap()
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_slack(2.0, 1.0), ratio(0, 1));
        assert_eq!(gap_slack(5.0, 2.0), ratio(12, 1));
        let r = check_gap_inequality(10_000, DEFAULT_SEED).unwrap();
        assert!(r.pass && r.measured >= 0.0);
    }

    #[test]
    fn fraction_examples() {
        assert_eq!(fraction_terms(1, 0, 1), (1, -27));
        let (n, d) = fraction_terms(1_000_000, 0, 1);
        assert!(((n as f64 / d as f64).abs() - 1.0 / 32.0).abs() < 1e-6);
        let r = check_fraction_inequality(200, 50).unwrap();
        assert!(r.pass);
        assert_eq!(r.details.unwrap()["violations"], 0);
        assert!(check_fraction_inequality(1, 50).is_err());
    }

    #[test]
    fn norm_checks() {
        for k in [100u64, 1000, 79_675] {
            let p = pr(k);
            for r in check_uk_norm(&p) {
                assert!(r.pass && r.margin > 0.0, "{r:?}");
            }
            let r = check_uk3_norm(&p).unwrap();
            assert!(r.pass && r.margin > 0.0, "{r:?}");
            let r = check_residue_norm(&p).unwrap();
            assert!(r.pass && r.margin > 0.0, "{r:?}");
        }
        let p = pr(100);
        assert!((check_uk_norm(&p)[0].measured - 1.352).abs() < 5e-4);
        let r = check_b_sum(&p.coeffs, p.weight, 40);
        assert!(r.pass && r.margin > 0.0);
        assert!(r.truncation.tail_added < 1e-60);
    }

    #[test]
    fn a_checks() {
        let p = pr(100);
        for r in check_a_norm(&p) {
            assert!(r.pass && r.margin > 0.0, "{r:?}");
        }
        let a = &check_a_norm(&p)[0];
        assert!((a.measured - 1.5024).abs() < 1e-3);
    }

    #[test]
    fn alpha_values() {
        let p = pr(100);
        let (a0, a1, a2) = alphas(p.coeffs.q, p.weight);
        // Reference values from a 30-digit evaluation at the root of g.
        assert!((a0 - 1.042_089_091_374_952).abs() < 1e-12, "{a0}");
        assert!((a1 - 1.998_682_162_939_078).abs() < 1e-12, "{a1}");
        assert!((a2 - 0.971_464_938_315_169).abs() < 1e-12, "{a2}");
        assert!(check_alpha_caps(p.coeffs.q, p.weight).iter().all(|r| r.pass));
    }

    #[test]
    fn tail_decay_ratio() {
        let p = pr(100);
        let r4q = p.weight.rho_pow(4) * p.coeffs.q;
        for l in 30..40 {
            let a = tail_bound(l, &p.ctx, p.coeffs.q, p.weight).unwrap().value;
            let b = tail_bound(l + 1, &p.ctx, p.coeffs.q, p.weight).unwrap().value;
            assert!(((b / a) / r4q - 1.0).abs() < 0.1);
        }
        assert!(tail_bound(0, &p.ctx, p.coeffs.q, p.weight).is_err());
    }

    #[test]
    fn tail_sum_small() {
        let p = pr(100);
        let r = check_tail_sum(&p, 10, 400).unwrap();
        assert!(r.pass && r.measured < 1.0, "{r:?}");
    }

    #[test]
    fn j_bound_examples() {
        let p = pr(100);
        let modes = [ModeIndex::new(0, 0), ModeIndex::new(5, 7)];
        let r = check_j_bound(&p, &modes, 40).unwrap();
        assert!(r.pass, "{r:?}");
        let big = pr(100_000);
        let r2 = check_j_bound(&big, &modes[..1], 40).unwrap();
        assert!(r2.pass && r2.margin > r.margin);
        assert!(matches!(check_j_bound(&pr(99), &modes, 40), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn h_column_matches_convolution() {
        let p = pr(100);
        let lat = Lattice::new(&p, 40).unwrap();
        for (m, n) in [(0u32, 0u32), (0, 1), (1, 0), (1, 1), (2, 3), (6, 2)] {
            let c = h_column(&p, &lat, m, n);
            let pm = SpectralField::mode(p.weight, ModeIndex::new(m, n), 1.0);
            let conv = p.apply_h(&pm).unwrap().coeff_norm() / pm.norm();
            assert!((c.truncated - conv).abs() < 1e-9 * conv, "({m},{n}) {} {conv}", c.truncated);
        }
    }

    #[test]
    fn h_scan_and_table() {
        let p = pr(100);
        let reports = check_h_norm(&p, 48, 40).unwrap();
        for r in &reports {
            assert!(r.pass && r.margin > 0.0, "{r:?}");
        }
        assert!(matches!(check_h_norm(&pr(50), 48, 40), Err(Error::OutOfRange(_))));
        assert!(matches!(check_h_norm(&p, 4, 40), Err(Error::Config(_))));
    }

    #[test]
    fn measured_values_shrink_with_cutoff() {
        let p = pr(100);
        let coarse = scan_h_columns(&p, 10, 20).unwrap();
        let fine = scan_h_columns(&p, 10, 40).unwrap();
        for (a, b) in coarse.columns.iter().zip(&fine.columns) {
            assert!(b.ratio <= a.ratio * (1.0 + 1e-12), "({},{})", a.m, a.n);
        }
        let modes = [ModeIndex::new(1, 1)];
        let ja = check_j_bound(&p, &modes, 20).unwrap().measured;
        let jb = check_j_bound(&p, &modes, 40).unwrap().measured;
        assert!(jb <= ja * (1.0 + 1e-12));
        let ba = check_b_sum(&p.coeffs, p.weight, 20).measured;
        let bb = check_b_sum(&p.coeffs, p.weight, 40).measured;
        assert!(bb <= ba * (1.0 + 1e-12));
    }

    #[test]
    fn certificate() {
        let p = pr(79_675);
        let c = contraction_certificate(&p, 48, 40).unwrap();
        assert!(c.contraction.pass && c.ball_mapping.pass, "{c:?}");
        let c = contraction_certificate(&pr(1_000_000), 48, 40).unwrap();
        assert!(c.pass);
        let low = pr(10_000);
        assert!(matches!(contraction_certificate(&low, 48, 40), Err(Error::OutOfRange(_))));
        let c = certificate_inequalities(&low, 48, 40).unwrap();
        assert!(c.contraction.pass);
        assert!(!c.ball_mapping.pass);
    }

    #[test]
    fn strict_mode() {
        for r in strict_checks(100, WeightConfig::default()) {
            assert!(r.pass, "{r:?}");
        }
    }
}
