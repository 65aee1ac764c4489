//! The weighted sequence space of odd-odd sine modes.
//!
//! A [`SpectralField`] stores finitely many coefficients of the basis
//! `P_{m,n}(τ,x) = sin((2m+1)τ)·sin((2n+1)x)` together with a tail budget:
//! an upper bound on the weighted norm of every mode that was discarded on
//! the way to this representation. Norms always include the tail budget.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical label `(m, n)` of the basis function `P_{m,n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: u32,
    pub n: u32,
}

impl ModeIndex {
    pub const fn new(m: u32, n: u32) -> Self {
        ModeIndex { m, n }
    }

    /// Exponent `2(m+n+1)` of the weight.
    pub fn weight_exponent(&self) -> u32 {
        2 * (self.m + self.n + 1)
    }

    /// `m + n + 1`, the quantity used to cap mode boxes during iteration.
    pub fn degree(&self) -> u32 {
        self.m + self.n + 1
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P({},{})", self.m, self.n)
    }
}

/// Reduce a signed index pair to canonical form.
///
/// `P_{μ,ν} = sign · P_{m,n}`. A negative index `−j` reflects to `j − 1`
/// and flips the sign once; the two axes reflect independently.
pub fn canonicalize(mu: i64, nu: i64) -> (ModeIndex, i8) {
    let (m, sm) = reflect(mu);
    let (n, sn) = reflect(nu);
    (ModeIndex::new(m, n), sm * sn)
}

#[inline]
fn reflect(i: i64) -> (u32, i8) {
    if i >= 0 {
        (i as u32, 1)
    } else {
        ((-i - 1) as u32, -1)
    }
}

/// The weight base `ρ`, kept as an exact reduced fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WeightConfig {
    num: u64,
    den: u64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { num: 1001, den: 1000 }
    }
}

impl WeightConfig {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num <= den {
            return Err(Error::Config(format!("weight base {num}/{den} must exceed 1")));
        }
        let g = gcd(num, den);
        Ok(WeightConfig { num: num / g, den: den / g })
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn rho(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `ρ^e` by repeated multiplication.
    pub fn rho_pow(&self, e: u32) -> f64 {
        let rho = self.rho();
        (0..e).fold(1.0, |acc, _| acc * rho)
    }

    /// `[ρ^0, ρ^1, …, ρ^max]`, each entry built from the previous one.
    pub fn powers(&self, max: u32) -> Vec<f64> {
        let rho = self.rho();
        let mut out = Vec::with_capacity(max as usize + 1);
        let mut acc = 1.0;
        out.push(acc);
        for _ in 0..max {
            acc *= rho;
            out.push(acc);
        }
        out
    }

    /// `‖P_{m,n}‖ = ρ^{2(m+n+1)}`.
    pub fn weight(&self, mode: ModeIndex) -> f64 {
        self.rho_pow(mode.weight_exponent())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl fmt::Display for WeightConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for WeightConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse weight base {s:?}, expected \"p/q\""));
        let (p, q) = s.split_once('/').ok_or_else(bad)?;
        let p = p.trim().parse::<u64>().map_err(|_| bad())?;
        let q = q.trim().parse::<u64>().map_err(|_| bad())?;
        WeightConfig::new(p, q)
    }
}

/// The named subspaces `Y₁`, `Y₂` and their complements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subspace {
    /// span{P₀₀, P₀₁, P₁₀}
    Y1,
    /// span{P_{m,n} : m ≤ 3, n ≤ 3}
    Y2,
    Z1,
    Z2,
}

impl Subspace {
    pub fn contains(&self, mode: ModeIndex) -> bool {
        let in_y1 = matches!((mode.m, mode.n), (0, 0) | (0, 1) | (1, 0));
        let in_y2 = mode.m <= 3 && mode.n <= 3;
        match self {
            Subspace::Y1 => in_y1,
            Subspace::Y2 => in_y2,
            Subspace::Z1 => !in_y1,
            Subspace::Z2 => !in_y2,
        }
    }

    fn is_complement(&self) -> bool {
        matches!(self, Subspace::Z1 | Subspace::Z2)
    }
}

/// A finite element of the weighted ℓ¹ space plus a tail budget.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    coeffs: BTreeMap<ModeIndex, f64>,
    tail: f64,
    weight: WeightConfig,
}

impl Default for SpectralField {
    fn default() -> Self {
        SpectralField::zero(WeightConfig::default())
    }
}

impl SpectralField {
    pub fn zero(weight: WeightConfig) -> Self {
        SpectralField { coeffs: BTreeMap::new(), tail: 0.0, weight }
    }

    /// A single basis function `c·P_{m,n}`.
    pub fn mode(weight: WeightConfig, mode: ModeIndex, c: f64) -> Self {
        let mut f = SpectralField::zero(weight);
        f.add_to(mode, c);
        f
    }

    /// Build from `(m, n, c)` triples; repeated modes accumulate.
    pub fn from_modes<I>(weight: WeightConfig, modes: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32, f64)>,
    {
        let mut f = SpectralField::zero(weight);
        for (m, n, c) in modes {
            f.add_to(ModeIndex::new(m, n), c);
        }
        f.prune();
        f
    }

    pub fn with_tail(mut self, tail: f64) -> Result<Self> {
        if !(tail >= 0.0) || !tail.is_finite() {
            return Err(Error::Config(format!("tail budget must be finite and non-negative, got {tail}")));
        }
        self.tail = tail;
        Ok(self)
    }

    /// The same coefficients with the tail budget dropped.
    pub fn without_tail(&self) -> Self {
        SpectralField { coeffs: self.coeffs.clone(), tail: 0.0, weight: self.weight }
    }

    pub fn weight(&self) -> WeightConfig {
        self.weight
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, mode: ModeIndex) -> f64 {
        self.coeffs.get(&mode).copied().unwrap_or(0.0)
    }

    /// Stored modes in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, f64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn max_m(&self) -> u32 {
        self.coeffs.keys().map(|k| k.m).max().unwrap_or(0)
    }

    pub fn max_n(&self) -> u32 {
        self.coeffs.keys().map(|k| k.n).max().unwrap_or(0)
    }

    pub(crate) fn add_to(&mut self, mode: ModeIndex, c: f64) {
        *self.coeffs.entry(mode).or_insert(0.0) += c;
    }

    /// Overwrite one coefficient; zero removes the mode.
    pub(crate) fn set(&mut self, mode: ModeIndex, c: f64) {
        if c == 0.0 {
            self.coeffs.remove(&mode);
        } else {
            self.coeffs.insert(mode, c);
        }
    }

    /// `self + other`
    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        linear_combine(1.0, self, 1.0, other)
    }

    /// Drop exact zeros.
    pub(crate) fn prune(&mut self) {
        self.coeffs.retain(|_, c| *c != 0.0);
    }

    pub(crate) fn from_parts(coeffs: BTreeMap<ModeIndex, f64>, tail: f64, weight: WeightConfig) -> Self {
        let mut f = SpectralField { coeffs, tail, weight };
        f.prune();
        f
    }

    /// Weighted norm of the stored coefficients, without the tail budget.
    pub fn coeff_norm(&self) -> f64 {
        let max_e = self.coeffs.keys().map(|k| k.weight_exponent()).max().unwrap_or(0);
        let pw = self.weight.powers(max_e);
        self.coeffs
            .iter()
            .map(|(k, c)| pw[k.weight_exponent() as usize] * c.abs())
            .sum()
    }

    /// `Σ ρ^{2(m+n+1)} |c_{m,n}| + tail`.
    pub fn norm(&self) -> f64 {
        self.coeff_norm() + self.tail
    }

    fn check_weight(&self, other: &SpectralField) -> Result<()> {
        if self.weight != other.weight {
            return Err(Error::Config(format!(
                "mismatched weight bases {} and {}",
                self.weight, other.weight
            )));
        }
        Ok(())
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        let coeffs = self.coeffs.iter().map(|(k, c)| (*k, a * c)).collect();
        SpectralField::from_parts(coeffs, a.abs() * self.tail, self.weight)
    }

    /// Restrict to a subspace. The tail budget always goes to the
    /// complement part (`Z₁`, `Z₂`).
    pub fn project(&self, s: Subspace) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| s.contains(**k))
            .map(|(k, c)| (*k, *c))
            .collect();
        let tail = if s.is_complement() { self.tail } else { 0.0 };
        SpectralField { coeffs, tail, weight: self.weight }
    }

    /// Keep modes with `m + n + 1 ≤ cap`; the norm of the rest moves into
    /// the tail budget.
    pub fn truncate_degree(&self, cap: u32) -> SpectralField {
        let mut kept = BTreeMap::new();
        let mut dropped = SpectralField::zero(self.weight);
        for (k, c) in &self.coeffs {
            if k.degree() <= cap {
                kept.insert(*k, *c);
            } else {
                dropped.coeffs.insert(*k, *c);
            }
        }
        SpectralField { coeffs: kept, tail: self.tail + dropped.coeff_norm(), weight: self.weight }
    }

    /// `Σ c·sin((2m+1)τ)·sin((2n+1)x)` over the stored modes. The tail
    /// budget is not part of the value.
    pub fn evaluate(&self, tau: f64, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c * ((2 * k.m + 1) as f64 * tau).sin() * ((2 * k.n + 1) as f64 * x).sin())
            .sum()
    }

    /// `∂_τ` of the stored representative evaluated at `τ = 0`.
    pub fn time_derivative_at_zero(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c * (2 * k.m + 1) as f64 * ((2 * k.n + 1) as f64 * x).sin())
            .sum()
    }

    /// `ũ(τ,x) = n·u(mτ, nx)` for odd positive `m`, `n`.
    ///
    /// Rescaling changes every weight, so an existing tail budget cannot be
    /// carried over except by the identity map; fields with a non-zero tail
    /// are rejected otherwise.
    pub fn rescale(&self, m: u32, n: u32) -> Result<SpectralField> {
        if m == 0 || n == 0 || m % 2 == 0 || n % 2 == 0 {
            return Err(Error::Domain(format!(
                "rescaling by ({m},{n}): image not representable in X, factors must be odd and positive"
            )));
        }
        if self.tail > 0.0 && (m, n) != (1, 1) {
            return Err(Error::Domain("cannot rescale a field with a non-zero tail budget".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let mt = (m * (2 * k.m + 1) - 1) / 2;
                let nt = (n * (2 * k.n + 1) - 1) / 2;
                (ModeIndex::new(mt, nt), c * n as f64)
            })
            .collect();
        Ok(SpectralField::from_parts(coeffs, self.tail * n as f64, self.weight))
    }

    /// `ũ(τ,x) = Ω⁻¹·u(x,τ)`: swap the indices and divide by `Ω`.
    pub fn focusing_transform(&self, omega: f64) -> Result<SpectralField> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Domain(format!("focusing transform needs Ω > 0, got {omega}")));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| (ModeIndex::new(k.n, k.m), c / omega))
            .collect();
        Ok(SpectralField::from_parts(coeffs, self.tail / omega, self.weight))
    }

    pub fn to_json(&self) -> FieldJson {
        FieldJson::from(self)
    }
}

/// `a·u + b·v`. Tail budgets combine as `|a|·tail(u) + |b|·tail(v)`.
pub fn linear_combine(a: f64, u: &SpectralField, b: f64, v: &SpectralField) -> Result<SpectralField> {
    u.check_weight(v)?;
    let mut coeffs: BTreeMap<ModeIndex, f64> = u.coeffs.iter().map(|(k, c)| (*k, a * c)).collect();
    for (k, c) in &v.coeffs {
        *coeffs.entry(*k).or_insert(0.0) += b * c;
    }
    Ok(SpectralField::from_parts(coeffs, a.abs() * u.tail + b.abs() * v.tail, u.weight))
}

/// Dense rectangular block of coefficients indexed by canonical `(m, n)`.
#[derive(Clone, Debug)]
pub(crate) struct DenseBlock {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseBlock {
    pub fn new(rows: usize, cols: usize) -> Self {
        DenseBlock { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn add(&mut self, m: usize, n: usize, c: f64) {
        self.data[m * self.cols + n] += c;
    }

    /// Accumulate at a signed index, reflecting into canonical form.
    #[inline]
    pub fn add_signed(&mut self, mu: i64, nu: i64, c: f64) {
        let (k, s) = canonicalize(mu, nu);
        self.add(k.m as usize, k.n as usize, s as f64 * c);
    }

    pub fn into_field(self, tail: f64, weight: WeightConfig) -> SpectralField {
        let mut coeffs = BTreeMap::new();
        for m in 0..self.rows {
            for n in 0..self.cols {
                let c = self.data[m * self.cols + n];
                if c != 0.0 {
                    coeffs.insert(ModeIndex::new(m as u32, n as u32), c);
                }
            }
        }
        SpectralField { coeffs, tail, weight }
    }
}

/// Pointwise product `u·v·w` expanded in the `P` basis.
///
/// Computed in two exact stages: `u·v` is formed as a cosine-cosine series
/// `Σ C_{i,j} cos(2iτ) cos(2jx)`, which is then multiplied by `w` mode by
/// mode. Each stage contributes a factor `1/4`; the result equals the
/// sixteen-term expansion of [`triple_product_direct`].
///
/// Tail budgets follow `t_u‖v‖‖w‖ + |u|·t_v‖w‖ + |u||v|·t_w`, where `‖·‖`
/// includes the tail and `|·|` does not.
pub fn triple_product(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    u.check_weight(v)?;
    u.check_weight(w)?;
    let tail = product_tail(u, v, w);
    if u.is_empty() || v.is_empty() || w.is_empty() {
        return Ok(SpectralField { coeffs: BTreeMap::new(), tail, weight: u.weight });
    }

    let ua: Vec<_> = u.iter().collect();
    let va: Vec<_> = v.iter().collect();
    let rows = (u.max_m() + v.max_m() + 2) as usize;
    let cols = (u.max_n() + v.max_n() + 2) as usize;
    let mut cc = vec![0.0; rows * cols];
    for (p, a) in &ua {
        for (r, b) in &va {
            let s = 0.25 * a * b;
            let im = (p.m as i64 - r.m as i64).unsigned_abs() as usize;
            let ip = (p.m + r.m + 1) as usize;
            let jm = (p.n as i64 - r.n as i64).unsigned_abs() as usize;
            let jp = (p.n + r.n + 1) as usize;
            cc[im * cols + jm] += s;
            cc[ip * cols + jm] -= s;
            cc[im * cols + jp] -= s;
            cc[ip * cols + jp] += s;
        }
    }

    let wa: Vec<_> = w.iter().collect();
    let mut out = DenseBlock::new(rows + w.max_m() as usize, cols + w.max_n() as usize);
    for i in 0..rows {
        for j in 0..cols {
            let g = cc[i * cols + j];
            if g == 0.0 {
                continue;
            }
            let (i, j) = (i as i64, j as i64);
            for (k, c) in &wa {
                let s = 0.25 * g * c;
                let (m, n) = (k.m as i64, k.n as i64);
                out.add_signed(m + i, n + j, s);
                out.add_signed(m - i, n + j, s);
                out.add_signed(m + i, n - j, s);
                out.add_signed(m - i, n - j, s);
            }
        }
    }
    Ok(out.into_field(tail, u.weight))
}

fn product_tail(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> f64 {
    let (cu, cv) = (u.coeff_norm(), v.coeff_norm());
    u.tail * v.norm() * w.norm() + cu * v.tail * w.norm() + cu * cv * w.tail
}

/// Reference triple product: the sixteen-term expansion of
/// `P_{m₁,n₁}·P_{m₂,n₂}·P_{m₃,n₃}` applied to every triple of modes.
/// Cubic in the number of modes; used to cross-check [`triple_product`].
pub fn triple_product_direct(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    u.check_weight(v)?;
    u.check_weight(w)?;
    let mut acc = SpectralField::zero(u.weight);
    for (p1, a) in u.iter() {
        for (p2, b) in v.iter() {
            for (p3, c) in w.iter() {
                let s = a * b * c / 16.0;
                let (m1, m2, m3) = (p1.m as i64, p2.m as i64, p3.m as i64);
                let (n1, n2, n3) = (p1.n as i64, p2.n as i64, p3.n as i64);
                let ts = [
                    (m1 + m2 + m3 + 1, 1.0),
                    (-m1 + m2 + m3, -1.0),
                    (m1 - m2 + m3, -1.0),
                    (m1 + m2 - m3, -1.0),
                ];
                let xs = [
                    (n1 + n2 + n3 + 1, 1.0),
                    (-n1 + n2 + n3, -1.0),
                    (n1 - n2 + n3, -1.0),
                    (n1 + n2 - n3, -1.0),
                ];
                for (mu, st) in ts {
                    for (nu, sx) in xs {
                        let (k, sg) = canonicalize(mu, nu);
                        acc.add_to(k, s * st * sx * sg as f64);
                    }
                }
            }
        }
    }
    acc.prune();
    acc.tail = product_tail(u, v, w);
    Ok(acc)
}

/// One stored mode in the JSON schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeJson {
    pub m: u32,
    pub n: u32,
    pub c: f64,
}

/// `{"rho": "1001/1000", "tail": float, "modes": [{"m","n","c"}, …]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldJson {
    pub rho: String,
    pub tail: f64,
    pub modes: Vec<ModeJson>,
}

impl From<&SpectralField> for FieldJson {
    fn from(f: &SpectralField) -> Self {
        FieldJson {
            rho: f.weight.to_string(),
            tail: f.tail,
            modes: f.iter().map(|(k, c)| ModeJson { m: k.m, n: k.n, c }).collect(),
        }
    }
}

impl TryFrom<FieldJson> for SpectralField {
    type Error = Error;

    fn try_from(j: FieldJson) -> Result<Self> {
        let weight: WeightConfig = j.rho.parse()?;
        let mut coeffs = BTreeMap::new();
        for md in j.modes {
            if !md.c.is_finite() {
                return Err(Error::Config(format!("non-finite coefficient at P({},{})", md.m, md.n)));
            }
            if coeffs.insert(ModeIndex::new(md.m, md.n), md.c).is_some() {
                return Err(Error::Config(format!("duplicate mode P({},{})", md.m, md.n)));
            }
        }
        SpectralField::from_parts(coeffs, 0.0, weight).with_tail(j.tail)
    }
}

impl Serialize for SpectralField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FieldJson::deserialize(d)?;
        SpectralField::try_from(j).map_err(serde::de::Error::custom)
    }
}
