//! Exact representations of the numeric constants that measured quantities
//! are compared against.
//!
//! A constant is either a rational `p/q` or a rational multiple of `√2`.
//! `√2` is enclosed by the bracket `(1.41421356, 1.41421357)`; a comparison
//! against `r·√2` only passes when it holds for every point of the bracket.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed};
use serde::{Deserialize, Serialize};

const SQRT2_LO: (i64, i64) = (141_421_356, 100_000_000);
const SQRT2_HI: (i64, i64) = (141_421_357, 100_000_000);

/// An exact constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exact {
    Rational(i64, i64),
    /// `(num/den)·√2`
    Sqrt2Times(i64, i64),
}

/// Which side of the constant a measured value must fall on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `measured ≤ bound`
    AtMost,
    /// `measured ≥ bound`
    AtLeast,
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The exact rational value of a finite `f64`.
pub fn exact_f64(x: f64) -> Option<BigRational> {
    BigRational::from_f64(x)
}

pub fn to_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// Rational enclosure `(lo, hi)` of `√2`.
pub fn sqrt2_bracket() -> (BigRational, BigRational) {
    (ratio(SQRT2_LO.0, SQRT2_LO.1), ratio(SQRT2_HI.0, SQRT2_HI.1))
}

impl Exact {
    pub const fn rational(num: i64, den: i64) -> Self {
        Exact::Rational(num, den)
    }

    pub const fn sqrt2(num: i64, den: i64) -> Self {
        Exact::Sqrt2Times(num, den)
    }

    /// Smallest rational the constant may take.
    pub fn lower(&self) -> BigRational {
        match *self {
            Exact::Rational(p, q) => ratio(p, q),
            Exact::Sqrt2Times(p, q) => {
                let r = ratio(p, q);
                let s = if r.is_negative() { SQRT2_HI } else { SQRT2_LO };
                r * ratio(s.0, s.1)
            }
        }
    }

    /// Largest rational the constant may take.
    pub fn upper(&self) -> BigRational {
        match *self {
            Exact::Rational(p, q) => ratio(p, q),
            Exact::Sqrt2Times(p, q) => {
                let r = ratio(p, q);
                let s = if r.is_negative() { SQRT2_LO } else { SQRT2_HI };
                r * ratio(s.0, s.1)
            }
        }
    }

    /// Nearest double, reported alongside measured values.
    pub fn to_f64(&self) -> f64 {
        match *self {
            Exact::Rational(p, q) => p as f64 / q as f64,
            Exact::Sqrt2Times(p, q) => p as f64 / q as f64 * std::f64::consts::SQRT_2,
        }
    }

    /// `x ≤ self`, decided exactly.
    pub fn bounds_above(&self, x: f64) -> bool {
        match exact_f64(x) {
            Some(x) => x <= self.lower(),
            None => false,
        }
    }

    /// `x ≥ self`, decided exactly.
    pub fn bounds_below(&self, x: f64) -> bool {
        match exact_f64(x) {
            Some(x) => x >= self.upper(),
            None => false,
        }
    }

    pub fn holds(&self, relation: Relation, x: f64) -> bool {
        match relation {
            Relation::AtMost => self.bounds_above(x),
            Relation::AtLeast => self.bounds_below(x),
        }
    }

    /// Exact comparison of a rational against the constant.
    pub fn holds_exact(&self, relation: Relation, x: &BigRational) -> bool {
        match relation {
            Relation::AtMost => *x <= self.lower(),
            Relation::AtLeast => *x >= self.upper(),
        }
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Exact::Rational(p, 1) => write!(f, "{p}"),
            Exact::Rational(p, q) => write!(f, "{p}/{q}"),
            Exact::Sqrt2Times(p, 1) => write!(f, "{p}*sqrt(2)"),
            Exact::Sqrt2Times(p, q) => write!(f, "{p}/{q}*sqrt(2)"),
        }
    }
}

/// Shorthand for the constants used by the verifier.
pub mod targets {
    use super::Exact;

    pub const Q_LOWER: Exact = Exact::rational(13, 1000);
    pub const Q_UPPER: Exact = Exact::rational(15, 1000);
    pub const UK_UPPER: Exact = Exact::rational(3, 2);
    pub const UK_LOWER: Exact = Exact::rational(5, 4);
    pub const UK3: Exact = Exact::sqrt2(2, 1);
    pub const RESIDUE: Exact = Exact::sqrt2(8, 1);
    pub const B_SUM: Exact = Exact::rational(19, 10_000);
    pub const BETA0_LOWER: Exact = Exact::rational(113, 1000);
    pub const BETA0_UPPER: Exact = Exact::rational(135, 1000);
    pub const BETA1_LOWER: Exact = Exact::rational(38, 1000);
    pub const BETA1_UPPER: Exact = Exact::rational(45, 1000);
    pub const A_NORM: Exact = Exact::rational(139, 85);
    pub const A00: Exact = Exact::rational(10, 17);
    pub const A01: Exact = Exact::rational(54, 85);
    pub const ALPHA0: Exact = Exact::rational(1045, 1000);
    pub const ALPHA1: Exact = Exact::rational(2003, 1000);
    pub const ALPHA2: Exact = Exact::rational(974, 1000);
    pub const J_PART: Exact = Exact::rational(1, 16);
    pub const H_NORM: Exact = Exact::rational(88, 100);
    pub const CONTRACTION: Exact = Exact::rational(929, 1000);
    pub const DISTANCE: Exact = Exact::rational(139, 42_500);
    /// Smallest k covered by the existence theorem.
    pub const THEOREM_K: u64 = 79_675;
    /// Smallest k for which the bound on the linear part holds.
    pub const H_MIN_K: u64 = 100;

    /// Per-column bounds on `‖H_k P_{m,n}‖ / ‖P_{m,n}‖` for the 16 modes of Y₂.
    pub const H_TABLE: [((u32, u32), Exact); 16] = [
        ((0, 0), Exact::rational(15, 100)),
        ((0, 1), Exact::rational(30, 100)),
        ((0, 2), Exact::rational(24, 100)),
        ((0, 3), Exact::rational(19, 100)),
        ((1, 0), Exact::rational(30, 100)),
        ((1, 1), Exact::rational(74, 100)),
        ((1, 2), Exact::rational(30, 100)),
        ((1, 3), Exact::rational(21, 100)),
        ((2, 0), Exact::rational(24, 100)),
        ((2, 1), Exact::rational(30, 100)),
        ((2, 2), Exact::rational(30, 100)),
        ((2, 3), Exact::rational(24, 100)),
        ((3, 0), Exact::rational(19, 100)),
        ((3, 1), Exact::rational(21, 100)),
        ((3, 2), Exact::rational(24, 100)),
        ((3, 3), Exact::rational(24, 100)),
    ];
}

/// Exact evaluation helpers over `BigRational`.
pub(crate) fn pow(x: &BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::from_integer(BigInt::from(1));
    for _ in 0..e {
        acc *= x;
    }
    acc
}
