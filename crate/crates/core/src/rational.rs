//! Exact rational arithmetic for edge weights and path lengths.
//!
//! All proximities and distances derive from integer post counts, so every
//! weight is a reduced fraction. Path sums and the metric/semi-metric
//! equality test stay exact end to end. Values live in a 128-bit fast path
//! and promote to arbitrary-precision integers only when an operation would
//! overflow; results that fit 128 bits are demoted back so the fast path
//! stays hot across long shortest-path sweeps.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
enum Repr {
    Small(Ratio<i128>),
    Big(Box<BigRational>),
}

/// Reduced rational number with exact comparison and arithmetic.
#[derive(Clone, Debug)]
pub struct Rational(Repr);

impl Default for Rational {
    fn default() -> Self {
        Rational::from_integer(0)
    }
}

/// Error parsing a rational from its textual form.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("invalid rational literal: {0:?}")]
    Invalid(String),
    #[error("zero denominator in rational literal: {0:?}")]
    ZeroDenominator(String),
}

impl Rational {
    /// Build `numer/denom` in lowest terms.
    ///
    /// Panics if `denom` is zero; weights in this crate are always derived
    /// from positive unions of post counts.
    pub fn new(numer: i128, denom: i128) -> Self {
        assert!(denom != 0, "rational with zero denominator");
        Rational(Repr::Small(Ratio::new(numer, denom)))
    }

    pub fn from_integer(n: i128) -> Self {
        Rational(Repr::Small(Ratio::from_integer(n)))
    }

    fn from_big(big: BigRational) -> Self {
        if let (Some(n), Some(d)) = (big.numer().to_i128(), big.denom().to_i128()) {
            Rational(Repr::Small(Ratio::new_raw(n, d)))
        } else {
            Rational(Repr::Big(Box::new(big)))
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(r) => BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom())),
            Repr::Big(b) => (**b).clone(),
        }
    }

    /// Exact value of a finite float (every finite f64 is a dyadic rational).
    ///
    /// Returns `None` for NaN and infinities.
    pub fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Self::from_big)
    }

    pub fn numer_string(&self) -> String {
        match &self.0 {
            Repr::Small(r) => r.numer().to_string(),
            Repr::Big(b) => b.numer().to_string(),
        }
    }

    pub fn denom_string(&self) -> String {
        match &self.0 {
            Repr::Small(r) => r.denom().to_string(),
            Repr::Big(b) => b.denom().to_string(),
        }
    }

    /// Parse from separate numerator/denominator decimal strings, as stored
    /// in edge-list CSV columns.
    pub fn from_parts(numer: &str, denom: &str) -> Result<Self, ParseRationalError> {
        let n = BigInt::from_str(numer.trim())
            .map_err(|_| ParseRationalError::Invalid(numer.to_string()))?;
        let d = BigInt::from_str(denom.trim())
            .map_err(|_| ParseRationalError::Invalid(denom.to_string()))?;
        if d.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(denom.to_string()));
        }
        Ok(Self::from_big(BigRational::new(n, d)))
    }

    /// Parse `"1/4"`, `"0.25"`, or `"3"`.
    pub fn parse(s: &str) -> Result<Self, ParseRationalError> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            return Self::from_parts(n, d);
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ParseRationalError::Invalid(s.to_string()));
            }
            let negative = int_part.trim_start().starts_with('-');
            let int = if int_part.is_empty() || int_part == "-" {
                BigInt::zero()
            } else {
                BigInt::from_str(int_part).map_err(|_| ParseRationalError::Invalid(s.to_string()))?
            };
            let frac = BigInt::from_str(frac_part)
                .map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
            let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
            let numer = if negative { &int * &scale - frac } else { &int * &scale + frac };
            return Ok(Self::from_big(BigRational::new(numer, scale)));
        }
        let n = BigInt::from_str(s).map_err(|_| ParseRationalError::Invalid(s.to_string()))?;
        Ok(Self::from_big(BigRational::from_integer(n)))
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(r) => Rational(Repr::Small(r.recip())),
            Repr::Big(b) => Self::from_big(b.recip()),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.numer().is_negative(),
            Repr::Big(b) => b.numer().is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_integer(),
            Repr::Big(b) => b.is_integer(),
        }
    }

    /// Nearest f64 (for human-readable percentages and float-mode graphs).
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Smallest integer ≥ self.
    pub fn ceil_i64(&self) -> i64 {
        match &self.0 {
            Repr::Small(r) => r.ceil().to_integer() as i64,
            Repr::Big(b) => b.ceil().to_integer().to_i64().expect("ceil out of i64 range"),
        }
    }
}

macro_rules! checked_binop {
    ($lhs:expr, $rhs:expr, $checked:ident, $op:tt) => {
        match (&$lhs.0, &$rhs.0) {
            (Repr::Small(a), Repr::Small(b)) => match a.$checked(b) {
                Some(r) => Rational(Repr::Small(r)),
                None => Rational::from_big($lhs.to_big() $op $rhs.to_big()),
            },
            _ => Rational::from_big($lhs.to_big() $op $rhs.to_big()),
        }
    };
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        checked_binop!(self, rhs, checked_add, +)
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        checked_binop!(self, rhs, checked_sub, -)
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        checked_binop!(self, rhs, checked_mul, *)
    }
}

impl Div for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        checked_binop!(self, rhs, checked_div, /)
    }
}

macro_rules! owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
    };
}

owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
owned_binop!(Div, div);

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        // Canonical representation: anything that fits i128 is Small, so
        // equal values always share a variant.
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a == b,
            (Repr::Big(a), Repr::Big(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => {
                // Cross-multiply when it fits; denominators are positive.
                match (a.numer().checked_mul(b.denom()), b.numer().checked_mul(a.denom())) {
                    (Some(x), Some(y)) => x.cmp(&y),
                    _ => self.to_big().cmp(&other.to_big()),
                }
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational::from_integer(0)
    }
    fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_zero(),
            Repr::Big(b) => b.is_zero(),
        }
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational::from_integer(1)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer_string())
        } else {
            write!(f, "{}/{}", self.numer_string(), self.denom_string())
        }
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Rational::from_integer(n as i128)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n as i128)
    }
}
