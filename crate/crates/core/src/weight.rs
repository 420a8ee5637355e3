//! Scalar seam for distance-graph weights.
//!
//! Closure and backbone code is generic over [`EdgeWeight`] so the same
//! algorithms run on exact rationals (the default — the metric/semi-metric
//! test is an exact equality) and on floats (an opt-in mode for very large
//! graphs, where equality is replaced by a relative tolerance).

use std::fmt::Debug;
use std::ops::Add;

use num_traits::Zero;

use crate::rational::Rational;

/// Relative tolerance used by the `f64` backbone equality test.
pub const F64_BACKBONE_TOLERANCE: f64 = 1e-9;

/// Relative tolerance used by the `f32` backbone equality test (wider than
/// the `f64` tolerance because single precision carries ~7 digits).
pub const F32_BACKBONE_TOLERANCE: f32 = 1e-6;

/// An edge/path weight the closure algorithms can accumulate and compare.
///
/// `backbone_eq` decides the metric test `d == d^C`: exact equality for
/// rationals, relative-tolerance equality for floats. `to_exact`/`from_exact`
/// bridge to the rational serialization used by every on-disk artifact, so
/// reload roundtrips are lossless for both modes (every finite float is a
/// dyadic rational).
pub trait EdgeWeight:
    Clone + PartialOrd + Add<Output = Self> + Zero + Debug + Send + Sync + 'static
{
    fn backbone_eq(&self, other: &Self) -> bool;
    fn to_exact(&self) -> Rational;
    fn from_exact(value: &Rational) -> Self;
}

impl EdgeWeight for Rational {
    fn backbone_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn to_exact(&self) -> Rational {
        self.clone()
    }

    fn from_exact(value: &Rational) -> Self {
        value.clone()
    }
}

impl EdgeWeight for f64 {
    fn backbone_eq(&self, other: &Self) -> bool {
        let diff = (self - other).abs();
        diff <= F64_BACKBONE_TOLERANCE * self.abs().max(other.abs())
    }

    fn to_exact(&self) -> Rational {
        Rational::from_f64(*self).expect("finite weight")
    }

    fn from_exact(value: &Rational) -> Self {
        value.to_f64()
    }
}

impl EdgeWeight for f32 {
    fn backbone_eq(&self, other: &Self) -> bool {
        let diff = (self - other).abs();
        diff <= F32_BACKBONE_TOLERANCE * self.abs().max(other.abs())
    }

    fn to_exact(&self) -> Rational {
        Rational::from_f64(f64::from(*self)).expect("finite weight")
    }

    fn from_exact(value: &Rational) -> Self {
        value.to_f64() as f32
    }
}
