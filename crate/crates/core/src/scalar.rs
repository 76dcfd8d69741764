//! Scalar abstraction shared by every module.
//!
//! Market values, prices and LP coefficients are all generic over [`Scalar`],
//! which is implemented for `f32`, `f64` and the exact rationals
//! `Ratio<i64>` / `Ratio<i128>`. Floating types compare with an absolute
//! tolerance; rationals compare exactly.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Absolute tolerance used by every argmax and threshold comparison.
    fn tolerance() -> Self;

    /// Tolerance for LP constraint slacks.
    fn lp_tolerance() -> Self;

    /// `false` for NaN and infinities.
    fn is_finite_value(self) -> bool {
        self.to_f64().is_some_and(f64::is_finite)
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable"))
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(|| panic!("{n} is not representable"))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// `2^exp`, exact for rationals.
    fn pow2(exp: i32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp.unsigned_abs() {
            acc = acc * Self::two();
        }
        if exp < 0 {
            Self::one() / acc
        } else {
            acc
        }
    }

    fn midpoint(self, other: Self) -> Self {
        (self + other) / Self::two()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn abs_value(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    /// Strictly greater by more than the tolerance.
    fn gt_tol(self, other: Self) -> bool {
        self > other + Self::tolerance()
    }

    /// Greater or equal up to the tolerance.
    fn ge_tol(self, other: Self) -> bool {
        self + Self::tolerance() >= other
    }

    fn eq_tol(self, other: Self) -> bool {
        (self - other).abs_value() <= Self::tolerance()
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn lp_tolerance() -> Self {
        1e-12
    }
}

// 1e-9 is below single-precision resolution for typical market values.
impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }

    fn lp_tolerance() -> Self {
        1e-5
    }
}

macro_rules! impl_exact {
    ($($int:ty),*) => {$(
        impl Scalar for Ratio<$int> {
            fn tolerance() -> Self {
                Ratio::from_integer(0)
            }

            fn lp_tolerance() -> Self {
                Ratio::from_integer(0)
            }

            fn is_finite_value(self) -> bool {
                true
            }
        }
    )*};
}

impl_exact!(i64, i128);

/// `⌈log2 n⌉` for `n ≥ 1`; zero for `n ≤ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}
