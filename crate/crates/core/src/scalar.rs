//! Scalar abstraction.
//!
//! Everything that only needs ordered-field arithmetic (conditional
//! expectations, the backward recursions, Doob-Meyer, stopping rules) is
//! generic over [`Scalar`], so it runs unchanged on `f32`, `f64` and exact
//! rationals. Norms need roots and powers and are generic over [`Real`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Exact rational scalar used for bit-exact fixture checks.
pub type Rational = num_rational::Ratio<i64>;

/// An ordered field element.
pub trait Scalar:
    Num + Signed + PartialOrd + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts a literal tolerance or constant into this scalar type.
    ///
    /// Panics if the value is not representable (NaN or infinite for rationals).
    fn lit(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(|| panic!("{v} is not representable"))
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

    /// `max(self, 0)`.
    fn pos_part(self) -> Self {
        self.max_of(Self::zero())
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Signed + PartialOrd + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// A floating-point scalar.
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}
