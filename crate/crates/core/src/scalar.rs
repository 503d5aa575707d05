//! Scalar abstractions shared by every numeric routine in the crate.
//!
//! Three layers:
//!
//! - [`Scalar`]: ring arithmetic plus a magnitude used for pivoting and
//!   printing. Implemented for `f32`, `f64`, `i64` and [`BigRational`].
//! - [`Field`]: a [`Scalar`] with exact or approximate division. Gaussian
//!   elimination and LU run over any field, so integer-valued models can be
//!   reduced in exact rational arithmetic.
//! - [`Real`]: floating-point fields, required by the orthogonal
//!   decompositions (SVD, symmetric eigenproblem).

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar: Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static {
    /// Absolute value as `f64`, used for pivot choice and zero tests.
    fn magnitude(&self) -> f64;
    fn as_f64(&self) -> f64;
    /// Lossy conversion from `f64`; `None` for non-finite input or when the
    /// value is not representable (e.g. a fraction into `i64`).
    fn try_from_f64(x: f64) -> Option<Self>;
    /// True when the value is an integer (always true for `i64`).
    fn is_integral(&self) -> bool;
}

pub trait Field: Scalar {}

pub trait Real: Field + Float + FromPrimitive {
    fn eps() -> Self {
        <Self as Float>::epsilon()
    }
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable")
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn magnitude(&self) -> f64 {
                self.abs() as f64
            }
            fn as_f64(&self) -> f64 {
                *self as f64
            }
            fn try_from_f64(x: f64) -> Option<Self> {
                x.is_finite().then_some(x as $t)
            }
            fn is_integral(&self) -> bool {
                self.fract() == 0.0
            }
        }
        impl Field for $t {}
        impl Real for $t {}
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for i64 {
    fn magnitude(&self) -> f64 {
        self.unsigned_abs() as f64
    }
    fn as_f64(&self) -> f64 {
        *self as f64
    }
    fn try_from_f64(x: f64) -> Option<Self> {
        (x.is_finite() && x.fract() == 0.0 && x.abs() < 9.0e15).then_some(x as i64)
    }
    fn is_integral(&self) -> bool {
        true
    }
}

impl Scalar for BigRational {
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn try_from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }
    fn is_integral(&self) -> bool {
        self.is_integer()
    }
}

impl Field for BigRational {}

/// Exact rational from an integral `f64`; `None` when `x` has a fractional part.
pub fn rational_from_integral(x: f64) -> Option<BigRational> {
    if !x.is_finite() || x.fract() != 0.0 {
        return None;
    }
    let n = BigInt::from_f64(x)?;
    Some(BigRational::from_integer(n))
}
