//! Scalar abstraction: every numeric kernel in this crate is generic over
//! the floating-point type through [`Real`].

use std::fmt;
use std::iter::{Product, Sum};

/// Floating-point scalar (`f32` or `f64`) the library is generic over.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Sum
    + Product
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal (tolerances, defaults, config values) into the
/// working scalar. Conversion of finite literals never fails; values below
/// the target's resolution flush toward zero, as with an `as` cast.
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 literal converts to scalar")
}

/// A strictly positive floor for near-zero denominators: the given literal,
/// or the smallest positive value of `T` when the literal underflows.
pub fn positive_floor<T: Real>(x: f64) -> T {
    let v = real::<T>(x);
    if v > T::zero() {
        v
    } else {
        T::min_positive_value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_roundtrips() {
        assert_eq!(real::<f64>(1e-10), 1e-10);
        assert_eq!(real::<f32>(0.5), 0.5f32);
    }

    #[test]
    fn positive_floor_never_zero() {
        assert!(positive_floor::<f32>(1e-300) > 0.0);
        assert_eq!(positive_floor::<f64>(1e-300), 1e-300);
    }
}
