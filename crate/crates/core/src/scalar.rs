//! Scalar abstraction shared by the analytic and special-function code.
//!
//! Everything that evaluates characteristic functions or the correlated
//! logical-error sum is written against [`Real`], so the same code runs in
//! `f32`, `f64`, or the extended-precision [`Precise`](crate::precise::Precise)
//! type. The trait sits on top of [`num_traits::Num`] and adds the handful of
//! transcendental functions the crate needs.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Float, Num};

/// A real scalar with the elementary functions used by this crate.
///
/// Implementations must be exact for integers up to 2^53 and for every
/// finite `f64` passed through [`Real::from_f64`] (at least up to the type's
/// own precision).
pub trait Real: Num + Clone + PartialOrd + Neg<Output = Self> + Debug + Send + Sync + 'static {
    /// Number of significand bits carried by the type.
    fn precision_bits() -> u32;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn from_i128(x: i128) -> Self {
        // 32-bit limbs are exact in every implementation
        let negative = x < 0;
        let mut magnitude = x.unsigned_abs();
        let mut acc = Self::zero();
        let mut scale = Self::one();
        let limb = Self::from_f64(4_294_967_296.0);
        while magnitude > 0 {
            let digit = (magnitude & 0xffff_ffff) as f64;
            acc = acc + Self::from_f64(digit) * scale.clone();
            scale = scale * limb.clone();
            magnitude >>= 32;
        }
        if negative {
            -acc
        } else {
            acc
        }
    }

    fn from_u64(x: u64) -> Self {
        Self::from_i128(i128::from(x))
    }

    fn pi() -> Self;
    fn ln_2() -> Self;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `self^exponent` for `self >= 0`; `0^e = 0` for `e > 0`.
    fn powf(&self, exponent: &Self) -> Self {
        if self.is_zero() {
            if exponent.is_zero() {
                return Self::one();
            }
            return Self::zero();
        }
        (exponent.clone() * self.ln()).exp()
    }

    fn powi(&self, n: u32) -> Self {
        let mut base = self.clone();
        let mut result = Self::one();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result * base.clone();
            }
            base = base.clone() * base;
            n >>= 1;
        }
        result
    }

    fn cosh(&self) -> Self {
        let e = self.exp();
        let two = Self::one() + Self::one();
        (e.clone() + Self::one() / e) / two
    }

    /// `exp(x) - 1` without cancellation for small `|x|`.
    fn exp_m1(&self) -> Self;

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

macro_rules! impl_real_for_float {
    ($t:ty) => {
        impl Real for $t {
            fn precision_bits() -> u32 {
                <$t>::MANTISSA_DIGITS
            }
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn to_f64(&self) -> f64 {
                f64::from(*self)
            }
            fn pi() -> Self {
                <$t as num_traits::FloatConst>::PI()
            }
            fn ln_2() -> Self {
                <$t as num_traits::FloatConst>::LN_2()
            }
            fn exp(&self) -> Self {
                Float::exp(*self)
            }
            fn ln(&self) -> Self {
                Float::ln(*self)
            }
            fn sqrt(&self) -> Self {
                Float::sqrt(*self)
            }
            fn abs(&self) -> Self {
                Float::abs(*self)
            }
            fn powf(&self, exponent: &Self) -> Self {
                Float::powf(*self, *exponent)
            }
            fn powi(&self, n: u32) -> Self {
                match i32::try_from(n) {
                    Ok(n) => Float::powi(*self, n),
                    Err(_) => Float::powf(*self, n as $t),
                }
            }
            fn cosh(&self) -> Self {
                Float::cosh(*self)
            }
            fn exp_m1(&self) -> Self {
                Float::exp_m1(*self)
            }
        }
    };
}

impl_real_for_float!(f32);
impl_real_for_float!(f64);
