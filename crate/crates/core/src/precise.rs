//! Binary floating point with a compile-time significand width.
//!
//! `Precise<BITS>` stores `±mag · 2^exp` with `mag` normalized to exactly
//! `BITS` bits and rounds every operation to nearest. It exists for one job:
//! evaluating alternating sums of characteristic-function values whose terms
//! cancel to far below `f64` resolution. Transcendentals are computed in
//! fixed point with 64 guard bits and then rounded back.
//!
//! The width is a const generic so that `zero()`/`one()` and friends need no
//! runtime context; callers that pick the width at runtime dispatch over the
//! tiers in [`PRECISION_TIERS`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Num, One, ToPrimitive, Zero};

use crate::scalar::Real;

/// Significand widths for which a `Precise` instantiation is compiled.
pub const PRECISION_TIERS: [u32; 7] = [128, 192, 256, 384, 512, 768, 1024];

const GUARD_BITS: u64 = 64;

#[derive(Clone)]
pub struct Precise<const BITS: u32> {
    negative: bool,
    mag: BigUint,
    exp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsePreciseError(String);

impl fmt::Display for ParsePreciseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid decimal literal: {}", self.0)
    }
}

impl std::error::Error for ParsePreciseError {}

impl<const BITS: u32> Precise<BITS> {
    fn from_parts(negative: bool, mut mag: BigUint, mut exp: i64) -> Self {
        if mag.is_zero() {
            return Self::zero();
        }
        let shift = mag.bits() as i64 - i64::from(BITS);
        match shift.cmp(&0) {
            Ordering::Greater => {
                let half = BigUint::one() << (shift as u64 - 1);
                mag = (mag + half) >> shift as u64;
                exp += shift;
                if mag.bits() > u64::from(BITS) {
                    mag >>= 1u32;
                    exp += 1;
                }
            }
            Ordering::Less => {
                mag <<= (-shift) as u64;
                exp += shift;
            }
            Ordering::Equal => {}
        }
        Self { negative, mag, exp }
    }

    fn from_bigint(value: BigInt, exp: i64) -> Self {
        let (sign, mag) = value.into_parts();
        Self::from_parts(sign == Sign::Minus, mag, exp)
    }

    fn signed_mag(&self) -> BigInt {
        let sign = if self.negative { Sign::Minus } else { Sign::Plus };
        BigInt::from_biguint(sign, self.mag.clone())
    }

    /// Rounded fixed-point image `round(self · 2^frac_bits)`.
    fn to_fixed(&self, frac_bits: u64) -> BigInt {
        if self.mag.is_zero() {
            return BigInt::zero();
        }
        let shift = self.exp + frac_bits as i64;
        let mag = if shift >= 0 {
            &self.mag << shift as u64
        } else {
            let s = (-shift) as u64;
            if s > self.mag.bits() + 1 {
                BigUint::zero()
            } else {
                (&self.mag + (BigUint::one() << (s - 1))) >> s
            }
        };
        let sign = if self.negative { Sign::Minus } else { Sign::Plus };
        BigInt::from_biguint(sign, mag)
    }

    fn from_fixed(value: BigInt, frac_bits: u64) -> Self {
        Self::from_bigint(value, -(frac_bits as i64))
    }

    /// Multiply by `2^k` exactly.
    pub fn mul_pow2(mut self, k: i64) -> Self {
        if !self.mag.is_zero() {
            self.exp += k;
        }
        self
    }

    fn work_bits() -> u64 {
        u64::from(BITS) + GUARD_BITS
    }

    /// Binary exponent `e` such that `2^(e-1) <= |self| < 2^e`.
    fn magnitude_exponent(&self) -> i64 {
        self.exp + i64::from(BITS)
    }

    /// Truncation toward zero.
    pub fn trunc(&self) -> Self {
        if self.mag.is_zero() || self.exp >= 0 {
            return self.clone();
        }
        let s = (-self.exp) as u64;
        if s >= self.mag.bits() {
            return Self::zero();
        }
        Self::from_parts(self.negative, &self.mag >> s, 0)
    }

    /// Scientific-notation rendering with `digits` significant decimal digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.mag.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let log10_est = (self.magnitude_exponent() as f64 - 1.0) * std::f64::consts::LOG10_2;
        let mut dec_exp = log10_est.floor() as i64;
        let scaled = |dec_exp: i64| -> BigUint {
            let k = digits as i64 - 1 - dec_exp;
            let ten = BigUint::from(10u32);
            let (num, den) = if k >= 0 {
                (&self.mag * ten.pow(k as u32), BigUint::one())
            } else {
                (self.mag.clone(), ten.pow((-k) as u32))
            };
            let (num, den) = if self.exp >= 0 {
                (num << self.exp as u64, den)
            } else {
                (num, den << (-self.exp) as u64)
            };
            (num * 2u32 + &den) / (den * 2u32)
        };
        let mut n = scaled(dec_exp);
        let limit = BigUint::from(10u32).pow(digits as u32);
        if n >= limit {
            dec_exp += 1;
            n = scaled(dec_exp);
        } else if n < BigUint::from(10u32).pow(digits as u32 - 1) {
            dec_exp -= 1;
            n = scaled(dec_exp);
        }
        let s = n.to_str_radix(10);
        let (head, tail) = s.split_at(1);
        let sign = if self.negative { "-" } else { "" };
        if tail.is_empty() {
            format!("{sign}{head}e{dec_exp}")
        } else {
            format!("{sign}{head}.{tail}e{dec_exp}")
        }
    }

    fn parse_decimal(src: &str) -> Result<Self, ParsePreciseError> {
        let err = || ParsePreciseError(src.to_string());
        let s = src.trim();
        let (negative, s) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| err())?),
            None => (s, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        let digits: String = format!("{int_part}{frac_part}");
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let n = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(err)?;
        let dec_exp = exponent - frac_part.len() as i64;
        let ten = BigUint::from(10u32);
        let work = Self::work_bits();
        let value = if dec_exp >= 0 {
            Self::from_parts(negative, n * ten.pow(dec_exp as u32), 0)
        } else {
            let den = ten.pow((-dec_exp) as u32);
            let extra = work + den.bits();
            let q = (n << extra) / den;
            Self::from_parts(negative, q, -(extra as i64))
        };
        Ok(value)
    }
}

// --- constants -----------------------------------------------------------

type ConstCache = Mutex<HashMap<(u8, u64), BigInt>>;

fn const_cache() -> &'static ConstCache {
    static CACHE: OnceLock<ConstCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached_constant(tag: u8, frac_bits: u64, compute: impl FnOnce(u64) -> BigInt) -> BigInt {
    if let Some(v) = const_cache().lock().expect("constant cache poisoned").get(&(tag, frac_bits)) {
        return v.clone();
    }
    let v = compute(frac_bits);
    const_cache()
        .lock()
        .expect("constant cache poisoned")
        .insert((tag, frac_bits), v.clone());
    v
}

/// `atanh(1/k)` or `atan(1/k)` in fixed point.
fn arc_recip_fixed(k: u32, frac_bits: u64, hyperbolic: bool) -> BigInt {
    let k = BigInt::from(k);
    let k2 = &k * &k;
    let mut term = (BigInt::one() << frac_bits) / &k;
    let mut sum = term.clone();
    let mut j: u64 = 1;
    loop {
        term /= &k2;
        if term.is_zero() {
            break;
        }
        let contrib = &term / BigInt::from(2 * j + 1);
        if hyperbolic || j.is_multiple_of(2) {
            sum += contrib;
        } else {
            sum -= contrib;
        }
        j += 1;
    }
    sum
}

fn ln2_fixed(frac_bits: u64) -> BigInt {
    cached_constant(0, frac_bits, |w| {
        let extra = 16;
        (arc_recip_fixed(3, w + extra, true) * 2) >> extra
    })
}

fn pi_fixed(frac_bits: u64) -> BigInt {
    cached_constant(1, frac_bits, |w| {
        let extra = 16;
        let a = arc_recip_fixed(5, w + extra, false) * 16;
        let b = arc_recip_fixed(239, w + extra, false) * 4;
        (a - b) >> extra
    })
}

/// `exp(r)` in fixed point for `|r| < 1`.
fn exp_fixed_small(r: &BigInt, frac_bits: u64) -> BigInt {
    const HALVINGS: u64 = 12;
    let w = frac_bits + HALVINGS;
    // the integer r read at w fractional bits is r / 2^HALVINGS
    let s = r;
    let one = BigInt::one() << w;
    let mut term = one.clone();
    let mut sum = one;
    let mut k: u32 = 1;
    loop {
        term = ((&term * s) >> w) / BigInt::from(k);
        if term.magnitude().bits() <= 1 {
            break;
        }
        sum += &term;
        k += 1;
    }
    for _ in 0..HALVINGS {
        sum = (&sum * &sum) >> w;
    }
    sum >> HALVINGS
}

/// `exp(x) - 1` in fixed point for `|x| < 1/2`, keeping relative accuracy.
fn exp_m1_series(x: &BigInt, frac_bits: u64) -> BigInt {
    let mut term = x.clone();
    let mut sum = x.clone();
    let mut k: u32 = 2;
    loop {
        term = ((&term * x) >> frac_bits) / BigInt::from(k);
        if term.magnitude().bits() <= 1 {
            break;
        }
        sum += &term;
        k += 1;
    }
    sum
}

impl<const BITS: u32> Real for Precise<BITS> {
    fn precision_bits() -> u32 {
        BITS
    }

    fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "cannot convert non-finite {x} to Precise");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Self::from_parts(negative, BigUint::from(mant), exp)
    }

    fn from_i128(x: i128) -> Self {
        Self::from_bigint(BigInt::from(x), 0)
    }

    fn to_f64(&self) -> f64 {
        if self.mag.is_zero() {
            return 0.0;
        }
        let drop = u64::from(BITS).saturating_sub(64);
        let top = (&self.mag >> drop).to_u64().expect("64-bit window");
        let mut value = top as f64;
        let mut e = self.exp + drop as i64;
        while e > 0 {
            let step = e.min(1000);
            value *= 2f64.powi(step as i32);
            e -= step;
        }
        while e < 0 {
            let step = (-e).min(1000);
            value *= 2f64.powi(-(step as i32));
            e += step;
        }
        if self.negative {
            -value
        } else {
            value
        }
    }

    fn pi() -> Self {
        let w = Self::work_bits();
        Self::from_fixed(pi_fixed(w), w)
    }

    fn ln_2() -> Self {
        let w = Self::work_bits();
        Self::from_fixed(ln2_fixed(w), w)
    }

    fn exp(&self) -> Self {
        if self.mag.is_zero() {
            return Self::one();
        }
        let approx = self.to_f64();
        let n = (approx / std::f64::consts::LN_2).round();
        assert!(n.abs() < 1e15, "exp argument {approx} out of range");
        let n = n as i64;
        let n_bits = 64 - n.unsigned_abs().leading_zeros() as u64;
        let w = Self::work_bits() + n_bits;
        let r = self.to_fixed(w) - ln2_fixed(w) * BigInt::from(n);
        Self::from_fixed(exp_fixed_small(&r, w), w).mul_pow2(n)
    }

    fn exp_m1(&self) -> Self {
        if self.mag.is_zero() {
            return Self::zero();
        }
        let e = self.magnitude_exponent();
        if e > -1 {
            return self.exp() - Self::one();
        }
        let w = Self::work_bits() + (-e) as u64;
        Self::from_fixed(exp_m1_series(&self.to_fixed(w), w), w)
    }

    fn ln(&self) -> Self {
        assert!(!self.negative && !self.mag.is_zero(), "ln of non-positive value");
        let w = Self::work_bits();
        // self = m · 2^e2 with m in [1/sqrt2, sqrt2)
        let mut e2 = self.magnitude_exponent();
        let mut m_fixed = &self.mag << w >> u64::from(BITS);
        let m_fixed_sq_half = BigUint::one() << (2 * w - 1);
        if &m_fixed * &m_fixed < m_fixed_sq_half {
            m_fixed <<= 1u32;
            e2 -= 1;
        }
        let m = BigInt::from(m_fixed);
        let one = BigInt::one() << w;
        let z = ((&m - &one) << w) / (&m + &one);
        let z2 = (&z * &z) >> w;
        let mut term = z.clone();
        let mut sum = z;
        let mut j: u64 = 1;
        loop {
            term = (&term * &z2) >> w;
            if term.magnitude().bits() <= 1 {
                break;
            }
            sum += &term / BigInt::from(2 * j + 1);
            j += 1;
        }
        let w2 = w + 64;
        let total = (sum << 65u32) + ln2_fixed(w2) * BigInt::from(e2);
        Self::from_fixed(total, w2)
    }

    fn sqrt(&self) -> Self {
        assert!(!self.negative, "sqrt of negative value");
        if self.mag.is_zero() {
            return Self::zero();
        }
        let mut shift = i64::from(BITS) + 2;
        if (self.exp - shift).is_odd() {
            shift += 1;
        }
        let root = (&self.mag << shift as u64).sqrt();
        Self::from_parts(false, root, (self.exp - shift) / 2)
    }
}

// --- num-traits plumbing ---------------------------------------------------

impl<const BITS: u32> Zero for Precise<BITS> {
    fn zero() -> Self {
        Self { negative: false, mag: BigUint::zero(), exp: 0 }
    }
    fn is_zero(&self) -> bool {
        self.mag.is_zero()
    }
}

impl<const BITS: u32> One for Precise<BITS> {
    fn one() -> Self {
        Self::from_parts(false, BigUint::one(), 0)
    }
}

impl<const BITS: u32> PartialEq for Precise<BITS> {
    fn eq(&self, other: &Self) -> bool {
        self.negative == other.negative && self.exp == other.exp && self.mag == other.mag
    }
}

impl<const BITS: u32> PartialOrd for Precise<BITS> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let sign = |x: &Self| -> i8 {
            if x.mag.is_zero() {
                0
            } else if x.negative {
                -1
            } else {
                1
            }
        };
        let (sa, sb) = (sign(self), sign(other));
        if sa != sb || sa == 0 {
            return Some(sa.cmp(&sb));
        }
        let by_mag = self.exp.cmp(&other.exp).then_with(|| self.mag.cmp(&other.mag));
        Some(if sa > 0 { by_mag } else { by_mag.reverse() })
    }
}

impl<const BITS: u32> Neg for Precise<BITS> {
    type Output = Self;
    fn neg(mut self) -> Self {
        if !self.mag.is_zero() {
            self.negative = !self.negative;
        }
        self
    }
}

impl<const BITS: u32> Add for Precise<BITS> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.mag.is_zero() {
            return rhs;
        }
        if rhs.mag.is_zero() {
            return self;
        }
        let (hi, lo) = if self.exp >= rhs.exp { (self, rhs) } else { (rhs, self) };
        let gap = (hi.exp - lo.exp) as u64;
        if gap > u64::from(BITS) + 2 {
            return hi;
        }
        let sum = (hi.signed_mag() << gap) + lo.signed_mag();
        Self::from_bigint(sum, lo.exp)
    }
}

impl<const BITS: u32> Sub for Precise<BITS> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const BITS: u32> Mul for Precise<BITS> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.mag.is_zero() || rhs.mag.is_zero() {
            return Self::zero();
        }
        Self::from_parts(self.negative != rhs.negative, self.mag * rhs.mag, self.exp + rhs.exp)
    }
}

impl<const BITS: u32> Div for Precise<BITS> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.mag.is_zero(), "Precise division by zero");
        if self.mag.is_zero() {
            return Self::zero();
        }
        let extra = u64::from(BITS) + 2;
        let q = (self.mag << extra) / rhs.mag;
        Self::from_parts(self.negative != rhs.negative, q, self.exp - rhs.exp - extra as i64)
    }
}

impl<const BITS: u32> Rem for Precise<BITS> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        let q = (self.clone() / rhs.clone()).trunc();
        self - q * rhs
    }
}

impl<const BITS: u32> Num for Precise<BITS> {
    type FromStrRadixErr = ParsePreciseError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err(ParsePreciseError(format!("radix {radix} unsupported for {s}")));
        }
        Self::parse_decimal(s)
    }
}

impl<const BITS: u32> std::str::FromStr for Precise<BITS> {
    type Err = ParsePreciseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_decimal(s)
    }
}

impl<const BITS: u32> fmt::Debug for Precise<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Precise<{BITS}>({})", self.to_decimal(20))
    }
}

impl<const BITS: u32> fmt::Display for Precise<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(((f64::from(BITS)) * std::f64::consts::LOG10_2) as usize);
        f.write_str(&self.to_decimal(digits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type P = Precise<256>;

    const PI_DIGITS: &str = "3.14159265358979323846264338327950288419716939937510582097494459";
    const LN2_DIGITS: &str = "0.69314718055994530941723212145817656807550013436025525412068000949";

    fn rel_err(a: &P, b: &P) -> f64 {
        ((a.clone() - b.clone()) / b.clone()).to_f64().abs()
    }

    #[test]
    fn constants_match_reference_digits() {
        let pi: P = PI_DIGITS.parse().unwrap();
        let ln2: P = LN2_DIGITS.parse().unwrap();
        assert!(rel_err(&P::pi(), &pi) < 1e-60);
        assert!(rel_err(&P::ln_2(), &ln2) < 1e-60);
    }

    #[test]
    fn exact_conversions() {
        for x in [1.0, -2.5, 1e-300, 6.02e23, 0.1, f64::MIN_POSITIVE / 8.0] {
            assert_eq!(P::from_f64(x).to_f64(), x);
        }
        assert_eq!(P::from_i128(i128::MAX).to_f64(), i128::MAX as f64);
        assert!(P::from_f64(0.0).is_zero());
    }

    #[test]
    fn exp_ln_inverse_at_full_width() {
        let x: P = "12.345678901234567890123456789".parse().unwrap();
        let back = x.ln().exp();
        assert!(rel_err(&back, &x) < 1e-70);
        let y: P = "-3.75".parse().unwrap();
        assert!(rel_err(&y.exp().ln(), &y) < 1e-70);
    }

    #[test]
    fn exp_m1_keeps_relative_accuracy() {
        let x: P = "1e-40".parse().unwrap();
        let em1 = x.exp_m1();
        let expect = x.clone() + x.clone() * x.clone() / P::from_f64(2.0);
        assert!(rel_err(&em1, &expect) < 1e-70);
    }

    #[test]
    fn sqrt_two_squared() {
        let two = P::from_f64(2.0);
        let r = two.sqrt();
        assert!(rel_err(&(r.clone() * r), &two) < 1e-74);
    }

    #[test]
    fn cancellation_survives_where_f64_fails() {
        let big = P::from_f64(1e30);
        let tiny = P::from_f64(1e-30);
        let diff = (big.clone() + tiny.clone()) - big;
        assert!(rel_err(&diff, &tiny) < 1e-15);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(P::from_f64(1.5).to_decimal(3), "1.50e0");
        assert_eq!(P::from_f64(-0.00125).to_decimal(2), "-1.3e-3");
        assert_eq!(P::pi().to_decimal(10), "3.141592654e0");
    }

    #[test]
    fn ordering_and_rem() {
        let a = P::from_f64(7.5);
        let b = P::from_f64(2.0);
        assert!(a > b && -a.clone() < -b.clone());
        assert_eq!((a % b).to_f64(), 1.5);
        assert_eq!(P::from_f64(-7.9).trunc().to_f64(), -7.0);
    }

    proptest! {
        #[test]
        fn arithmetic_agrees_with_f64(a in -1e6f64..1e6, b in 0.001f64..1e3) {
            let (pa, pb) = (P::from_f64(a), P::from_f64(b));
            prop_assert_eq!((pa.clone() + pb.clone()).to_f64(), a + b);
            prop_assert_eq!((pa.clone() * pb.clone()).to_f64(), a * b);
            prop_assert_eq!((pa.clone() / pb.clone()).to_f64(), a / b);
            prop_assert!(((pb.ln()).to_f64() - b.ln()).abs() <= 1e-15 * b.ln().abs().max(1.0));
            let x = a / 1e5;
            let e = P::from_f64(x).exp().to_f64();
            prop_assert!((e - x.exp()).abs() <= 4e-16 * e);
            prop_assert!(Real::abs(&pa) >= P::zero());
            prop_assert!((pb.sqrt().to_f64() - b.sqrt()).abs() <= 2e-16 * b.sqrt());
        }
    }
}
