//! Real scalar abstraction shared by every numerical routine.
//!
//! Coefficient extraction amplifies rounding noise like `(1 / r)^ν`, so the
//! pipeline is generic over the working precision. [`f64`] is used for cheap
//! evaluation and [`f256`] (237-bit significand) for coefficient extraction.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, Neg, SubAssign};

pub use f256::f256;
use num_complex::Complex;
use num_traits::Num;

/// Complex number over a working precision.
pub type C<R> = Complex<R>;

/// Operations required from a working-precision real type.
pub trait Real:
    Copy
    + Send
    + Sync
    + PartialOrd
    + Debug
    + Display
    + Num
    + num_traits::NumAssign
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    /// Human readable name, used in reports.
    const NAME: &'static str;
    /// Unit roundoff.
    fn epsilon() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn atan2(self, x: Self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn hypot(self, other: Self) -> Self;
    fn pi() -> Self;
    fn is_finite(self) -> bool;

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }
    fn two() -> Self {
        Self::one() + Self::one()
    }
    fn half() -> Self {
        Self::one() / Self::two()
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    const NAME: &'static str = "double";
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn hypot(self, other: Self) -> Self {
        f64::hypot(self, other)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn from_usize(n: usize) -> Self {
        n as f64
    }
}

impl Real for f256 {
    const NAME: &'static str = "extended";
    fn epsilon() -> Self {
        f256::EPSILON
    }
    fn from_f64(x: f64) -> Self {
        f256::from(x)
    }
    fn to_f64(self) -> f64 {
        f256_to_f64(self)
    }
    fn sqrt(self) -> Self {
        f256::sqrt(self)
    }
    fn abs(self) -> Self {
        f256::abs(&self)
    }
    fn sin(self) -> Self {
        f256::sin(&self)
    }
    fn cos(self) -> Self {
        f256::cos(&self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f256::sin_cos(&self)
    }
    fn atan2(self, x: Self) -> Self {
        f256::atan2(&self, &x)
    }
    fn ln(self) -> Self {
        f256::ln(&self)
    }
    fn exp(self) -> Self {
        f256::exp(&self)
    }
    fn powi(self, n: i32) -> Self {
        f256::powi(&self, n)
    }
    fn hypot(self, other: Self) -> Self {
        f256::hypot(self, other)
    }
    fn pi() -> Self {
        ::f256::consts::PI
    }
    fn is_finite(self) -> bool {
        f256::is_finite(self)
    }
    fn from_usize(n: usize) -> Self {
        f256::from(n as u64)
    }
    fn from_i64(n: i64) -> Self {
        f256::from(n)
    }
}

fn f256_to_f64(x: f256) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if !x.is_finite() {
        return if x > f256::ZERO { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    if x == f256::ZERO {
        return 0.0;
    }
    let (sign, exp, (hi, lo)) = x.as_sign_exp_signif();
    // Keep the leading 64 bits of the 256-bit significand so that the final
    // conversion rounds once.
    let lead = if hi != 0 { 256 - hi.leading_zeros() } else { 128 - lo.leading_zeros() } as i32;
    let shift = (lead - 64).max(0);
    let top: u128 = if shift == 0 {
        lo
    } else if shift >= 128 {
        hi >> (shift - 128)
    } else {
        (lo >> shift) | (hi << (128 - shift))
    };
    let sticky = if shift == 0 {
        false
    } else if shift >= 128 {
        lo != 0 || (hi & ((1u128 << (shift - 128)) - 1)) != 0
    } else {
        (lo & ((1u128 << shift) - 1)) != 0
    };
    let top = (top as u64) | sticky as u64;
    let mag = ldexp(top as f64, exp + shift);
    if sign == 1 {
        -mag
    } else {
        mag
    }
}

fn ldexp(mut m: f64, mut e: i32) -> f64 {
    while e > 0 {
        let step = e.min(1000);
        m *= 2f64.powi(step);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        m *= 2f64.powi(-step);
        e += step;
    }
    m
}

/// Parse a decimal literal exactly into the working precision.
pub fn parse_real<R: Real>(s: &str) -> R
where
    R: std::str::FromStr,
{
    s.parse().unwrap_or_else(|_| panic!("invalid real literal {s}"))
}

/// Convert a complex number between precisions.
pub fn cast<R: Real, S: Real>(z: C<R>) -> C<S> {
    C::new(S::from_f64(z.re.to_f64()), S::from_f64(z.im.to_f64()))
}

/// Modulus of a complex number.
pub fn cabs<R: Real>(z: C<R>) -> R {
    z.re.hypot(z.im)
}

/// Argument of a complex number.
pub fn carg<R: Real>(z: C<R>) -> R {
    z.im.atan2(z.re)
}

/// `r e^{iθ}`.
pub fn from_polar<R: Real>(r: R, theta: R) -> C<R> {
    let (s, c) = theta.sin_cos();
    C::new(r * c, r * s)
}

/// Principal complex logarithm.
pub fn cln<R: Real>(z: C<R>) -> C<R> {
    C::new(cabs(z).ln(), carg(z))
}

pub fn real<R: Real>(x: R) -> C<R> {
    C::new(x, R::zero())
}

pub fn one<R: Real>() -> C<R> {
    C::new(R::one(), R::zero())
}

pub fn zero<R: Real>() -> C<R> {
    C::new(R::zero(), R::zero())
}

pub fn imag_unit<R: Real>() -> C<R> {
    C::new(R::zero(), R::one())
}

/// Convert to a double-precision complex number.
pub fn to_c64<R: Real>(z: C<R>) -> C<f64> {
    C::new(z.re.to_f64(), z.im.to_f64())
}

/// Convert from a double-precision complex number.
pub fn from_c64<R: Real>(z: C<f64>) -> C<R> {
    C::new(R::from_f64(z.re), R::from_f64(z.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f256_round_trip_matches_f64() {
        for &x in &[1.0, -0.3, 1e-300, 5e-324, 1.7e308, 0.1, 2.0f64.powi(-60), 123456.789] {
            assert_eq!(f256::from(x).to_f64(), x, "{x}");
        }
    }

    #[test]
    fn f256_conversion_rounds_to_nearest() {
        let third = f256::ONE / f256::from(3.0);
        assert_eq!(third.to_f64(), 1.0 / 3.0);
        let tenth = f256::ONE / f256::from(10.0);
        assert_eq!(tenth.to_f64(), 0.1);
        assert_eq!((-::f256::consts::PI).to_f64(), -std::f64::consts::PI);
    }

    #[test]
    fn extended_transcendentals_agree_with_double() {
        let x = f256::from(0.7);
        assert!((Real::sin(x).to_f64() - 0.7f64.sin()).abs() < 1e-16);
        assert!((Real::ln(x).to_f64() - 0.7f64.ln()).abs() < 1e-16);
        assert!((Real::atan2(x, f256::from(-0.2)).to_f64() - 0.7f64.atan2(-0.2)).abs() < 1e-15);
        let e = <f256 as Real>::epsilon().to_f64();
        assert!(e < 1e-70);
    }

    #[test]
    fn complex_helpers() {
        let z = C::new(3.0f64, 4.0);
        assert_eq!(cabs(z), 5.0);
        let w = from_polar(2.0f64, 0.5);
        assert!((carg(w) - 0.5).abs() < 1e-15);
        let l = cln(C::new(-1.0f64, 0.0));
        assert!((l.im - std::f64::consts::PI).abs() < 1e-15);
    }
}
