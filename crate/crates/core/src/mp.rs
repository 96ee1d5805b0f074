//! Multiprecision real and complex scalars backed by MPFR.
//!
//! Every value carries its own mantissa width. Binary operations produce a
//! result at the wider of the two operand precisions, so mixing a 53-bit
//! constant into a 512-bit computation never silently truncates it.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rug::float::{Constant, Round};
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mantissa width, in bits, used for moment and basis computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Precision(u32);

impl Precision {
    /// IEEE double mantissa.
    pub const DOUBLE: Precision = Precision(53);
    pub const P128: Precision = Precision(128);
    pub const P256: Precision = Precision(256);
    pub const P512: Precision = Precision(512);
    pub const P1024: Precision = Precision(1024);

    /// Widths accepted on the command line and in file headers.
    pub const SUPPORTED: [u32; 5] = [53, 128, 256, 512, 1024];

    pub fn new(bits: u32) -> Result<Self> {
        if Self::SUPPORTED.contains(&bits) {
            Ok(Precision(bits))
        } else {
            Err(Error::Precondition(format!(
                "unsupported precision {bits} bits (expected one of {:?})",
                Self::SUPPORTED
            )))
        }
    }

    /// Any width MPFR can handle; used internally for guard digits.
    pub fn custom(bits: u32) -> Self {
        Precision(bits.max(24))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Unit roundoff 2^(1-bits), floored at the smallest normal f64 so that
    /// tolerances derived from it stay representable.
    pub fn epsilon(self) -> f64 {
        let e = 1 - self.0 as i32;
        if e <= f64::MIN_EXP - 1 {
            f64::MIN_POSITIVE
        } else {
            2f64.powi(e)
        }
    }

    /// Default working precision for a basis of degree `n`.
    ///
    /// Inner products taken through the moment matrix lose roughly one bit
    /// per degree on well separated archipelagos (more on wide ones), so the
    /// schedule grows linearly and snaps up to a supported width.
    pub fn recommended_for_degree(n: usize) -> Self {
        let want = 64 + 4 * n as u32;
        let bits = Self::SUPPORTED
            .iter()
            .copied()
            .find(|&b| b >= want)
            .unwrap_or(1024);
        Precision(bits)
    }

    /// The next supported width up, if any.
    pub fn escalate(self) -> Option<Self> {
        Self::SUPPORTED
            .iter()
            .copied()
            .find(|&b| b > self.0)
            .map(Precision)
    }
}

impl TryFrom<u32> for Precision {
    type Error = Error;
    fn try_from(bits: u32) -> Result<Self> {
        Precision::new(bits)
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        p.0
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Arbitrary precision real number.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct MpReal(Float);

impl MpReal {
    pub fn zero(prec: Precision) -> Self {
        MpReal(Float::new(prec.bits()))
    }

    pub fn one(prec: Precision) -> Self {
        MpReal(Float::with_val(prec.bits(), 1))
    }

    pub fn from_f64(x: f64, prec: Precision) -> Self {
        MpReal(Float::with_val(prec.bits(), x))
    }

    pub fn from_i64(x: i64, prec: Precision) -> Self {
        MpReal(Float::with_val(prec.bits(), x))
    }

    /// `num / den`, rounded once.
    pub fn ratio(num: i64, den: i64, prec: Precision) -> Self {
        let n = Float::with_val(prec.bits() + 64, num);
        MpReal(Float::with_val(prec.bits(), n / den))
    }

    pub fn pi(prec: Precision) -> Self {
        MpReal(Float::with_val(prec.bits(), Constant::Pi))
    }

    pub fn from_float(f: Float) -> Self {
        MpReal(f)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn precision(&self) -> Precision {
        Precision::custom(self.0.prec())
    }

    /// Re-round to a different width.
    pub fn with_precision(&self, prec: Precision) -> Self {
        MpReal(Float::with_val(prec.bits(), &self.0))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    pub fn abs(&self) -> Self {
        MpReal(self.0.clone().abs())
    }

    pub fn sqrt(&self) -> Self {
        MpReal(self.0.clone().sqrt())
    }

    pub fn ln(&self) -> Self {
        MpReal(self.0.clone().ln())
    }

    pub fn exp(&self) -> Self {
        MpReal(self.0.clone().exp())
    }

    pub fn sin(&self) -> Self {
        MpReal(self.0.clone().sin())
    }

    pub fn cos(&self) -> Self {
        MpReal(self.0.clone().cos())
    }

    pub fn atan2(&self, x: &MpReal) -> Self {
        let p = self.0.prec().max(x.0.prec());
        MpReal(Float::with_val(p, &self.0).atan2(&x.0))
    }

    pub fn powi(&self, e: i32) -> Self {
        MpReal(self.0.clone().pow(e))
    }

    pub fn powf(&self, e: &MpReal) -> Self {
        let p = self.0.prec().max(e.0.prec());
        MpReal(Float::with_val(p, &self.0).pow(&e.0))
    }

    /// Multiply by 2^k exactly.
    pub fn mul_pow2(&self, k: i32) -> Self {
        let mut f = self.0.clone();
        f <<= k;
        MpReal(f)
    }

    pub fn max_ref<'a>(&'a self, other: &'a MpReal) -> &'a MpReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn parse(s: &str, prec: Precision) -> Result<Self> {
        let parsed = Float::parse(s.trim())
            .map_err(|e| Error::Input(format!("cannot parse number {s:?}: {e}")))?;
        Ok(MpReal(Float::with_val_round(prec.bits(), parsed, Round::Nearest).0))
    }

    /// Decimal string with enough digits to read back bit-for-bit.
    pub fn to_decimal(&self) -> String {
        if self.0.is_zero() {
            return if self.0.is_sign_negative() { "-0".into() } else { "0".into() };
        }
        // MPFR's own choice of digit count already guarantees exact round
        // trips at the value's precision.
        self.0.to_string_radix(10, None)
    }

    /// Fused accumulate `self += a * b` with a single rounding.
    pub fn add_mul(&mut self, a: &MpReal, b: &MpReal) {
        self.0 += &a.0 * &b.0;
    }

    /// Fused accumulate `self -= a * b`.
    pub fn sub_mul(&mut self, a: &MpReal, b: &MpReal) {
        self.0 -= &a.0 * &b.0;
    }
}

impl fmt::Debug for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.to_string_radix(10, Some(20)))
    }
}

impl fmt::Display for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl PartialEq<f64> for MpReal {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for MpReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

fn wider(a: &Float, b: &Float) -> u32 {
    a.prec().max(b.prec())
}

macro_rules! real_binop {
    ($tr:ident, $method:ident, $assign_tr:ident, $assign:ident, $op:tt) => {
        impl $tr<&MpReal> for &MpReal {
            type Output = MpReal;
            fn $method(self, rhs: &MpReal) -> MpReal {
                MpReal(Float::with_val(wider(&self.0, &rhs.0), &self.0 $op &rhs.0))
            }
        }
        impl $tr<MpReal> for &MpReal {
            type Output = MpReal;
            fn $method(self, rhs: MpReal) -> MpReal {
                self $op &rhs
            }
        }
        impl $tr<&MpReal> for MpReal {
            type Output = MpReal;
            fn $method(mut self, rhs: &MpReal) -> MpReal {
                if self.0.prec() >= rhs.0.prec() {
                    self.0.$assign(&rhs.0);
                    self
                } else {
                    &self $op rhs
                }
            }
        }
        impl $tr<MpReal> for MpReal {
            type Output = MpReal;
            fn $method(self, rhs: MpReal) -> MpReal {
                self $op &rhs
            }
        }
        impl $tr<f64> for &MpReal {
            type Output = MpReal;
            fn $method(self, rhs: f64) -> MpReal {
                MpReal(Float::with_val(self.0.prec(), &self.0 $op rhs))
            }
        }
        impl $tr<f64> for MpReal {
            type Output = MpReal;
            fn $method(mut self, rhs: f64) -> MpReal {
                self.0.$assign(rhs);
                self
            }
        }
        impl $assign_tr<&MpReal> for MpReal {
            fn $assign(&mut self, rhs: &MpReal) {
                if self.0.prec() < rhs.0.prec() {
                    self.0.set_prec(rhs.0.prec());
                }
                self.0.$assign(&rhs.0);
            }
        }
        impl $assign_tr<MpReal> for MpReal {
            fn $assign(&mut self, rhs: MpReal) {
                self.$assign(&rhs);
            }
        }
    };
}

real_binop!(Add, add, AddAssign, add_assign, +);
real_binop!(Sub, sub, SubAssign, sub_assign, -);
real_binop!(Mul, mul, MulAssign, mul_assign, *);
real_binop!(Div, div, DivAssign, div_assign, /);

impl Neg for MpReal {
    type Output = MpReal;
    fn neg(self) -> MpReal {
        MpReal(-self.0)
    }
}

impl Neg for &MpReal {
    type Output = MpReal;
    fn neg(self) -> MpReal {
        MpReal(Float::with_val(self.0.prec(), -&self.0))
    }
}

/// Arbitrary precision complex number as a pair of [`MpReal`].
#[derive(Clone, PartialEq)]
pub struct MpComplex {
    pub re: MpReal,
    pub im: MpReal,
}

impl MpComplex {
    pub fn new(re: MpReal, im: MpReal) -> Self {
        MpComplex { re, im }
    }

    pub fn zero(prec: Precision) -> Self {
        MpComplex::new(MpReal::zero(prec), MpReal::zero(prec))
    }

    pub fn one(prec: Precision) -> Self {
        MpComplex::new(MpReal::one(prec), MpReal::zero(prec))
    }

    pub fn from_real(re: MpReal) -> Self {
        let p = re.precision();
        MpComplex::new(re, MpReal::zero(p))
    }

    pub fn from_c64(z: Complex64, prec: Precision) -> Self {
        MpComplex::new(MpReal::from_f64(z.re, prec), MpReal::from_f64(z.im, prec))
    }

    pub fn from_f64(re: f64, im: f64, prec: Precision) -> Self {
        MpComplex::new(MpReal::from_f64(re, prec), MpReal::from_f64(im, prec))
    }

    /// e^{iθ}.
    pub fn cis(theta: &MpReal) -> Self {
        let p = theta.0.prec();
        let (s, c) = theta.0.clone().sin_cos(Float::new(p));
        MpComplex::new(MpReal(c), MpReal(s))
    }

    pub fn precision(&self) -> Precision {
        Precision::custom(self.re.0.prec().max(self.im.0.prec()))
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        MpComplex::new(self.re.with_precision(prec), self.im.with_precision(prec))
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(&self) -> Self {
        MpComplex::new(self.re.clone(), -&self.im)
    }

    pub fn norm_sqr(&self) -> MpReal {
        let mut s = &self.re * &self.re;
        s.add_mul(&self.im, &self.im);
        s
    }

    pub fn abs(&self) -> MpReal {
        MpReal(Float::with_val(self.precision().bits(), self.re.0.hypot_ref(&self.im.0)))
    }

    pub fn arg(&self) -> MpReal {
        self.im.atan2(&self.re)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn scale(&self, s: &MpReal) -> Self {
        MpComplex::new(&self.re * s, &self.im * s)
    }

    pub fn mul_pow2(&self, k: i32) -> Self {
        MpComplex::new(self.re.mul_pow2(k), self.im.mul_pow2(k))
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Self {
        let r = self.abs();
        if r.is_zero() {
            return self.clone();
        }
        // sqrt((r + |re|)/2) on the larger component avoids cancellation.
        let t = ((&r + &self.re.abs()) * 0.5).sqrt();
        if !self.re.is_sign_negative() {
            let im = &self.im / (&t * 2.0);
            MpComplex::new(t, im)
        } else {
            let re = &self.im.abs() / (&t * 2.0);
            let im = if self.im.is_sign_negative() { -t } else { t };
            MpComplex::new(re, im)
        }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        MpComplex::new(self.abs().ln(), self.arg())
    }

    pub fn exp(&self) -> Self {
        let m = self.re.exp();
        MpComplex::cis(&self.im).scale(&m)
    }

    /// Principal power `self^e` for real `e`.
    pub fn powf(&self, e: &MpReal) -> Self {
        if self.is_zero() {
            return MpComplex::zero(self.precision());
        }
        let r = self.abs().powf(e);
        let th = &self.arg() * e;
        MpComplex::cis(&th).scale(&r)
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut acc = MpComplex::one(self.precision());
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Fused `self += a * b`.
    pub fn add_mul(&mut self, a: &MpComplex, b: &MpComplex) {
        self.re.add_mul(&a.re, &b.re);
        self.re.sub_mul(&a.im, &b.im);
        self.im.add_mul(&a.re, &b.im);
        self.im.add_mul(&a.im, &b.re);
    }

    /// Fused `self -= a * b`.
    pub fn sub_mul(&mut self, a: &MpComplex, b: &MpComplex) {
        self.re.sub_mul(&a.re, &b.re);
        self.re.add_mul(&a.im, &b.im);
        self.im.sub_mul(&a.re, &b.im);
        self.im.sub_mul(&a.im, &b.re);
    }

    /// Fused `self += conj(a) * b`.
    pub fn add_conj_mul(&mut self, a: &MpComplex, b: &MpComplex) {
        self.re.add_mul(&a.re, &b.re);
        self.re.add_mul(&a.im, &b.im);
        self.im.add_mul(&a.re, &b.im);
        self.im.sub_mul(&a.im, &b.re);
    }
}

impl fmt::Debug for MpComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.re, self.im)
    }
}

impl Add<&MpComplex> for &MpComplex {
    type Output = MpComplex;
    fn add(self, rhs: &MpComplex) -> MpComplex {
        MpComplex::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub<&MpComplex> for &MpComplex {
    type Output = MpComplex;
    fn sub(self, rhs: &MpComplex) -> MpComplex {
        MpComplex::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul<&MpComplex> for &MpComplex {
    type Output = MpComplex;
    fn mul(self, rhs: &MpComplex) -> MpComplex {
        let mut re = &self.re * &rhs.re;
        re.sub_mul(&self.im, &rhs.im);
        let mut im = &self.re * &rhs.im;
        im.add_mul(&self.im, &rhs.re);
        MpComplex::new(re, im)
    }
}

impl Div<&MpComplex> for &MpComplex {
    type Output = MpComplex;
    fn div(self, rhs: &MpComplex) -> MpComplex {
        let d = rhs.norm_sqr();
        let mut re = &self.re * &rhs.re;
        re.add_mul(&self.im, &rhs.im);
        let mut im = &self.im * &rhs.re;
        im.sub_mul(&self.re, &rhs.im);
        MpComplex::new(re / &d, im / &d)
    }
}

macro_rules! complex_owned_ops {
    ($tr:ident, $method:ident, $assign_tr:ident, $assign:ident) => {
        impl $tr<MpComplex> for MpComplex {
            type Output = MpComplex;
            fn $method(self, rhs: MpComplex) -> MpComplex {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&MpComplex> for MpComplex {
            type Output = MpComplex;
            fn $method(self, rhs: &MpComplex) -> MpComplex {
                (&self).$method(rhs)
            }
        }
        impl $tr<MpComplex> for &MpComplex {
            type Output = MpComplex;
            fn $method(self, rhs: MpComplex) -> MpComplex {
                self.$method(&rhs)
            }
        }
        impl $assign_tr<&MpComplex> for MpComplex {
            fn $assign(&mut self, rhs: &MpComplex) {
                *self = (&*self).$method(rhs);
            }
        }
    };
}

complex_owned_ops!(Add, add, AddAssign, add_assign);
complex_owned_ops!(Sub, sub, SubAssign, sub_assign);
complex_owned_ops!(Mul, mul, MulAssign, mul_assign);
complex_owned_ops!(Div, div, DivAssign, div_assign);

impl Neg for &MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        MpComplex::new(-&self.re, -&self.im)
    }
}

impl Neg for MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        MpComplex::new(-self.re, -self.im)
    }
}

/// `Σ a_i b_i` with fused accumulation.
pub fn dot(a: &[MpComplex], b: &[MpComplex], prec: Precision) -> MpComplex {
    let mut acc = MpComplex::zero(prec);
    for (x, y) in a.iter().zip(b) {
        acc.add_mul(x, y);
    }
    acc
}

/// Binomial coefficient C(n, k), exact before the final rounding.
pub fn binomial(n: u64, k: u64, prec: Precision) -> MpReal {
    if k > n {
        return MpReal::zero(prec);
    }
    let i = rug::Integer::from(rug::Integer::binomial_u(n as u32, k as u32));
    MpReal(Float::with_val(prec.bits(), i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_stays_normal() {
        assert_eq!(Precision::DOUBLE.epsilon(), f64::EPSILON);
        assert_eq!(Precision::P512.epsilon(), 2f64.powi(-511));
        assert_eq!(Precision::P1024.epsilon(), f64::MIN_POSITIVE);
        assert_eq!(Precision::custom(1100).epsilon(), f64::MIN_POSITIVE);
    }

    #[test]
    fn decimal_round_trip_is_exact() {
        for bits in Precision::SUPPORTED {
            let p = Precision::new(bits).unwrap();
            let x = MpReal::pi(p) / MpReal::from_i64(7, p);
            let y = MpReal::parse(&x.to_decimal(), p).unwrap();
            assert!(x == y, "{bits}");
            assert_eq!(x.as_float().prec(), y.as_float().prec());
        }
    }

    #[test]
    fn mixed_precision_widens() {
        let a = MpReal::from_f64(1.0, Precision::DOUBLE);
        let b = MpReal::pi(Precision::P256);
        assert_eq!((&a + &b).precision(), Precision::P256);
        assert_eq!((a + &b).precision(), Precision::P256);
    }

    #[test]
    fn complex_sqrt_branches() {
        let p = Precision::P128;
        for (re, im) in [(4.0, 0.0), (-4.0, 0.0), (0.0, 2.0), (-3.0, -4.0), (1e-3, -7.0)] {
            let z = MpComplex::from_f64(re, im, p);
            let s = z.sqrt();
            let back = &s * &s;
            assert!((&back - &z).abs().to_f64() < 1e-30, "{re} {im}");
            assert!(s.re.to_f64() >= 0.0);
            let want = Complex64::new(re, im).sqrt();
            assert!((s.to_c64() - want).norm() < 1e-14);
        }
    }

    #[test]
    fn powf_matches_f64() {
        let p = Precision::P128;
        let z = Complex64::new(1.3, -0.4);
        let got = MpComplex::from_c64(z, p).powf(&MpReal::ratio(2, 3, p)).to_c64();
        assert!((got - z.powf(2.0 / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn binomials_are_exact() {
        let p = Precision::P128;
        assert_eq!(binomial(10, 3, p).to_f64(), 120.0);
        assert_eq!(binomial(3, 5, p).to_f64(), 0.0);
    }

    #[test]
    fn recommended_schedule_is_monotone() {
        let mut last = 0;
        for n in 0..300 {
            let b = Precision::recommended_for_degree(n).bits();
            assert!(b >= last);
            last = b;
        }
        assert_eq!(Precision::recommended_for_degree(10).bits(), 128);
    }
}
