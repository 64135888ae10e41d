//! Extended-range complex numbers.
//!
//! A [`ScaledComplex`] stores a double-precision complex mantissa together
//! with a 64-bit binary exponent. Products of a million factors of modulus
//! well below one stay representable, and differences of two such products
//! can still be formed by exponent alignment.

use std::fmt;
use std::ops::{Mul, Neg};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Exponent gap beyond which the smaller operand of an addition is absorbed.
pub const ABSORPTION_GAP: i64 = 128;

/// `mantissa * 2^exp2`, with `0.5 <= |mantissa| < 1` or canonical zero.
#[derive(Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScaledComplex {
    mantissa: Complex64,
    exp2: i64,
}

impl fmt::Debug for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} + {}i) * 2^{}",
            self.mantissa.re, self.mantissa.im, self.exp2
        )
    }
}

impl Default for ScaledComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

/// Splits a finite, nonzero, positive `x` into `(m, e)` with `x = m * 2^e`
/// and `0.5 <= m < 1`.
fn frexp(x: f64) -> (f64, i64) {
    debug_assert!(x.is_finite() && x > 0.0);
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal: lift into the normal range first
        let (m, e) = frexp(x * f64::from_bits(0x43f0_0000_0000_0000)); // 2^64
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, biased - 1022)
}

/// `x * 2^k`, exact whenever the result is a normal number.
pub(crate) fn ldexp(mut x: f64, mut k: i64) -> f64 {
    const STEP: i64 = 1000;
    while k > STEP {
        x *= f64::from_bits(((1023 + STEP) as u64) << 52);
        k -= STEP;
        if x.is_infinite() {
            return x;
        }
    }
    while k < -STEP {
        x *= f64::from_bits(((1023 - STEP) as u64) << 52);
        k += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * f64::from_bits(((1023 + k) as u64) << 52)
}

impl ScaledComplex {
    pub const ZERO: Self = Self {
        mantissa: Complex64::new(0.0, 0.0),
        exp2: 0,
    };

    pub const ONE: Self = Self {
        mantissa: Complex64::new(0.5, 0.0),
        exp2: 1,
    };

    /// Normalizes `m * 2^e` with `m` finite. Saturates the exponent instead
    /// of failing; callers that need overflow detection check beforehand.
    #[inline]
    fn normalized(m: Complex64, e: i64) -> Self {
        let n = m.norm_sqr();
        if n.is_normal() {
            // n = f * 2^en with f in [0.5, 1); scaling m by 2^-k with
            // k = ceil(en / 2) puts |m|^2 in [0.25, 1)
            let (_, en) = frexp(n);
            let k = (en + 1).div_euclid(2);
            let out = Self {
                mantissa: Complex64::new(ldexp(m.re, -k), ldexp(m.im, -k)),
                exp2: e.saturating_add(k),
            };
            debug_assert!(out.is_normalized(), "denormalized {out:?}");
            return out;
        }
        if m.re == 0.0 && m.im == 0.0 {
            return Self::ZERO;
        }
        // |m|^2 under- or overflowed: rescale by the larger component first
        let (_, shift) = frexp(m.re.abs().max(m.im.abs()));
        Self::normalized(
            Complex64::new(ldexp(m.re, -shift), ldexp(m.im, -shift)),
            e.saturating_add(shift),
        )
    }

    /// Converts a native complex number.
    pub fn from_complex(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::normalized(z, 0))
    }

    pub fn from_real(x: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// Builds a value directly from parts, normalizing them.
    pub fn from_parts(mantissa: Complex64, exp2: i64) -> Result<Self> {
        if !(mantissa.re.is_finite() && mantissa.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let (_, shift) = if mantissa == Complex64::new(0.0, 0.0) {
            (0.0, 0)
        } else {
            frexp(mantissa.re.abs().max(mantissa.im.abs()))
        };
        exp2.checked_add(shift + 1).ok_or(Error::ExponentOverflow)?;
        Ok(Self::normalized(mantissa, exp2))
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn exp2(&self) -> i64 {
        self.exp2
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    /// Checks the representation invariant, `0.25 <= |mantissa|^2 < 1`.
    pub fn is_normalized(&self) -> bool {
        if self.is_zero() {
            return self.exp2 == 0;
        }
        (0.25..1.0).contains(&self.mantissa.norm_sqr())
    }

    /// Multiplication that reports exponent overflow.
    pub fn checked_mul(self, rhs: Self) -> Result<Self> {
        if self.is_zero() || rhs.is_zero() {
            return Ok(Self::ZERO);
        }
        let e = self
            .exp2
            .checked_add(rhs.exp2)
            .ok_or(Error::ExponentOverflow)?;
        Ok(Self::normalized(self.mantissa * rhs.mantissa, e))
    }

    /// Multiplies by a native complex factor.
    #[inline]
    pub fn mul_complex(self, z: Complex64) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::normalized(self.mantissa * z, self.exp2)
    }

    /// Addition by exponent alignment. An operand more than
    /// [`ABSORPTION_GAP`] binary orders below the other is dropped.
    pub fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exp2 >= rhs.exp2 {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = big.exp2 - small.exp2;
        if gap > ABSORPTION_GAP {
            return big;
        }
        let aligned = Complex64::new(
            ldexp(small.mantissa.re, -gap),
            ldexp(small.mantissa.im, -gap),
        );
        Self::normalized(big.mantissa + aligned, big.exp2)
    }

    pub fn sub(self, rhs: Self) -> Self {
        self.add(-rhs)
    }

    pub fn conj(self) -> Self {
        Self {
            mantissa: self.mantissa.conj(),
            exp2: self.exp2,
        }
    }

    /// Real part as an extended-range value.
    pub fn re(self) -> Self {
        Self::normalized(Complex64::new(self.mantissa.re, 0.0), self.exp2)
    }

    /// `log10 |x|`; negative infinity for zero.
    pub fn log10_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mantissa.norm().log10() + self.exp2 as f64 * std::f64::consts::LOG10_2
    }

    /// `log2 |x|`; negative infinity for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mantissa.norm().log2() + self.exp2 as f64
    }

    /// Converts back to a native complex number, failing if the value does
    /// not fit. Values below the native range flush towards zero.
    pub fn to_complex(&self) -> Result<Complex64> {
        if self.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if self.exp2 > 1024 {
            return Err(Error::RangeOverflow);
        }
        let z = Complex64::new(
            ldexp(self.mantissa.re, self.exp2),
            ldexp(self.mantissa.im, self.exp2),
        );
        if z.re.is_finite() && z.im.is_finite() {
            Ok(z)
        } else {
            Err(Error::RangeOverflow)
        }
    }

    /// Like [`to_complex`](Self::to_complex) but saturates to infinity.
    pub fn to_complex_lossy(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let k = self.exp2.clamp(-1100, 1100);
        Complex64::new(ldexp(self.mantissa.re, k), ldexp(self.mantissa.im, k))
    }
}

impl Neg for ScaledComplex {
    type Output = Self;

    fn neg(self) -> Self {
        if self.is_zero() {
            return self;
        }
        Self {
            mantissa: -self.mantissa,
            exp2: self.exp2,
        }
    }
}

impl Mul for ScaledComplex {
    type Output = Self;

    /// Panics on exponent overflow; use [`ScaledComplex::checked_mul`] to
    /// handle it.
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("binary exponent overflow")
    }
}

impl std::ops::Add for ScaledComplex {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        ScaledComplex::add(self, rhs)
    }
}

impl std::ops::Sub for ScaledComplex {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        ScaledComplex::sub(self, rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_normalizes_to_half_times_two() {
        let x = ScaledComplex::from_real(1.0).unwrap();
        assert_eq!(x.mantissa(), c(0.5, 0.0));
        assert_eq!(x.exp2(), 1);
        assert_eq!(x, ScaledComplex::ONE);
    }

    #[test]
    fn zero_is_canonical() {
        let z = ScaledComplex::from_complex(c(0.0, -0.0)).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.exp2(), 0);
        assert!(z.is_normalized());
    }

    #[test]
    fn three_four_i() {
        let x = ScaledComplex::from_complex(c(3.0, 4.0)).unwrap();
        assert_eq!(x.mantissa().norm(), 0.625);
        assert_eq!(x.exp2(), 3);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            ScaledComplex::from_complex(c(f64::NAN, 0.0)),
            Err(Error::NonFinite)
        ));
        assert!(matches!(
            ScaledComplex::from_complex(c(0.0, f64::INFINITY)),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn subnormal_input() {
        let tiny = f64::from_bits(1); // 2^-1074
        let x = ScaledComplex::from_real(tiny).unwrap();
        assert_eq!(x.mantissa(), c(0.5, 0.0));
        assert_eq!(x.exp2(), -1073);
        assert_eq!(x.to_complex().unwrap().re, tiny);
    }

    #[test]
    fn multiply_by_zero_and_one() {
        let x = ScaledComplex::from_complex(c(-0.3, 0.7)).unwrap();
        assert!((x * ScaledComplex::ZERO).is_zero());
        assert_eq!(x * ScaledComplex::from_real(1.0).unwrap(), x);
    }

    #[test]
    fn million_halves() {
        let half = ScaledComplex::from_complex(c(0.5, 0.0)).unwrap();
        let mut acc = ScaledComplex::ONE;
        for _ in 0..1_000_000 {
            acc = acc * half;
        }
        assert_eq!(acc.mantissa(), c(0.5, 0.0));
        // 0.5 * 2^(exp2) = 2^-1e6
        assert_eq!(acc.exp2() - 1, -1_000_000);
        assert!(acc.is_normalized());
    }

    #[test]
    fn exponent_overflow() {
        let big = ScaledComplex::from_parts(c(0.5, 0.0), i64::MAX - 1).unwrap();
        assert!(matches!(big.checked_mul(big), Err(Error::ExponentOverflow)));
        assert!(matches!(
            ScaledComplex::from_parts(c(4.0, 0.0), i64::MAX),
            Err(Error::ExponentOverflow)
        ));
    }

    #[test]
    fn additive_identities() {
        let x = ScaledComplex::from_complex(c(1.25, -2.0)).unwrap();
        assert_eq!(x + ScaledComplex::ZERO, x);
        assert_eq!(ScaledComplex::ZERO + x, x);
        let one = ScaledComplex::from_real(1.0).unwrap();
        let minus_one = ScaledComplex::from_real(-1.0).unwrap();
        let sum = one + minus_one;
        assert!(sum.is_zero());
        assert_eq!(sum.exp2(), 0);
    }

    #[test]
    fn absorption_past_gap() {
        let one = ScaledComplex::from_real(1.0).unwrap();
        let tiny = ScaledComplex::from_real(2f64.powi(-200)).unwrap();
        assert_eq!(one + tiny, one);
        assert_eq!(tiny + one, one);
        // inside the gap the sum is formed normally
        let small = ScaledComplex::from_real(2f64.powi(-30)).unwrap();
        assert_eq!((one + small).to_complex().unwrap().re, 1.0 + 2f64.powi(-30));
    }

    #[test]
    fn log10_values() {
        assert_eq!(ScaledComplex::from_real(1.0).unwrap().log10_abs(), 0.0);
        assert!((ScaledComplex::from_real(10.0).unwrap().log10_abs() - 1.0).abs() < 1e-14);
        let half = ScaledComplex::from_real(0.5).unwrap();
        let mut acc = ScaledComplex::ONE;
        for _ in 0..100 {
            acc = acc * half;
        }
        let expected = -100.0 * 2f64.log10();
        assert!((acc.log10_abs() - expected).abs() < 1e-9);
        assert_eq!(ScaledComplex::ZERO.log10_abs(), f64::NEG_INFINITY);
    }

    #[test]
    fn to_complex_range() {
        let huge = ScaledComplex::from_parts(c(0.5, 0.0), 5000).unwrap();
        assert!(matches!(huge.to_complex(), Err(Error::RangeOverflow)));
        let tiny = ScaledComplex::from_parts(c(0.5, 0.0), -5000).unwrap();
        assert_eq!(tiny.to_complex().unwrap(), c(0.0, 0.0));
    }

    fn finite_complex() -> impl Strategy<Value = Complex64> {
        let part = prop_oneof![
            -1e6..1e6f64,
            (-1.0..1.0f64, -300i32..300).prop_map(|(m, e)| m * 2f64.powi(e)),
        ];
        (part.clone(), part).prop_map(|(re, im)| Complex64::new(re, im))
    }

    fn rel_err(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    proptest! {
        #[test]
        fn round_trip(z in finite_complex()) {
            let x = ScaledComplex::from_complex(z).unwrap();
            prop_assert!(x.is_normalized());
            let back = x.to_complex().unwrap();
            prop_assert!(rel_err(back, z) <= 2.0 * f64::EPSILON || back == z);
        }

        #[test]
        fn product_matches_native(z in finite_complex(), w in finite_complex()) {
            let native = z * w;
            prop_assume!(native.norm() > 1e-290 && native.norm() < 1e290);
            let x = ScaledComplex::from_complex(z).unwrap() * ScaledComplex::from_complex(w).unwrap();
            prop_assert!(x.is_normalized());
            prop_assert!(rel_err(x.to_complex().unwrap(), native) <= 4.0 * f64::EPSILON);
        }

        #[test]
        fn product_is_associative(a in finite_complex(), b in finite_complex(), d in finite_complex()) {
            let [x, y, z] = [a, b, d].map(|v| ScaledComplex::from_complex(v).unwrap());
            let left = (x * y) * z;
            let right = x * (y * z);
            prop_assert!(left.is_normalized() && right.is_normalized());
            if left.is_zero() || right.is_zero() {
                prop_assert_eq!(left.is_zero(), right.is_zero());
            } else {
                prop_assert_eq!(left.exp2(), right.exp2());
                prop_assert!(rel_err(left.mantissa(), right.mantissa()) <= 1e-12);
            }
        }

        #[test]
        fn sum_matches_native(z in finite_complex(), w in finite_complex()) {
            let x = ScaledComplex::from_complex(z).unwrap() + ScaledComplex::from_complex(w).unwrap();
            prop_assert!(x.is_normalized());
            let native = z + w;
            let scale = z.norm().max(w.norm());
            prop_assert!((x.to_complex().unwrap() - native).norm() <= 4.0 * f64::EPSILON * scale);
        }
    }
}
