//! Coefficient fields shared by the group algebra and bivariate measures.
//!
//! Floating complex numbers are the default. Gaussian rationals give exact
//! arithmetic whenever every character value involved is a fourth root of
//! unity, which covers the (ℤ/2)^k and ℤ/4 models used for exact identities.

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Exact complex numbers with rational real and imaginary parts.
pub type GaussQ = Complex<BigRational>;

pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn conj(&self) -> Self;

    /// `exp(2πi·k/n)` if representable in this field.
    fn root_of_unity(k: i64, n: i64) -> Option<Self>;

    fn from_i64(v: i64) -> Self;

    fn to_c64(&self) -> Complex64;

    /// |z|² as an element of the field.
    fn abs_sq(&self) -> Self {
        self.clone() * self.conj()
    }

    fn is_exact() -> bool;
}

impl Scalar for Complex64 {
    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn root_of_unity(k: i64, n: i64) -> Option<Self> {
        let r = k.rem_euclid(n);
        // exact values on the axes keep sums over characters free of noise
        if (4 * r) % n == 0 {
            return Some(match 4 * r / n {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            });
        }
        let theta = std::f64::consts::TAU * r as f64 / n as f64;
        Some(Complex64::new(theta.cos(), theta.sin()))
    }

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn is_exact() -> bool {
        false
    }
}

impl Scalar for GaussQ {
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn root_of_unity(k: i64, n: i64) -> Option<Self> {
        let r = k.rem_euclid(n);
        if (4 * r) % n != 0 {
            return None;
        }
        let (re, im) = match 4 * r / n {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        };
        Some(Complex::new(
            BigRational::from_integer(BigInt::from(re)),
            BigRational::from_integer(BigInt::from(im)),
        ))
    }

    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }

    fn to_c64(&self) -> Complex64 {
        use num_traits::ToPrimitive;
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn is_exact() -> bool {
        true
    }
}

/// Gaussian rational from two integer ratios.
pub fn gauss(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> GaussQ {
    Complex::new(
        BigRational::new(re_num.into(), re_den.into()),
        BigRational::new(im_num.into(), im_den.into()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_roots_are_exact_in_both_fields() {
        for k in 0..8 {
            let f = Complex64::root_of_unity(k, 4).unwrap();
            let q = GaussQ::root_of_unity(k, 4).unwrap();
            assert_eq!(f, q.to_c64());
        }
        assert!(GaussQ::root_of_unity(1, 3).is_none());
        let z = Complex64::root_of_unity(1, 3).unwrap();
        assert!((z - Complex64::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn gauss_division_is_exact() {
        let a = gauss(1, 2, 1, 3);
        let b = gauss(2, 1, -1, 1);
        assert_eq!((a.clone() / b.clone()) * b, a);
    }
}
