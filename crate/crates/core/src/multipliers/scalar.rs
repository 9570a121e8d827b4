//! Number types the symbol recursions can be evaluated in.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::resonance::{big_omega_exact_slice, big_omega_slice, PartitionConstants};
use crate::spectral::DispersionSymbol;

/// Field operations plus the two symbol-specific hooks: the resonance
/// denominator `Ω` and the conversion to floating point.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_int(v: i64) -> Self;
    fn imag_unit() -> Self;
    fn is_zero(&self) -> bool;
    /// Division by a nonzero value.
    fn div(self, rhs: &Self) -> Self;
    fn to_complex(&self) -> Complex64;
    /// `Ω` of the tuple, or `None` when it counts as resonant.
    fn resonance(xs: &[i64], sym: &DispersionSymbol, c: &PartitionConstants) -> Option<Self>;
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn from_int(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn imag_unit() -> Self {
        Complex64::new(0.0, 1.0)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn div(self, rhs: &Self) -> Self {
        self / rhs
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }

    fn resonance(xs: &[i64], sym: &DispersionSymbol, c: &PartitionConstants) -> Option<Self> {
        let om = big_omega_slice(xs, sym);
        if c.is_resonant(om) {
            None
        } else {
            Some(Complex64::new(om, 0.0))
        }
    }
}

/// `a + bi` with exact rational parts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    /// `(re_num/re_den) + (im_num/im_den) i`.
    pub fn from_fracs(re: (i64, i64), im: (i64, i64)) -> Self {
        GaussianRational {
            re: BigRational::new(BigInt::from(re.0), BigInt::from(re.1)),
            im: BigRational::new(BigInt::from(im.0), BigInt::from(im.1)),
        }
    }

    pub fn conj(&self) -> Self {
        GaussianRational {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Add for GaussianRational {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        GaussianRational {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for GaussianRational {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        GaussianRational {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for GaussianRational {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        GaussianRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for GaussianRational {
    type Output = Self;
    fn neg(self) -> Self {
        GaussianRational {
            re: -self.re,
            im: -self.im,
        }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // huge parts: scale both down by the same power of two
        _ => {
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

impl Scalar for GaussianRational {
    fn zero() -> Self {
        GaussianRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    fn from_int(v: i64) -> Self {
        GaussianRational {
            re: BigRational::from_integer(BigInt::from(v)),
            im: BigRational::zero(),
        }
    }

    fn imag_unit() -> Self {
        GaussianRational {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn div(self, rhs: &Self) -> Self {
        assert!(!rhs.is_zero(), "division by zero");
        if rhs.im.is_zero() {
            return GaussianRational {
                re: self.re / &rhs.re,
                im: self.im / &rhs.re,
            };
        }
        let n = rhs.norm_sqr();
        let p = self * rhs.conj();
        GaussianRational {
            re: p.re / &n,
            im: p.im / &n,
        }
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }

    /// Requires an integer-valued dispersion symbol.
    fn resonance(xs: &[i64], sym: &DispersionSymbol, _c: &PartitionConstants) -> Option<Self> {
        let om = big_omega_exact_slice(xs, sym).expect("exact resonance needs an integer-valued dispersion symbol");
        if om == 0 {
            None
        } else {
            Some(GaussianRational {
                re: BigRational::from_integer(BigInt::from(om)),
                im: BigRational::zero(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_arithmetic() {
        let a = GaussianRational::from_fracs((1, 2), (1, 3));
        let b = GaussianRational::from_fracs((2, 1), (-1, 1));
        let q = (a.clone() * b.clone()).div(&b);
        assert_eq!(q, a);
        let i = GaussianRational::imag_unit();
        assert_eq!(i.clone() * i, -GaussianRational::from_int(1));
        let z = a.to_complex();
        assert!((z - Complex64::new(0.5, 1.0 / 3.0)).norm() < 1e-15);
    }
}
