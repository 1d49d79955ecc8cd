//! Reduced rational functions in the formal parameter `z`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::QPoly;
use super::{AlgebraError, Rational};

/// `num / den` with `gcd(num, den) = 1` and `den` monic. Zero is `0/1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFuncZ {
    num: QPoly,
    den: QPoly,
}

impl RatFuncZ {
    /// Build and normalize `num / den`.
    pub fn new(num: QPoly, den: QPoly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Self::normalize_parts(num, den))
    }

    /// Canonical form of an arbitrary pair; see [`RatFuncZ::new`].
    pub fn scalar_normalize(f: &RatFuncZ) -> Result<Self, AlgebraError> {
        Self::new(f.num.clone(), f.den.clone())
    }

    fn normalize_parts(num: QPoly, den: QPoly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        if den.is_monomial() {
            // gcd with a power of z only strips powers of z.
            let k = den.degree().unwrap();
            let lc = den.leading().unwrap().clone();
            let m = k.min(num.valuation().unwrap());
            let num = num.shift_down(m).scale(&lc.recip());
            let den = QPoly::monomial(Rational::one(), k - m);
            return RatFuncZ { num, den };
        }
        let g = QPoly::gcd(&num, &den);
        let (num, den) = if g.degree() == Some(0) {
            (num, den)
        } else {
            (num.div_rem(&g).0, den.div_rem(&g).0)
        };
        let (den, lc) = den.monic();
        let num = num.scale(&lc.recip());
        RatFuncZ { num, den }
    }

    pub fn zero() -> Self {
        RatFuncZ {
            num: QPoly::zero(),
            den: QPoly::one(),
        }
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(c: Rational) -> Self {
        RatFuncZ {
            num: QPoly::constant(c),
            den: QPoly::one(),
        }
    }

    pub fn from_int(c: i64) -> Self {
        Self::from_rational(Rational::from_integer(c.into()))
    }

    pub fn from_poly(p: QPoly) -> Self {
        RatFuncZ {
            num: p,
            den: QPoly::one(),
        }
    }

    /// `c * z^k` for any integer `k`.
    pub fn monomial(c: Rational, k: i64) -> Self {
        if k >= 0 {
            Self::from_poly(QPoly::monomial(c, k as usize))
        } else {
            Self::normalize_parts(QPoly::constant(c), QPoly::monomial(Rational::one(), (-k) as usize))
        }
    }

    pub fn z() -> Self {
        Self::monomial(Rational::one(), 1)
    }

    pub fn num(&self) -> &QPoly {
        &self.num
    }

    pub fn den(&self) -> &QPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.degree() == Some(0) && self.num.constant_value().is_some_and(|c| c.is_one())
    }

    /// The value when this is a constant (no `z` dependence).
    pub fn as_rational(&self) -> Option<Rational> {
        if self.den.degree() == Some(0) {
            self.num.constant_value()
        } else {
            None
        }
    }

    /// If the function is `c * z^k`, return `(c, k)`.
    pub fn as_monomial(&self) -> Option<(Rational, i64)> {
        if self.is_zero() || !self.num.is_monomial() || !self.den.is_monomial() {
            return None;
        }
        let k = self.num.degree().unwrap() as i64 - self.den.degree().unwrap() as i64;
        Some((self.num.leading().unwrap().clone(), k))
    }

    pub fn inv(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Self::normalize_parts(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, rhs: &RatFuncZ) -> Result<Self, AlgebraError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatFuncZ {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Multiply by `z^k`.
    pub fn mul_z_pow(&self, k: i64) -> Self {
        if k == 0 || self.is_zero() {
            return self.clone();
        }
        if k > 0 {
            Self::normalize_parts(self.num.shift_up(k as usize), self.den.clone())
        } else {
            Self::normalize_parts(self.num.clone(), self.den.shift_up((-k) as usize))
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Value at `z = 1`, if defined.
    pub fn at_one(&self) -> Option<Rational> {
        let d = self.den.eval(&Rational::one());
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(&Rational::one()) / d)
        }
    }
}

impl Default for RatFuncZ {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for &RatFuncZ {
    type Output = RatFuncZ;
    fn add(self, rhs: &RatFuncZ) -> RatFuncZ {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RatFuncZ::normalize_parts(&self.num + &rhs.num, self.den.clone());
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RatFuncZ::normalize_parts(num, &self.den * &rhs.den)
    }
}

impl Neg for &RatFuncZ {
    type Output = RatFuncZ;
    fn neg(self) -> RatFuncZ {
        RatFuncZ {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Sub for &RatFuncZ {
    type Output = RatFuncZ;
    fn sub(self, rhs: &RatFuncZ) -> RatFuncZ {
        self + &(-rhs)
    }
}

impl Mul for &RatFuncZ {
    type Output = RatFuncZ;
    fn mul(self, rhs: &RatFuncZ) -> RatFuncZ {
        if self.is_zero() || rhs.is_zero() {
            return RatFuncZ::zero();
        }
        if self.den.degree() == Some(0) && rhs.den.degree() == Some(0) {
            return RatFuncZ {
                num: &self.num * &rhs.num,
                den: QPoly::one(),
            };
        }
        RatFuncZ::normalize_parts(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RatFuncZ {
            type Output = RatFuncZ;
            fn $m(self, rhs: RatFuncZ) -> RatFuncZ {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Zero for RatFuncZ {
    fn zero() -> Self {
        RatFuncZ::zero()
    }
    fn is_zero(&self) -> bool {
        RatFuncZ::is_zero(self)
    }
}

impl fmt::Display for RatFuncZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) {
            if self.num.is_monomial() || self.num.is_zero() {
                write!(f, "{}", self.num)
            } else {
                write!(f, "({})", self.num)
            }
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn p(cs: &[i64]) -> QPoly {
        QPoly::from_coeffs(cs.iter().map(|&c| rat(c, 1)).collect())
    }

    #[test]
    fn common_factor_cancels() {
        // (2z^2 + 2z) / (2z) = z + 1
        let f = RatFuncZ::new(p(&[0, 2, 2]), p(&[0, 2])).unwrap();
        assert_eq!(f.num(), &p(&[1, 1]));
        assert_eq!(f.den(), &p(&[1]));
    }

    #[test]
    fn zero_has_unit_denominator() {
        let f = RatFuncZ::new(QPoly::zero(), p(&[1, 0, 0, 1])).unwrap();
        assert_eq!(f, RatFuncZ::zero());
        assert_eq!(f.den(), &p(&[1]));
    }

    #[test]
    fn polynomial_gcd_cancels() {
        // (z^2 - 1) / (z - 1) = z + 1
        let f = RatFuncZ::new(p(&[-1, 0, 1]), p(&[-1, 1])).unwrap();
        assert_eq!(f, RatFuncZ::from_poly(p(&[1, 1])));
    }

    #[test]
    fn zero_denominator_is_rejected() {
        assert_eq!(
            RatFuncZ::new(p(&[1]), QPoly::zero()),
            Err(AlgebraError::DivisionByZero)
        );
    }

    #[test]
    fn monomials_and_inverse() {
        let f = RatFuncZ::monomial(rat(3, 2), -2);
        assert_eq!(f.as_monomial(), Some((rat(3, 2), -2)));
        assert!((&f * &f.inv().unwrap()).is_one());
    }
}
