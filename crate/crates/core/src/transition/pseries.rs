//! Truncated power series in one variable with rational coefficients.

use num_traits::{One, Zero};

use crate::algebra::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSeries {
    /// Coefficients of `t^0 .. t^(len-1)`; everything beyond is unknown.
    pub coeffs: Vec<Rational>,
}

impl PowerSeries {
    pub fn new(mut coeffs: Vec<Rational>, len: usize) -> Self {
        coeffs.resize(len, Rational::zero());
        PowerSeries { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn constant(c: Rational, len: usize) -> Self {
        PowerSeries::new(vec![c], len)
    }

    /// `t` itself.
    pub fn var(len: usize) -> Self {
        PowerSeries::new(vec![Rational::zero(), Rational::one()], len)
    }

    pub fn add(&self, o: &PowerSeries) -> PowerSeries {
        PowerSeries {
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &PowerSeries) -> PowerSeries {
        PowerSeries {
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> PowerSeries {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, o: &PowerSeries) -> PowerSeries {
        let n = self.len().min(o.len());
        let mut out = vec![Rational::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(n - i) {
                out[i + j] += a * b;
            }
        }
        PowerSeries { coeffs: out }
    }

    /// Multiplicative inverse; `None` when the constant term vanishes.
    pub fn inv(&self) -> Option<PowerSeries> {
        let c0 = self.coeffs.first()?;
        if c0.is_zero() {
            return None;
        }
        let n = self.len();
        let mut out = vec![Rational::zero(); n];
        out[0] = c0.recip();
        for k in 1..n {
            let mut s = Rational::zero();
            for j in 1..=k {
                s += &self.coeffs[j] * &out[k - j];
            }
            out[k] = -(s * &out[0]);
        }
        Some(PowerSeries { coeffs: out })
    }

    /// `exp` of a series without constant term.
    pub fn exp(&self) -> Option<PowerSeries> {
        if !self.coeffs.first()?.is_zero() {
            return None;
        }
        // e' = f' e, solved degree by degree.
        let n = self.len();
        let mut out = vec![Rational::zero(); n];
        out[0] = Rational::one();
        for k in 1..n {
            let mut s = Rational::zero();
            for j in 1..=k {
                s += Rational::from_integer(j.into()) * &self.coeffs[j] * &out[k - j];
            }
            out[k] = s / Rational::from_integer(k.into());
        }
        Some(PowerSeries { coeffs: out })
    }

    /// `t d/dt`.
    pub fn theta(&self) -> PowerSeries {
        PowerSeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * Rational::from_integer(k.into()))
                .collect(),
        }
    }

    /// `self(g)` for `g` without constant term.
    pub fn compose(&self, g: &PowerSeries) -> Option<PowerSeries> {
        if !g.coeffs.first()?.is_zero() {
            return None;
        }
        let n = self.len().min(g.len());
        let mut out = PowerSeries::new(vec![], n);
        let mut pow = PowerSeries::constant(Rational::one(), n);
        for a in self.coeffs.iter().take(n) {
            out = out.add(&pow.scale(a));
            pow = pow.mul(g);
        }
        Some(out)
    }

    /// Compositional inverse of `g = t + O(t^2)`.
    pub fn reversion(&self) -> Option<PowerSeries> {
        if self.len() < 2 || !self.coeffs[0].is_zero() || !self.coeffs[1].is_one() {
            return None;
        }
        let n = self.len();
        // Fixed point of h = t - (g(h) - h), exact after n steps.
        let mut h = PowerSeries::var(n);
        for _ in 0..n {
            let gh = self.compose(&h)?;
            h = PowerSeries::var(n).sub(&gh.sub(&h));
        }
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn ps(v: &[i64]) -> PowerSeries {
        PowerSeries::new(v.iter().map(|&a| rat(a, 1)).collect(), v.len())
    }

    #[test]
    fn inverse_of_one_minus_t_is_geometric() {
        assert_eq!(ps(&[1, -1, 0, 0, 0]).inv().unwrap(), ps(&[1, 1, 1, 1, 1]));
    }

    #[test]
    fn exp_of_t_has_factorial_denominators() {
        let e = ps(&[0, 1, 0, 0, 0]).exp().unwrap();
        assert_eq!(e.coeffs[4], rat(1, 24));
    }

    #[test]
    fn reversion_round_trips() {
        let g = ps(&[0, 1, 3, -2, 5, 7]);
        let h = g.reversion().unwrap();
        assert_eq!(g.compose(&h).unwrap(), PowerSeries::var(6));
    }
}
