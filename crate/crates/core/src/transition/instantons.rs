//! Genus-zero instanton numbers of the Calabi-Yau `Y` from the mirror map and
//! the Yukawa coupling, with an independent count of lines.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::pseries::PowerSeries;
use super::schubert::lines_on_complete_intersection;
use super::TransitionError;
use crate::algebra::Rational;
use crate::gkz::{build_i_y, derive_y_gkz, ModelId, ModelSpec};
use crate::series::{HalfInt, SeriesKey};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstantonTable {
    pub id: ModelId,
    pub n0: BigInt,
    /// `n_d` for `1 <= d <= d_max`.
    pub numbers: BTreeMap<u32, Rational>,
    pub integral: bool,
    pub discriminant: Rational,
    /// Coefficients of `q(y) = y + ...` through `y^d_max`.
    pub mirror_map: Vec<Rational>,
}

fn require_cy(spec: &ModelSpec) -> Result<(), TransitionError> {
    if spec.id.is_calabi_yau() {
        Ok(())
    } else {
        Err(TransitionError::NotCalabiYau(spec.id))
    }
}

/// `lambda` with `1 - lambda y` the leading symbol of the `Y`-side box operator at `z = 1`.
pub fn discriminant(spec: &ModelSpec) -> Result<Rational, TransitionError> {
    let sys = derive_y_gkz(spec)?;
    let op = sys
        .get("box")
        .ok_or_else(|| TransitionError::Degenerate("no Y-side box operator".into()))?
        .dehomogenize();
    let top = op.delta_degree();
    let mut by_power: BTreeMap<i64, Rational> = BTreeMap::new();
    for (k, c) in op.terms() {
        if k.d2 == top {
            *by_power.entry(k.e2.twice() / 2).or_insert_with(Rational::zero) += c;
        }
    }
    let c0 = by_power.get(&0).cloned().unwrap_or_default();
    let c1 = by_power.get(&1).cloned().unwrap_or_default();
    if c0.is_zero() || by_power.len() != 2 {
        return Err(TransitionError::Degenerate(format!("leading symbol {by_power:?} is not of the form c(1 - lambda y)")));
    }
    Ok(-c1 / c0)
}

/// Degree-1 rational curves on `Y` by Schubert calculus on the Grassmannian of lines.
pub fn lines_oracle(spec: &ModelSpec) -> Result<BigInt, TransitionError> {
    require_cy(spec)?;
    let degrees: Vec<u32> = spec.y_twists.iter().map(|&d| d as u32).collect();
    lines_on_complete_intersection(&degrees).ok_or_else(|| TransitionError::Degenerate("top Chern class is not symmetric".into()))
}

/// Coefficient of `p^k` in the `y^j` term of `I^Y` without logarithms, as a rational after `z^shift`.
fn p_coefficient(series: &crate::series::LogSeries, j: u32, k: u32, shift: i64) -> Result<Rational, TransitionError> {
    let ring = series.ring();
    let idx = ring
        .index_of(&vec![k])
        .ok_or_else(|| TransitionError::Degenerate(format!("p^{k} is not a basis monomial")))?;
    let c = series.coefficient(&SeriesKey::new(HalfInt::ZERO, HalfInt::int(j as i64), 0, 0))?;
    c.re.coord(idx)
        .mul_z_pow(shift)
        .as_rational()
        .ok_or_else(|| TransitionError::Degenerate(format!("coefficient of p^{k} y^{j} depends on z")))
}

pub fn instanton_numbers(spec: &ModelSpec, d_max: u32) -> Result<InstantonTable, TransitionError> {
    require_cy(spec)?;
    let n0 = Rational::from_integer(spec.y_degree().into());
    let len = d_max as usize + 1;
    let i_y = build_i_y(spec, d_max)?;
    let mut a = Vec::with_capacity(len);
    let mut b = Vec::with_capacity(len);
    for j in 0..=d_max {
        a.push(p_coefficient(&i_y, j, 2, 0)? / &n0);
        b.push(p_coefficient(&i_y, j, 3, 1)? / &n0);
    }
    let f0 = PowerSeries::new(a, len);
    let f1 = PowerSeries::new(b, len);
    let degenerate = |what: &str| TransitionError::Degenerate(what.to_string());
    let f0_inv = f0.inv().ok_or_else(|| degenerate("F0 has no constant term"))?;
    let ratio = f1.mul(&f0_inv);
    let mirror = PowerSeries::var(len).mul(&ratio.exp().ok_or_else(|| degenerate("F1/F0 has a constant term"))?);
    let theta_t = PowerSeries::constant(Rational::one(), len).add(&ratio.theta());

    let lambda = discriminant(spec)?;
    let disc = PowerSeries::new(vec![Rational::one(), -lambda.clone()], len);
    let denom = disc.mul(&f0).mul(&f0).mul(&theta_t).mul(&theta_t).mul(&theta_t);
    let coupling = denom.inv().ok_or_else(|| degenerate("singular coupling"))?.scale(&n0);
    let y_of_q = mirror.reversion().ok_or_else(|| degenerate("mirror map does not start with q = y"))?;
    let k = coupling.compose(&y_of_q).ok_or_else(|| degenerate("composition failed"))?;
    if k.coeffs[0] != n0 {
        return Err(degenerate("classical coupling differs from the degree"));
    }

    // K_k = sum over d | k of n_d d^3.
    let mut numbers = BTreeMap::new();
    for kk in 1..=d_max {
        let mut rest = k.coeffs[kk as usize].clone();
        for d in 1..kk {
            if kk % d == 0 {
                let n_d: &Rational = &numbers[&d];
                rest -= n_d * Rational::from_integer(BigInt::from(d).pow(3));
            }
        }
        numbers.insert(kk, rest / Rational::from_integer(BigInt::from(kk).pow(3)));
    }
    let integral = numbers.values().all(|n| n.is_integer());
    Ok(InstantonTable {
        id: spec.id,
        n0: n0.to_integer(),
        numbers,
        integral,
        discriminant: lambda,
        mirror_map: mirror.coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminants_of_the_two_models() {
        assert_eq!(discriminant(&ModelSpec::new(ModelId::T24)).unwrap(), Rational::from_integer(1024.into()));
        assert_eq!(discriminant(&ModelSpec::new(ModelId::T33)).unwrap(), Rational::from_integer(729.into()));
    }

    #[test]
    fn t24_first_numbers() {
        let t = instanton_numbers(&ModelSpec::new(ModelId::T24), 2).unwrap();
        assert_eq!(t.n0, BigInt::from(8));
        assert_eq!(t.numbers[&1], Rational::from_integer(1280.into()));
        assert_eq!(t.numbers[&2], Rational::from_integer(92288.into()));
        assert!(t.integral);
        assert_eq!(t.mirror_map[1], Rational::one());
    }

    #[test]
    fn local_model_is_rejected() {
        let spec = ModelSpec::new(ModelId::Local);
        assert_eq!(instanton_numbers(&spec, 1), Err(TransitionError::NotCalabiYau(ModelId::Local)));
        assert!(lines_oracle(&spec).is_err());
    }
}
