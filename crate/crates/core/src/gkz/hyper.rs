//! Cohomology-valued hypergeometric series assembled from weight data.
//!
//! Every coefficient is a product of Gamma-ratio factors. With
//! `ratio(A, k) = prod_{m=1}^{k} (A + m z)` for `k >= 0` and
//! `prod_{m=k+1}^{0} (A + m z)^{-1}` for `k < 0`:
//!
//! * a divisor contributes `1 / ratio(D, k)`,
//! * a twist contributes `T * ratio(T, k)`, its Euler factor absorbed so that
//!   `k < 0` needs only the invertible factors `T + m z`, `m != 0`,
//! * a plain factor contributes `ratio(T, k)` with no Euler factor.

use std::sync::Arc;

use num_traits::One;
use serde::Serialize;

use super::{derive, GkzError, ModelId, ModelSpec};
use crate::algebra::{rat, CohElem, RatFuncZ, Rational, RingPresentation};
use crate::series::{DualCoeff, Frame, HalfInt, LogSeries, SeriesKey};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Divisor,
    Twist,
    Plain,
}

#[derive(Clone, Debug)]
pub struct HyperFactor {
    pub kind: FactorKind,
    pub class: CohElem,
    /// `k = pairing.0 * n1 + pairing.1 * n2` at lattice point `(n1, n2)`.
    pub pairing: (i64, i64),
}

#[derive(Clone, Debug)]
pub struct HyperSeries {
    pub frame: Frame,
    pub ring: Arc<RingPresentation>,
    /// `v_slot^(class / z)` factors.
    pub prefactor: Vec<(u8, CohElem)>,
    pub scalar: Rational,
    pub factors: Vec<HyperFactor>,
}

fn shifted(a: &CohElem, m: i64) -> CohElem {
    a + &CohElem::scalar(a.ring(), RatFuncZ::monomial(rat(m, 1), 1))
}

fn run_product(a: &CohElem, lo: i64, hi: i64) -> CohElem {
    (lo..=hi).fold(CohElem::one(a.ring()), |acc, m| &acc * &shifted(a, m))
}

impl HyperFactor {
    pub fn value(&self, n: (i64, i64)) -> Result<CohElem, GkzError> {
        let k = self.pairing.0 * n.0 + self.pairing.1 * n.1;
        let a = &self.class;
        Ok(match (self.kind, k >= 0) {
            (FactorKind::Divisor, true) => run_product(a, 1, k).ring_invert()?,
            (FactorKind::Divisor, false) => run_product(a, k + 1, 0),
            (FactorKind::Twist, true) => a * &run_product(a, 1, k),
            (FactorKind::Twist, false) => run_product(a, k + 1, -1).ring_invert()?,
            (FactorKind::Plain, true) => run_product(a, 1, k),
            (FactorKind::Plain, false) => run_product(a, k + 1, 0).ring_invert()?,
        })
    }
}

impl HyperSeries {
    /// Coefficient of `v1^n1 v2^n2`, excluding the multivalued prefactor.
    pub fn coefficient(&self, n: (i64, i64)) -> Result<CohElem, GkzError> {
        let mut acc = CohElem::one(&self.ring).scale_rational(&self.scalar);
        for f in &self.factors {
            acc = acc.ring_mul(&f.value(n)?)?;
            if acc.is_zero() {
                break;
            }
        }
        Ok(acc)
    }

    /// Lattice points `(n1, n2)` with `n1 + n2 <= order`; `n1 = 0` in the `y` frame.
    pub fn lattice(&self, order: u32) -> Vec<(i64, i64)> {
        let n = order as i64;
        let max1 = if self.frame == Frame::Y { 0 } else { n };
        let mut pts = Vec::new();
        for s in 0..=n {
            for a in 0..=s.min(max1) {
                pts.push((a, s - a));
            }
        }
        pts
    }

    /// The series through total degree `order`.
    pub fn build(&self, order: u32) -> Result<LogSeries, GkzError> {
        let top = HalfInt::int(order as i64);
        let mut body = LogSeries::new(self.frame, &self.ring, top);
        for n in self.lattice(order) {
            let c = self.coefficient(n)?;
            body.add_term(SeriesKey::exps(n.0, n.1), DualCoeff::real(c))?;
        }
        let mut out = body;
        for (slot, class) in &self.prefactor {
            let pre = LogSeries::exp_prefactor(class, *slot, self.frame, top)?;
            out = out.series_mul(&pre)?;
        }
        Ok(out)
    }

    /// `I^X`: divisors `h` x5, `xi`, `xi - h` and the model's twists over `(q1, q2)`.
    pub fn x_side(spec: &ModelSpec) -> Self {
        let mut factors: Vec<HyperFactor> = spec
            .x_divisors
            .iter()
            .map(|d| HyperFactor {
                kind: FactorKind::Divisor,
                class: spec.x_class(d.degree),
                pairing: d.degree,
            })
            .collect();
        factors.extend(spec.x_twists.iter().map(|&t| HyperFactor {
            kind: FactorKind::Twist,
            class: spec.x_class(t),
            pairing: t,
        }));
        HyperSeries {
            frame: Frame::Q,
            ring: spec.x_ring.clone(),
            prefactor: vec![(1, spec.x_class((1, 0))), (2, spec.x_class((0, 1)))],
            scalar: Rational::one(),
            factors,
        }
    }

    /// `I^Y`: six divisors `p` and the model's twists over `y`.
    pub fn y_side(spec: &ModelSpec) -> Self {
        let p = spec.y_class(1);
        let mut factors: Vec<HyperFactor> = (0..spec.y_divisors)
            .map(|_| HyperFactor {
                kind: FactorKind::Divisor,
                class: p.clone(),
                pairing: (0, 1),
            })
            .collect();
        factors.extend(spec.y_twists.iter().map(|&t| HyperFactor {
            kind: FactorKind::Twist,
            class: spec.y_class(t),
            pairing: (0, t),
        }));
        HyperSeries {
            frame: Frame::Y,
            ring: spec.y_ring.clone(),
            prefactor: vec![(2, p)],
            scalar: Rational::one(),
            factors,
        }
    }

    /// `Ibar^Y` over `(x, y)` for a given choice of twist classes. An `X`
    /// degree `(a, b)` pairs with `(i, j)` as `(a + b) j - a i`, since
    /// `d1 = j - i` and `d2 = j`; classes contract by `h, xi -> p`.
    pub fn ibar(spec: &ModelSpec, variant: &IbarVariant) -> Result<Self, GkzError> {
        if variant.num != variant.norm {
            return Err(GkzError::IllDefined(format!(
                "numerator classes {:?}p over normalization classes {:?}p",
                variant.num, variant.norm
            )));
        }
        let contract = |(a, b): (i64, i64)| (-a, a + b);
        let mut factors: Vec<HyperFactor> = spec
            .x_divisors
            .iter()
            .map(|d| HyperFactor {
                kind: FactorKind::Divisor,
                class: spec.y_class(d.degree.0 + d.degree.1),
                pairing: contract(d.degree),
            })
            .collect();
        for (t, &n) in spec.x_twists.iter().zip(&variant.num) {
            factors.push(HyperFactor {
                kind: FactorKind::Twist,
                class: spec.y_class(n),
                pairing: contract(*t),
            });
        }
        let num: i64 = variant.num.iter().product();
        Ok(HyperSeries {
            frame: Frame::XY,
            ring: spec.y_ring.clone(),
            prefactor: vec![(2, spec.y_class(1))],
            scalar: rat(spec.y_degree(), num),
            factors,
        })
    }
}

/// Which classes `n p` multiply `m z` in the twist factors of `Ibar^Y`:
/// `num` in the numerator products, `norm` in the `m <= 0` normalization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IbarVariant {
    pub num: Vec<i64>,
    pub norm: Vec<i64>,
}

impl IbarVariant {
    /// Contraction of the `X` twists.
    pub fn structural(spec: &ModelSpec) -> Self {
        let n: Vec<i64> = spec.x_twists.iter().map(|(a, b)| a + b).collect();
        IbarVariant { num: n.clone(), norm: n }
    }

    /// The classes as displayed for each model.
    pub fn printed(id: ModelId) -> Self {
        match id {
            ModelId::Local => IbarVariant { num: vec![2, 2], norm: vec![2, 2] },
            ModelId::T24 => IbarVariant { num: vec![2, 2], norm: vec![2, 2] },
            ModelId::T33 => IbarVariant { num: vec![3, 3], norm: vec![2, 2] },
        }
    }

    /// Number of multipliers that differ from `other`.
    pub fn cost(&self, other: &IbarVariant) -> usize {
        let diff = |a: &[i64], b: &[i64]| a.iter().zip(b).filter(|(x, y)| x != y).count();
        diff(&self.num, &other.num) + diff(&self.norm, &other.norm)
    }

    pub fn describe(&self) -> String {
        let part = |v: &[i64]| v.iter().map(|n| format!("{n}p")).collect::<Vec<_>>().join(",");
        format!("numerator [{}], normalization [{}]", part(&self.num), part(&self.norm))
    }

    /// Every assignment of multipliers from `{2, 3, 4}`, cheapest first.
    fn candidates(printed: &IbarVariant) -> Vec<IbarVariant> {
        let k = printed.num.len();
        let mults = [2i64, 3, 4];
        let mut out = Vec::new();
        let total = 3usize.pow(2 * k as u32);
        for code in 0..total {
            let mut c = code;
            let mut digits = Vec::with_capacity(2 * k);
            for _ in 0..2 * k {
                digits.push(mults[c % 3]);
                c /= 3;
            }
            out.push(IbarVariant {
                num: digits[..k].to_vec(),
                norm: digits[k..].to_vec(),
            });
        }
        out.sort_by_key(|v| (v.cost(printed), v.num.clone(), v.norm.clone()));
        out
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IbarPolicy {
    /// Use the displayed classes; fails when the display is not well-defined.
    Printed,
    /// Use the contraction of the `X` twists directly.
    Structural,
    /// Cheapest variant that is well-defined, restricts to `I^Y` at `i = 0`
    /// and is annihilated by the transformed operators.
    Reconcile,
}

/// Outcome of checking one `Ibar^Y` variant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantCheck {
    pub variant: IbarVariant,
    pub well_defined: bool,
    pub slice_ok: bool,
    pub annihilated: Option<bool>,
}

pub fn build_i_x(spec: &ModelSpec, order: u32) -> Result<LogSeries, GkzError> {
    HyperSeries::x_side(spec).build(order)
}

pub fn build_i_y(spec: &ModelSpec, order: u32) -> Result<LogSeries, GkzError> {
    HyperSeries::y_side(spec).build(order)
}

/// True when the `i = 0` coefficients equal those of `I^Y` through `order`.
pub(crate) fn slice_matches(spec: &ModelSpec, variant: &IbarVariant, order: u32) -> Result<bool, GkzError> {
    let bar = match HyperSeries::ibar(spec, variant) {
        Ok(b) => b,
        Err(GkzError::IllDefined(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    let y = HyperSeries::y_side(spec);
    for j in 0..=order as i64 {
        if bar.coefficient((0, j))? != y.coefficient((0, j))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Check a single variant against all three constraints.
pub fn check_variant(spec: &ModelSpec, variant: &IbarVariant, order: u32) -> Result<VariantCheck, GkzError> {
    let well_defined = variant.num == variant.norm;
    let slice_ok = well_defined && slice_matches(spec, variant, order)?;
    let annihilated = if slice_ok {
        let series = HyperSeries::ibar(spec, variant)?.build(order)?;
        let sys = derive::transformed_system(spec)?;
        Some(derive::verify_annihilation(&sys, &series)?.all_zero())
    } else {
        None
    };
    Ok(VariantCheck {
        variant: variant.clone(),
        well_defined,
        slice_ok,
        annihilated,
    })
}

/// Cheapest variant passing every constraint, with the checks that led to it.
pub fn reconcile_variant(spec: &ModelSpec, order: u32) -> Result<(IbarVariant, Vec<VariantCheck>), GkzError> {
    let printed = IbarVariant::printed(spec.id);
    let mut trail = Vec::new();
    for cand in IbarVariant::candidates(&printed) {
        if cand.num != cand.norm {
            continue;
        }
        if !slice_matches(spec, &cand, order)? {
            continue;
        }
        let check = check_variant(spec, &cand, order)?;
        let ok = check.annihilated == Some(true);
        trail.push(check);
        if ok {
            return Ok((cand, trail));
        }
    }
    Err(GkzError::NoVariant(format!("Ibar^Y ({})", spec.id)))
}

pub fn build_ibar_y_variant(spec: &ModelSpec, variant: &IbarVariant, order: u32) -> Result<LogSeries, GkzError> {
    HyperSeries::ibar(spec, variant)?.build(order)
}

pub fn build_ibar_y(spec: &ModelSpec, order: u32, policy: IbarPolicy) -> Result<LogSeries, GkzError> {
    let variant = match policy {
        IbarPolicy::Printed => IbarVariant::printed(spec.id),
        IbarPolicy::Structural => IbarVariant::structural(spec),
        IbarPolicy::Reconcile => reconcile_variant(spec, order)?.0,
    };
    build_ibar_y_variant(spec, &variant, order)
}
