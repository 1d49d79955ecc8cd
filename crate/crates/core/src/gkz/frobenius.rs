//! Frobenius solutions `x^(rho + u) y^(D/z) sum C_ij x^i y^j` of a system in
//! the `(x, y)` frame, with `u^2 = 0` and `C_ij` in the `Y` ring.
//!
//! Each operator term `x^a1 y^a2 z^k dx^i1 dy^i2` contributes to the
//! coefficient of `x^(rho+T1) y^T2` through `C_(T-a)` times
//! `z^k (rho + T1 - a1 + u)^i1 (T2 - a2 + D/z)^i2`. The unknowns are found by
//! propagation: any index whose equations involve no other unknown is solved
//! by an exact linear solve over `Q(z)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::{GkzError, ModelSpec};
use crate::algebra::linalg::{solve, Solution};
use crate::algebra::{CohElem, RatFuncZ, Rational};
use crate::operator::OperatorSystem;
use crate::series::{DualCoeff, Frame, HalfInt, LogSeries, SeriesKey};

type Idx = (i64, i64);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedFamily {
    /// Scalar seed `C_00 = 1`, exponent deformed by `u`.
    Extended,
    /// Seed `C_00 = e(V)` on `Y` with prefactor `y^(p/z)`, no deformation.
    Component,
}

#[derive(Clone, Debug)]
pub enum FrobeniusOutcome {
    Solved {
        coefficients: BTreeMap<Idx, DualCoeff>,
        series: LogSeries,
    },
    Obstructed {
        at: Idx,
        reason: String,
    },
}

impl FrobeniusOutcome {
    pub fn series(&self) -> Option<&LogSeries> {
        match self {
            FrobeniusOutcome::Solved { series, .. } => Some(series),
            FrobeniusOutcome::Obstructed { .. } => None,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, FrobeniusOutcome::Solved { .. })
    }
}

struct Equation {
    terms: Vec<(Idx, DualCoeff)>,
}

fn degree(i: Idx) -> i64 {
    i.0 + i.1
}

fn mult_matrix(m: &CohElem) -> Vec<Vec<RatFuncZ>> {
    let ring = m.ring();
    let n = ring.dim();
    let mut rows = vec![vec![RatFuncZ::zero(); n]; n];
    for b in 0..n {
        let mut unit = vec![RatFuncZ::zero(); n];
        unit[b] = RatFuncZ::one();
        let prod = m * &CohElem::from_dense(ring, unit);
        for (r, row) in rows.iter_mut().enumerate() {
            row[b] = prod.coord(r).clone();
        }
    }
    rows
}

fn dual_coords(c: &DualCoeff) -> Vec<RatFuncZ> {
    let mut v = c.re.coords_dense().to_vec();
    v.extend(c.inf.coords_dense().iter().cloned());
    v
}

struct Setup<'a> {
    rho: HalfInt,
    eps: bool,
    dy: CohElem,
    spec: &'a ModelSpec,
    cache: HashMap<(usize, Idx, Idx), DualCoeff>,
}

impl Setup<'_> {
    /// `sum c z^k (rho + I + u)^i1 (J + D/z)^i2` over the terms of `op` with shift `a`.
    fn multiplier(&mut self, sys: &OperatorSystem, op_ix: usize, a: Idx, at: Idx) -> DualCoeff {
        if let Some(m) = self.cache.get(&(op_ix, a, at)) {
            return m.clone();
        }
        let ring = &self.spec.y_ring;
        let op = &sys.operators()[op_ix].1;
        let xval = DualCoeff {
            re: CohElem::scalar(ring, RatFuncZ::from_rational(self.rho.to_rational() + Rational::from_integer(at.0.into()))),
            inf: if self.eps { CohElem::one(ring) } else { CohElem::zero(ring) },
        };
        let yval = DualCoeff::real(&CohElem::from_int(ring, at.1) + &self.dy.mul_z_pow(-1));
        let mut acc = DualCoeff::zero(ring);
        for (k, c) in op.terms() {
            if (k.e1, k.e2) != (HalfInt::int(a.0), HalfInt::int(a.1)) {
                continue;
            }
            let t = (&xval.pow(k.d1) * &yval.pow(k.d2))
                .mul_z_pow(k.zpow as i64)
                .scale_rational(c);
            acc = &acc + &t;
        }
        self.cache.insert((op_ix, a, at), acc.clone());
        acc
    }
}

/// Solve the system at exponent `rho` for one seed family, through total degree `order`.
pub fn frobenius_solve(
    sys: &OperatorSystem,
    spec: &ModelSpec,
    rho: HalfInt,
    family: SeedFamily,
    order: u32,
) -> Result<FrobeniusOutcome, GkzError> {
    if sys.frame() != Frame::XY {
        return Err(crate::operator::OpError::FrameMismatch(Frame::XY, sys.frame()).into());
    }
    let ring = spec.y_ring.clone();
    let (seed, dy, eps) = match family {
        SeedFamily::Extended => (CohElem::one(&ring), CohElem::zero(&ring), true),
        SeedFamily::Component => (spec.y_euler(), spec.y_class(1), false),
    };
    let mut setup = Setup {
        rho,
        eps,
        dy: dy.clone(),
        spec,
        cache: HashMap::new(),
    };
    // One degree beyond the output so that boundary indices see their equations.
    let window = order as i64 + 1;
    let in_window = |i: Idx| i.0 >= 0 && i.1 >= 0 && degree(i) <= window;

    let mut equations: Vec<Equation> = Vec::new();
    for (op_ix, (_, op)) in sys.operators().iter().enumerate() {
        let shifts: Vec<Idx> = op
            .shifts()
            .iter()
            .map(|(a, b)| (a.twice() / 2, b.twice() / 2))
            .collect();
        let mut targets = BTreeSet::new();
        for i in 0..=window {
            for j in 0..=(window - i) {
                for a in &shifts {
                    targets.insert((i + a.0, j + a.1));
                }
            }
        }
        'target: for t in targets {
            let mut terms = Vec::new();
            for a in &shifts {
                let idx = (t.0 - a.0, t.1 - a.1);
                if idx.0 < 0 || idx.1 < 0 {
                    continue;
                }
                if !in_window(idx) {
                    continue 'target;
                }
                let m = setup.multiplier(sys, op_ix, *a, idx);
                if !m.is_zero() {
                    terms.push((idx, m));
                }
            }
            if !terms.is_empty() {
                equations.push(Equation { terms });
            }
        }
    }

    let mut known: BTreeMap<Idx, DualCoeff> = BTreeMap::new();
    known.insert((0, 0), DualCoeff::real(seed));
    let mut unknown: Vec<Idx> = Vec::new();
    for d in 0..=window {
        for i in 0..=d {
            if (i, d - i) != (0, 0) {
                unknown.push((i, d - i));
            }
        }
    }
    let n = ring.dim();

    loop {
        let mut progress = false;
        for (pos, &u) in unknown.iter().enumerate() {
            let eqs: Vec<&Equation> = equations
                .iter()
                .filter(|e| e.terms.iter().any(|(i, _)| *i == u))
                .filter(|e| e.terms.iter().all(|(i, _)| *i == u || known.contains_key(i)))
                .collect();
            if eqs.is_empty() {
                continue;
            }
            let mut a_rows: Vec<Vec<RatFuncZ>> = Vec::new();
            let mut b_rows: Vec<RatFuncZ> = Vec::new();
            for e in eqs {
                let mut rhs = DualCoeff::zero(&ring);
                let mut coef = DualCoeff::zero(&ring);
                for (i, m) in &e.terms {
                    if *i == u {
                        coef = &coef + m;
                    } else {
                        rhs = &rhs - &(m * &known[i]);
                    }
                }
                let ma = mult_matrix(&coef.re);
                let mb = mult_matrix(&coef.inf);
                for r in 0..n {
                    let mut row = ma[r].clone();
                    row.extend(vec![RatFuncZ::zero(); n]);
                    a_rows.push(row);
                }
                for r in 0..n {
                    let mut row = mb[r].clone();
                    row.extend(ma[r].iter().cloned());
                    a_rows.push(row);
                }
                b_rows.extend(dual_coords(&rhs));
            }
            match solve(&a_rows, &b_rows) {
                Solution::Unique(x) => {
                    let re = CohElem::from_dense(&ring, x[..n].to_vec());
                    let inf = CohElem::from_dense(&ring, x[n..].to_vec());
                    known.insert(u, DualCoeff { re, inf });
                    unknown.remove(pos);
                    progress = true;
                    break;
                }
                Solution::Inconsistent => {
                    return Ok(FrobeniusOutcome::Obstructed {
                        at: u,
                        reason: "inconsistent equations".into(),
                    })
                }
                Solution::Underdetermined => {}
            }
        }
        if !progress {
            break;
        }
    }

    for e in &equations {
        if e.terms.iter().all(|(i, _)| known.contains_key(i)) {
            let r = e
                .terms
                .iter()
                .fold(DualCoeff::zero(&ring), |acc, (i, m)| &acc + &(m * &known[i]));
            if !r.is_zero() {
                let at = e.terms.iter().map(|(i, _)| *i).min().unwrap();
                return Ok(FrobeniusOutcome::Obstructed {
                    at,
                    reason: "residual in a fully determined equation".into(),
                });
            }
        }
    }
    if let Some(&u) = unknown.iter().find(|i| degree(**i) <= order as i64) {
        return Ok(FrobeniusOutcome::Obstructed {
            at: u,
            reason: "coefficient not determined".into(),
        });
    }

    known.retain(|i, _| degree(*i) <= order as i64);
    let series = materialize(&known, rho, eps, &dy, order)?;
    Ok(FrobeniusOutcome::Solved {
        coefficients: known,
        series,
    })
}

/// Expand `x^(rho+u) = x^rho (1 + u log x)` and attach `y^(D/z)`.
fn materialize(
    coeffs: &BTreeMap<Idx, DualCoeff>,
    rho: HalfInt,
    eps: bool,
    dy: &CohElem,
    order: u32,
) -> Result<LogSeries, GkzError> {
    let ring = dy.ring();
    let top = HalfInt::int(order as i64) + rho;
    let mut s = LogSeries::new(Frame::XY, ring, top);
    for (&(i, j), c) in coeffs {
        let e1 = rho + HalfInt::int(i);
        let e2 = HalfInt::int(j);
        s.add_term(SeriesKey::new(e1, e2, 0, 0), c.clone())?;
        if eps {
            let lg = DualCoeff {
                re: CohElem::zero(ring),
                inf: c.re.clone(),
            };
            s.add_term(SeriesKey::new(e1, e2, 1, 0), lg)?;
        }
    }
    if !dy.is_zero() {
        let pre = LogSeries::exp_prefactor(dy, 2, Frame::XY, top)?;
        s = s.series_mul(&pre)?;
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanEntry {
    pub rho: HalfInt,
    pub families: Vec<SeedFamily>,
}

impl ScanEntry {
    pub fn admissible(&self) -> bool {
        !self.families.is_empty()
    }
}

/// Try `rho = k/2` for `0 <= k <= max_twice` with both seed families.
pub fn scan_exponents(
    sys: &OperatorSystem,
    spec: &ModelSpec,
    max_twice: u32,
    order: u32,
) -> Result<Vec<ScanEntry>, GkzError> {
    let mut out = Vec::new();
    for k in 0..=max_twice {
        let rho = HalfInt::from_twice(k as i64);
        let mut families = Vec::new();
        for fam in [SeedFamily::Component, SeedFamily::Extended] {
            if frobenius_solve(sys, spec, rho, fam, order)?.is_solved() {
                families.push(fam);
            }
        }
        out.push(ScanEntry { rho, families });
    }
    Ok(out)
}

/// The admissible exponents of a scan.
pub fn admissible_exponents(scan: &[ScanEntry]) -> Vec<HalfInt> {
    scan.iter().filter(|e| e.admissible()).map(|e| e.rho).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkz::{build_ibar_y, transformed_system, verify_annihilation, IbarPolicy, ModelId};

    #[test]
    fn scan_finds_zero_and_half() {
        for id in ModelId::ALL {
            let spec = ModelSpec::new(id);
            let sys = transformed_system(&spec).unwrap();
            let scan = scan_exponents(&sys, &spec, 4, 3).unwrap();
            assert_eq!(admissible_exponents(&scan), vec![HalfInt::ZERO, HalfInt::HALF], "{id}");
        }
    }

    #[test]
    fn component_solution_is_the_transformed_series() {
        let spec = ModelSpec::new(ModelId::T24);
        let sys = transformed_system(&spec).unwrap();
        let out = frobenius_solve(&sys, &spec, HalfInt::ZERO, SeedFamily::Component, 4).unwrap();
        let s = out.series().unwrap();
        let ibar = build_ibar_y(&spec, 4, IbarPolicy::Structural).unwrap();
        assert!(s.agrees_through(&ibar, HalfInt::int(4)).unwrap());
        assert!(verify_annihilation(&sys, s).unwrap().all_zero());
    }

    #[test]
    fn extended_solution_has_infinitesimal_part() {
        let spec = ModelSpec::new(ModelId::Local);
        let sys = transformed_system(&spec).unwrap();
        let out = frobenius_solve(&sys, &spec, HalfInt::HALF, SeedFamily::Extended, 4).unwrap();
        let s = out.series().unwrap();
        assert!(!s.u_project().1.is_zero());
        assert!(verify_annihilation(&sys, s).unwrap().all_zero());
    }
}
