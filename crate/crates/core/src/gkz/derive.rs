//! Box operators read off from termwise coefficient ratios, their reductions,
//! and the third-order operator obtained from a factorization identity.

use std::collections::BTreeMap;

use serde::Serialize;

use super::hyper::{FactorKind, HyperSeries};
use super::{build_i_x, GkzError, ModelId, ModelSpec};
use crate::algebra::rat;
use crate::operator::{DiffOp, OperatorSystem, Provenance};
use crate::series::{Frame, HalfInt, LogSeries};

/// Order at which candidate reductions are checked before being accepted.
const REDUCTION_PROBE: u32 = 4;

/// `p1 z d1 + p2 z d2 + m z`.
fn linear_form(frame: Frame, pairing: (i64, i64), m: i64) -> DiffOp {
    DiffOp::linear(frame, pairing.0, pairing.1, m)
}

/// A box operator `L(z d) - v^e R(z d)` with its left factors kept for reduction.
#[derive(Clone, Debug)]
pub struct BoxOperator {
    pub op: DiffOp,
    pub left: Vec<DiffOp>,
}

/// For lattice direction `e`, `A_{n+e} / A_n` is a ratio of shifted linear
/// forms. Factors growing `A` go to the right next to `v^e`; the rest go left.
pub fn box_operator(hs: &HyperSeries, dir: (i64, i64)) -> Result<BoxOperator, GkzError> {
    let frame = hs.frame;
    let mut left = Vec::new();
    let mut right = Vec::new();
    for f in &hs.factors {
        let c = f.pairing.0 * dir.0 + f.pairing.1 * dir.1;
        match (f.kind, c > 0) {
            (_, _) if c == 0 => {}
            (FactorKind::Divisor, true) => left.extend((0..c).map(|m| linear_form(frame, f.pairing, -m))),
            (FactorKind::Divisor, false) => right.extend((0..-c).map(|m| linear_form(frame, f.pairing, -m))),
            (_, true) => right.extend((1..=c).map(|m| linear_form(frame, f.pairing, m))),
            (_, false) => left.extend((1..=-c).map(|m| linear_form(frame, f.pairing, m))),
        }
    }
    let l = DiffOp::product(frame, &left)?;
    let r = DiffOp::product(frame, &right)?;
    let shift = DiffOp::monomial(
        frame,
        crate::operator::OpKey::new(HalfInt::int(dir.0), HalfInt::int(dir.1), 0, 0, 0),
        rat(1, 1),
    );
    let op = l.try_sub(&shift.compose(&r)?)?;
    Ok(BoxOperator { op, left })
}

/// Strip left factors shared by both sides of a box operator, keeping a
/// strip only if the quotient still annihilates `probe`.
pub fn reduce_box(b: &BoxOperator, probe: &LogSeries) -> Result<DiffOp, GkzError> {
    let mut op = b.op.clone();
    let mut distinct: Vec<&DiffOp> = Vec::new();
    for f in &b.left {
        if !distinct.contains(&f) {
            distinct.push(f);
        }
    }
    for f in distinct {
        while let Ok(q) = op.left_divide(f) {
            if !q.apply(probe)?.is_zero() {
                break;
            }
            op = q;
        }
    }
    Ok(op)
}

/// Known factorization `sum m_k box_k = P L`, as `(m1, m2, P)` at `z = 1`.
pub(crate) fn factorization_multipliers(id: ModelId) -> Option<(&'static str, &'static str, &'static str)> {
    match id {
        ModelId::Local => None,
        ModelId::T24 => Some(("2", "dq1^2*dq2", "(dq1 + dq2)*dq1")),
        ModelId::T33 => Some((
            "36",
            "-(36*dq1^3 + 45*dq1^2*dq2 + 25*dq1*dq2^2 + 5*dq2^3)",
            "(2*dq1 + dq2)^2",
        )),
    }
}

/// Solve `m1 box1 + m2 box2 = P L` for `L` on the homogenized operators.
pub fn factor_third_order(spec: &ModelSpec, box1: &DiffOp, box2: &DiffOp) -> Result<Option<DiffOp>, GkzError> {
    let Some((m1, m2, p)) = factorization_multipliers(spec.id) else {
        return Ok(None);
    };
    let w = spec.x_defect();
    let h = |s: &str| -> Result<DiffOp, GkzError> { Ok(DiffOp::parse(Frame::Q, s)?.homogenize((0, 0))?) };
    let lhs = h(m1)?.compose(box1)?.try_add(&h(m2)?.compose(box2)?)?;
    let lhs = lhs.homogenize(w)?;
    Ok(Some(lhs.left_divide(&h(p)?)?))
}

/// The GKZ system on the `X` side: both box operators, their reductions and,
/// where a factorization is known, the third-order operator. In the `(x, y)`
/// frame the same operators are returned after the change of variables.
pub fn derive_gkz(spec: &ModelSpec, frame: Frame) -> Result<OperatorSystem, GkzError> {
    let q_sys = derive_q_system(spec)?;
    match frame {
        Frame::Q => Ok(q_sys),
        Frame::XY => Ok(q_sys.change_frame()?),
        Frame::Y => derive_y_gkz(spec),
    }
}

fn derive_q_system(spec: &ModelSpec) -> Result<OperatorSystem, GkzError> {
    let hs = HyperSeries::x_side(spec);
    let probe = build_i_x(spec, REDUCTION_PROBE)?;
    let b1 = box_operator(&hs, (1, 0))?;
    let b2 = box_operator(&hs, (0, 1))?;
    let d1 = reduce_box(&b1, &probe)?;
    let d2 = reduce_box(&b2, &probe)?;
    let mut ops = vec![("box1".to_string(), b1.op.clone()), ("box2".to_string(), b2.op.clone())];
    if d1 != b1.op {
        ops.push(("D1".into(), d1));
    }
    if d2 != b2.op {
        ops.push(("D2".into(), d2));
    }
    if let Some(l) = factor_third_order(spec, &b1.op, &b2.op)? {
        ops.push(("L".into(), l));
    }
    Ok(OperatorSystem::new(spec.id.name(), Frame::Q, Provenance::Derived, ops)?)
}

/// The derived system moved to `(x, y)`.
pub fn transformed_system(spec: &ModelSpec) -> Result<OperatorSystem, GkzError> {
    derive_gkz(spec, Frame::XY)
}

/// The `Y`-side box operator in `y` and its reduction.
pub fn derive_y_gkz(spec: &ModelSpec) -> Result<OperatorSystem, GkzError> {
    let hs = HyperSeries::y_side(spec);
    let b = box_operator(&hs, (0, 1))?;
    let probe = hs.build(REDUCTION_PROBE)?;
    let d = reduce_box(&b, &probe)?;
    let mut ops = vec![("box".to_string(), b.op.clone())];
    if d != b.op {
        ops.push(("D".into(), d));
    }
    Ok(OperatorSystem::new(spec.id.name(), Frame::Y, Provenance::Derived, ops)?)
}

/// Residual of every operator applied to a series, restricted to the trust window.
#[derive(Clone, Debug)]
pub struct AnnihilationReport {
    pub residuals: Vec<(String, LogSeries)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnnihilationSummary {
    pub operator: String,
    pub trusted_through: HalfInt,
    pub nonzero_terms: usize,
}

impl AnnihilationReport {
    pub fn all_zero(&self) -> bool {
        self.residuals.iter().all(|(_, r)| r.is_zero())
    }

    pub fn summary(&self) -> Vec<AnnihilationSummary> {
        self.residuals
            .iter()
            .map(|(n, r)| AnnihilationSummary {
                operator: n.clone(),
                trusted_through: r.order(),
                nonzero_terms: r.len(),
            })
            .collect()
    }

    pub fn by_name(&self) -> BTreeMap<String, bool> {
        self.residuals.iter().map(|(n, r)| (n.clone(), r.is_zero())).collect()
    }
}

pub fn verify_annihilation(sys: &OperatorSystem, f: &LogSeries) -> Result<AnnihilationReport, GkzError> {
    let mut residuals = Vec::new();
    for (name, op) in sys.operators() {
        residuals.push((name.clone(), op.apply(f)?));
    }
    Ok(AnnihilationReport { residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> DiffOp {
        DiffOp::parse(Frame::Q, s).unwrap()
    }

    #[test]
    fn local_boxes_match_closed_forms() {
        let spec = ModelSpec::new(ModelId::Local);
        let sys = derive_gkz(&spec, Frame::Q).unwrap();
        assert_eq!(sys.get("box2").unwrap(), &q("z*dq2*(z*dq2 - z*dq1) - q2"));
        assert_eq!(
            sys.get("box1").unwrap(),
            &q("(z*dq1)^5 - q1*(2*z*dq1 + z)^2*(2*z*dq1 + 2*z)^2*(z*dq2 - z*dq1)")
        );
        assert_eq!(
            sys.get("D1").unwrap(),
            &q("(z*dq1)^3 - 4*q1*(2*z*dq1 + z)^2*(z*dq2 - z*dq1)")
        );
    }

    #[test]
    fn y_box_for_t24() {
        let spec = ModelSpec::new(ModelId::T24);
        let sys = derive_y_gkz(&spec).unwrap();
        let want = DiffOp::parse(
            Frame::Y,
            "(z*dy)^6 - y*(2*z*dy + z)*(2*z*dy + 2*z)*(4*z*dy + z)*(4*z*dy + 2*z)*(4*z*dy + 3*z)*(4*z*dy + 4*z)",
        )
        .unwrap();
        assert_eq!(sys.get("box").unwrap(), &want);
    }
}
