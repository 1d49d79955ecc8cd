//! Strategies and properties shared by the randomized suites and the acceptance runner.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use extrans_core::algebra::{rat, CohElem, RatFuncZ, RingPresentation};
use extrans_core::gkz::{build_ibar_y, frobenius_solve, transformed_system, IbarPolicy, ModelId, ModelSpec, SeedFamily};
use extrans_core::operator::{DiffOp, OpKey};
use extrans_core::series::{DualCoeff, Frame, HalfInt, LogSeries, SeriesKey};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Outcome = Result<(), TestCaseError>;

pub const CASES: u32 = 128;
const SERIES_ORDER: i64 = 4;

// ---- cohomology rings ----

fn rings() -> [Arc<RingPresentation>; 2] {
    [RingPresentation::x_ambient(), RingPresentation::y_ambient()]
}

/// `c z^k` with small rational `c`.
fn scalar() -> impl Strategy<Value = RatFuncZ> {
    (-6i64..=6, 1i64..=4, -1i64..=2).prop_map(|(n, d, k)| RatFuncZ::monomial(rat(n, d), k))
}

fn elem(ring: Arc<RingPresentation>) -> impl Strategy<Value = CohElem> {
    let dim = ring.dim();
    prop::collection::vec(scalar(), dim).prop_map(move |coords| CohElem::from_dense(&ring, coords))
}

/// Three elements of one ring.
pub fn triple() -> impl Strategy<Value = (CohElem, CohElem, CohElem)> {
    (0usize..2).prop_flat_map(|i| {
        let r = rings()[i].clone();
        (elem(r.clone()), elem(r.clone()), elem(r))
    })
}

/// An element with nonzero constant term.
pub fn unit() -> impl Strategy<Value = CohElem> {
    (0usize..2, 1i64..=5, 1i64..=3).prop_flat_map(|(i, n, d)| {
        let r = rings()[i].clone();
        elem(r.clone()).prop_map(move |e| &nilpotent_part(&e) + &CohElem::scalar(&r, RatFuncZ::from_rational(rat(n, d))))
    })
}

fn nilpotent_part(a: &CohElem) -> CohElem {
    a - &CohElem::scalar(a.ring(), a.degree_zero().clone())
}

pub fn addition_is_an_abelian_group((a, b, c): (CohElem, CohElem, CohElem)) -> Outcome {
    let zero = CohElem::zero(a.ring());
    prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
    prop_assert_eq!(&a + &b, &b + &a);
    prop_assert_eq!(&a + &zero, a.clone());
    prop_assert!((&a + &(-&a)).is_zero());
    Ok(())
}

pub fn multiplication_is_commutative_associative_unital((a, b, c): (CohElem, CohElem, CohElem)) -> Outcome {
    prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    prop_assert_eq!(&a * &b, &b * &a);
    prop_assert_eq!(&a * &CohElem::one(a.ring()), a.clone());
    Ok(())
}

pub fn multiplication_distributes((a, b, c): (CohElem, CohElem, CohElem)) -> Outcome {
    prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    Ok(())
}

pub fn nilpotent_part_dies_at_the_cap((a, _, _): (CohElem, CohElem, CohElem)) -> Outcome {
    let nil = nilpotent_part(&a);
    prop_assert!(nil.pow(a.ring().nilpotency_cap() + 1).is_zero());
    prop_assert!(nil.ring_invert().is_err());
    Ok(())
}

pub fn unit_inversion_round_trips(a: CohElem) -> Outcome {
    let inv = a.ring_invert().unwrap();
    prop_assert_eq!(&a * &inv, CohElem::one(a.ring()));
    prop_assert_eq!(inv.ring_invert().unwrap(), a);
    Ok(())
}

pub fn dual_numbers_square_u_to_zero((a, b, c): (CohElem, CohElem, CohElem)) -> Outcome {
    let x = DualCoeff::new(a.clone(), b.clone()).unwrap();
    let y = DualCoeff::new(c.clone(), a.clone()).unwrap();
    let u = DualCoeff::u(a.ring());
    prop_assert!(u.try_mul(&u).unwrap().is_zero());
    let xy = x.try_mul(&y).unwrap();
    prop_assert_eq!(&xy, &y.try_mul(&x).unwrap());
    prop_assert_eq!(xy.re.clone(), &a * &c);
    prop_assert_eq!(xy.inf.clone(), &(&a * &a) + &(&b * &c));
    Ok(())
}

// ---- operators ----

fn term() -> impl Strategy<Value = (OpKey, (i64, i64))> {
    (-1i64..=2, -1i64..=2, 0u32..=2, 0u32..=2, 0u32..=1, -5i64..=5, 1i64..=3)
        .prop_map(|(e1, e2, d1, d2, z, n, d)| (OpKey::new(HalfInt::int(e1), HalfInt::int(e2), d1, d2, z), (n, d)))
}

/// A normal-ordered operator in `(q1, q2)` with one to three terms.
pub fn op() -> impl Strategy<Value = DiffOp> {
    prop::collection::vec(term(), 1..=3).prop_map(|terms| {
        let mut out = DiffOp::zero(Frame::Q);
        for (k, (n, d)) in terms {
            out.add_term(k, rat(n, d));
        }
        out
    })
}

/// Series over the ambient ring of `X` with at most one logarithm per term.
pub fn series() -> impl Strategy<Value = LogSeries> {
    let ring = RingPresentation::x_ambient();
    let dim = ring.dim();
    let coeff = (0..dim, -4i64..=4, 0i64..=1);
    prop::collection::vec((0i64..=2, 0i64..=2, 0u32..=1, 0u32..=1, coeff), 1..=4).prop_map(move |terms| {
        let mut s = LogSeries::new(Frame::Q, &ring, HalfInt::int(SERIES_ORDER));
        for (e1, e2, l1, l2, (i, n, k)) in terms {
            if l1 + l2 > 1 {
                continue;
            }
            let mut coords = vec![RatFuncZ::default(); dim];
            coords[0] = RatFuncZ::from_int(1);
            coords[i] = &coords[i] + &RatFuncZ::monomial(rat(n, 1), k);
            let c = DualCoeff::real(CohElem::from_dense(&ring, coords));
            s.add_term(SeriesKey::new(HalfInt::int(e1), HalfInt::int(e2), l1, l2), c).unwrap();
        }
        s
    })
}

fn same(a: &LogSeries, b: &LogSeries) -> bool {
    let through = if a.order() <= b.order() { a.order() } else { b.order() };
    a.agrees_through(b, through).unwrap()
}

pub fn composition_is_associative((a, b, c): (DiffOp, DiffOp, DiffOp)) -> Outcome {
    let left = a.compose(&b).unwrap().compose(&c).unwrap();
    let right = a.compose(&b.compose(&c).unwrap()).unwrap();
    prop_assert_eq!(left, right);
    let left = a.compose(&(&b + &c)).unwrap();
    let right = &a.compose(&b).unwrap() + &a.compose(&c).unwrap();
    prop_assert_eq!(left, right);
    Ok(())
}

pub fn derivation_past_a_monomial_shifts_by_its_exponent((a1, a2, slot): (i64, i64, u8)) -> Outcome {
    let v = DiffOp::vars(Frame::Q, a1, a2);
    let d = DiffOp::delta(Frame::Q, slot);
    let commutator = d.compose(&v).unwrap().try_sub(&v.compose(&d).unwrap()).unwrap();
    let a = if slot == 1 { a1 } else { a2 };
    prop_assert_eq!(commutator, v.scale(&rat(a, 1)));
    Ok(())
}

pub fn commutator_acts_as_difference_of_actions((a, b, f): (DiffOp, DiffOp, LogSeries)) -> Outcome {
    let ab = a.compose(&b).unwrap().try_sub(&b.compose(&a).unwrap()).unwrap();
    let direct = ab.apply(&f).unwrap();
    let nested = a.apply(&b.apply(&f).unwrap()).unwrap().try_sub(&b.apply(&a.apply(&f).unwrap()).unwrap()).unwrap();
    prop_assert!(same(&direct, &nested));
    Ok(())
}

pub fn composition_acts_as_nested_application((a, b, f): (DiffOp, DiffOp, LogSeries)) -> Outcome {
    let direct = a.compose(&b).unwrap().apply(&f).unwrap();
    let nested = a.apply(&b.apply(&f).unwrap()).unwrap();
    prop_assert!(same(&direct, &nested));
    Ok(())
}

pub fn frame_change_is_a_ring_homomorphism((a, b): (DiffOp, DiffOp)) -> Outcome {
    let ab = a.compose(&b).unwrap().change_frame().unwrap();
    let split = a.change_frame().unwrap().compose(&b.change_frame().unwrap()).unwrap();
    prop_assert_eq!(ab, split);
    let sum = (&a + &b).change_frame().unwrap();
    prop_assert_eq!(sum, &a.change_frame().unwrap() + &b.change_frame().unwrap());
    Ok(())
}

pub fn derivations_satisfy_leibniz((f, g, slot): (LogSeries, LogSeries, u8)) -> Outcome {
    let d = DiffOp::delta(Frame::Q, slot);
    let lhs = d.apply(&f.series_mul(&g).unwrap()).unwrap();
    let rhs = d
        .apply(&f)
        .unwrap()
        .series_mul(&g)
        .unwrap()
        .try_add(&f.series_mul(&d.apply(&g).unwrap()).unwrap())
        .unwrap();
    prop_assert!(same(&lhs, &rhs));
    Ok(())
}

// ---- Frobenius solutions ----

type Pair = (LogSeries, LogSeries);

/// Frobenius solution at exponent 0 and the closed-form series, per model and order.
fn pair(id: ModelId, order: u32) -> Pair {
    static CACHE: OnceLock<Mutex<HashMap<(ModelId, u32), Pair>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
    cache
        .entry((id, order))
        .or_insert_with(|| {
            let spec = ModelSpec::new(id);
            let sys = transformed_system(&spec).unwrap();
            let solved = frobenius_solve(&sys, &spec, HalfInt::ZERO, SeedFamily::Component, order).unwrap();
            let closed = build_ibar_y(&spec, order, IbarPolicy::Structural).unwrap();
            (solved.series().unwrap().clone(), closed)
        })
        .clone()
}

pub type FrobeniusCase = (ModelId, u32, Vec<(i64, i64, i64)>, i64, u32);

pub fn frobenius_case() -> impl Strategy<Value = FrobeniusCase> {
    (
        prop::sample::select(ModelId::ALL.to_vec()),
        2u32..=4,
        prop::collection::vec((-5i64..=5, 1i64..=3, -1i64..=1), 6),
        0i64..=4,
        0u32..=3,
    )
}

/// Twisted by a random class, the solution and the closed form agree coefficientwise.
pub fn solution_at_zero_matches_closed_form((id, order, coords, e2, l2): FrobeniusCase) -> Outcome {
    let (solved, closed) = pair(id, order);
    let ring = closed.ring().clone();
    let c = CohElem::from_dense(&ring, coords.iter().map(|&(n, d, k)| RatFuncZ::monomial(rat(n, d), k)).collect());
    let through = HalfInt::int(order as i64);
    prop_assert!(solved.mul_coh(&c).unwrap().agrees_through(&closed.mul_coh(&c).unwrap(), through).unwrap());
    if e2 <= order as i64 {
        let key = SeriesKey::new(HalfInt::ZERO, HalfInt::int(e2), 0, l2);
        prop_assert_eq!(solved.coefficient(&key).unwrap(), closed.coefficient(&key).unwrap());
    }
    prop_assert!(!closed.truncate(through).is_zero());
    Ok(())
}
