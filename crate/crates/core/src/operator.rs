//! Log-differential operators in normal order: every term is
//! `v1^a1 v2^a2 z^k d1^i1 d2^i2` with variables to the left of derivations.
//!
//! `d_k` is the log derivation `v_k d/dv_k`, so `d_k v_k^a = v_k^a (d_k + a)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{rat, QPoly, RatFuncZ, Rational};
use crate::series::{DualCoeff, Frame, HalfInt, LogSeries, SeriesError, SeriesKey};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error("frame mismatch: {0} vs {1}")]
    FrameMismatch(Frame, Frame),
    #[error("operator is already in frame {0}")]
    AlreadyInFrame(Frame),
    #[error("window underflow: result needs exponent floor <= {needed_floor} (series floor {floor})")]
    WindowUnderflow { needed_floor: HalfInt, floor: HalfInt },
    #[error("trust window empty: operator lowers total degree by {shift}, series order is {order}")]
    TrustWindowEmpty { shift: HalfInt, order: HalfInt },
    #[error("not left-divisible; remainder {0}")]
    NotDivisible(String),
    #[error("divisor must be free of variables and nonzero")]
    BadDivisor,
    #[error("weighted degree of {0} is not integral")]
    NonIntegralWeight(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Exponents of one normal-ordered term.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpKey {
    pub e1: HalfInt,
    pub e2: HalfInt,
    pub d1: u32,
    pub d2: u32,
    pub zpow: u32,
}

impl OpKey {
    pub const fn new(e1: HalfInt, e2: HalfInt, d1: u32, d2: u32, zpow: u32) -> Self {
        OpKey { e1, e2, d1, d2, zpow }
    }

    pub fn shift_total(&self) -> HalfInt {
        self.e1 + self.e2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOp {
    frame: Frame,
    terms: BTreeMap<OpKey, Rational>,
}

fn binom(n: u32, k: u32) -> Rational {
    let mut acc = Rational::one();
    for i in 0..k {
        acc *= rat((n - i) as i64, (i + 1) as i64);
    }
    acc
}

fn falling(n: u32, k: u32) -> Rational {
    (0..k).fold(Rational::one(), |acc, i| acc * rat((n - i) as i64, 1))
}

fn rpow(base: &Rational, e: u32) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * base)
}

/// Coefficients of `(d + a)^n` as `[(r, C(n,r) a^(n-r))]`.
fn shifted_power(n: u32, a: &Rational) -> Vec<(u32, Rational)> {
    (0..=n)
        .map(|r| (r, binom(n, r) * rpow(a, n - r)))
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

impl DiffOp {
    pub fn zero(frame: Frame) -> Self {
        DiffOp {
            frame,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(frame: Frame, c: Rational) -> Self {
        Self::monomial(frame, OpKey::new(HalfInt::ZERO, HalfInt::ZERO, 0, 0, 0), c)
    }

    pub fn one(frame: Frame) -> Self {
        Self::constant(frame, Rational::one())
    }

    pub fn int(frame: Frame, n: i64) -> Self {
        Self::constant(frame, rat(n, 1))
    }

    pub fn monomial(frame: Frame, key: OpKey, c: Rational) -> Self {
        let mut op = Self::zero(frame);
        op.add_term(key, c);
        op
    }

    pub fn z(frame: Frame) -> Self {
        Self::monomial(frame, OpKey::new(HalfInt::ZERO, HalfInt::ZERO, 0, 0, 1), Rational::one())
    }

    /// `v_slot^e`.
    pub fn var(frame: Frame, slot: u8, e: HalfInt) -> Self {
        let key = if slot == 1 {
            OpKey::new(e, HalfInt::ZERO, 0, 0, 0)
        } else {
            OpKey::new(HalfInt::ZERO, e, 0, 0, 0)
        };
        Self::monomial(frame, key, Rational::one())
    }

    /// `v1^a1 v2^a2` with integer exponents.
    pub fn vars(frame: Frame, a1: i64, a2: i64) -> Self {
        Self::monomial(frame, OpKey::new(HalfInt::int(a1), HalfInt::int(a2), 0, 0, 0), Rational::one())
    }

    pub fn delta(frame: Frame, slot: u8) -> Self {
        let key = if slot == 1 {
            OpKey::new(HalfInt::ZERO, HalfInt::ZERO, 1, 0, 0)
        } else {
            OpKey::new(HalfInt::ZERO, HalfInt::ZERO, 0, 1, 0)
        };
        Self::monomial(frame, key, Rational::one())
    }

    /// `z * d_slot`.
    pub fn zdelta(frame: Frame, slot: u8) -> Self {
        let mut op = Self::delta(frame, slot);
        op = op.mul_z_pow(1);
        op
    }

    /// `c1 z d1 + c2 z d2 + c0 z`, the shape of every factor in a box operator.
    pub fn linear(frame: Frame, c1: i64, c2: i64, c0: i64) -> Self {
        let mut op = Self::zero(frame);
        op.add_term(OpKey::new(HalfInt::ZERO, HalfInt::ZERO, 1, 0, 1), rat(c1, 1));
        op.add_term(OpKey::new(HalfInt::ZERO, HalfInt::ZERO, 0, 1, 1), rat(c2, 1));
        op.add_term(OpKey::new(HalfInt::ZERO, HalfInt::ZERO, 0, 0, 1), rat(c0, 1));
        op
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OpKey, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, key: &OpKey) -> Rational {
        self.terms.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, key: OpKey, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    fn check_frame(&self, other: &DiffOp) -> Result<(), OpError> {
        if self.frame != other.frame {
            return Err(OpError::FrameMismatch(self.frame, other.frame));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &DiffOp) -> Result<DiffOp, OpError> {
        self.check_frame(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &DiffOp) -> Result<DiffOp, OpError> {
        self.try_add(&-other)
    }

    pub fn scale(&self, c: &Rational) -> DiffOp {
        let mut out = DiffOp::zero(self.frame);
        if c.is_zero() {
            return out;
        }
        for (k, v) in &self.terms {
            out.terms.insert(*k, v * c);
        }
        out
    }

    pub fn mul_z_pow(&self, k: u32) -> DiffOp {
        let mut out = DiffOp::zero(self.frame);
        for (key, v) in &self.terms {
            let mut key = *key;
            key.zpow += k;
            out.terms.insert(key, v.clone());
        }
        out
    }

    /// Normal-ordered product `self * other`.
    pub fn compose(&self, other: &DiffOp) -> Result<DiffOp, OpError> {
        self.check_frame(other)?;
        let mut out = DiffOp::zero(self.frame);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let c = ca * cb;
                let s1 = shifted_power(ka.d1, &kb.e1.to_rational());
                let s2 = shifted_power(ka.d2, &kb.e2.to_rational());
                for (r1, c1) in &s1 {
                    for (r2, c2) in &s2 {
                        let key = OpKey::new(ka.e1 + kb.e1, ka.e2 + kb.e2, r1 + kb.d1, r2 + kb.d2, ka.zpow + kb.zpow);
                        out.add_term(key, &c * c1 * c2);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> DiffOp {
        let mut acc = DiffOp::one(self.frame);
        for _ in 0..e {
            acc = acc.compose(self).expect("same frame");
        }
        acc
    }

    /// Product of a list of operators, left to right.
    pub fn product(frame: Frame, factors: &[DiffOp]) -> Result<DiffOp, OpError> {
        factors.iter().try_fold(DiffOp::one(frame), |acc, f| acc.compose(f))
    }

    /// Largest total derivation order.
    pub fn delta_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.d1 + k.d2).max().unwrap_or(0)
    }

    /// Most negative total variable shift, or zero.
    pub fn lowering(&self) -> HalfInt {
        self.terms
            .keys()
            .map(OpKey::shift_total)
            .filter(|s| *s < HalfInt::ZERO)
            .min()
            .unwrap_or(HalfInt::ZERO)
    }

    /// Distinct variable monomials `(a1, a2)` in the support.
    pub fn shifts(&self) -> Vec<(HalfInt, HalfInt)> {
        let mut v: Vec<_> = self.terms.keys().map(|k| (k.e1, k.e2)).collect();
        v.dedup();
        v.sort();
        v.dedup();
        v
    }

    /// The part of the operator carrying the variable monomial `v1^a1 v2^a2`.
    pub fn part_at(&self, a1: HalfInt, a2: HalfInt) -> DiffOp {
        let mut out = DiffOp::zero(self.frame);
        for (k, c) in &self.terms {
            if k.e1 == a1 && k.e2 == a2 {
                out.terms.insert(*k, c.clone());
            }
        }
        out
    }

    /// Apply to a series. The result's order drops by the largest total
    /// degree the operator can lower, so every returned coefficient is exact.
    pub fn apply(&self, f: &LogSeries) -> Result<LogSeries, OpError> {
        if self.frame != f.frame() {
            return Err(OpError::FrameMismatch(self.frame, f.frame()));
        }
        let shift = self.lowering();
        let order = f.order() + shift;
        if order < HalfInt::ZERO {
            return Err(OpError::TrustWindowEmpty { shift, order: f.order() });
        }
        let mut needed = f.floor();
        for ka in self.terms.keys() {
            for (ks, _) in f.terms() {
                needed = if ka.e1 + ks.e1 < needed { ka.e1 + ks.e1 } else { needed };
                needed = if ka.e2 + ks.e2 < needed { ka.e2 + ks.e2 } else { needed };
            }
        }
        if needed < f.floor() {
            return Err(OpError::WindowUnderflow {
                needed_floor: needed,
                floor: f.floor(),
            });
        }

        // Group by (variables, derivations); the z-dependence becomes a polynomial.
        let mut grouped: BTreeMap<(HalfInt, HalfInt, u32, u32), QPoly> = BTreeMap::new();
        for (k, c) in &self.terms {
            let p = grouped.entry((k.e1, k.e2, k.d1, k.d2)).or_default();
            *p = &*p + &QPoly::monomial(c.clone(), k.zpow as usize);
        }

        let mut acc: BTreeMap<SeriesKey, DualCoeff> = BTreeMap::new();
        for ((a1, a2, i1, i2), zp) in &grouped {
            let zf = RatFuncZ::from_poly(zp.clone());
            for (ks, c) in f.terms() {
                let tgt_total = ks.total() + *a1 + *a2;
                if tgt_total > order {
                    continue;
                }
                let e1 = ks.e1.to_rational();
                let e2 = ks.e2.to_rational();
                let base = c.scale(&zf);
                for r1 in 0..=(*i1).min(ks.l1) {
                    let c1 = binom(*i1, r1) * rpow(&e1, i1 - r1) * falling(ks.l1, r1);
                    if c1.is_zero() {
                        continue;
                    }
                    for r2 in 0..=(*i2).min(ks.l2) {
                        let c2 = binom(*i2, r2) * rpow(&e2, i2 - r2) * falling(ks.l2, r2);
                        if c2.is_zero() {
                            continue;
                        }
                        let key = SeriesKey::new(ks.e1 + *a1, ks.e2 + *a2, ks.l1 - r1, ks.l2 - r2);
                        let term = base.scale_rational(&(&c1 * &c2));
                        match acc.get_mut(&key) {
                            Some(old) => *old = &*old + &term,
                            None => {
                                acc.insert(key, term);
                            }
                        }
                    }
                }
            }
        }
        let mut out = f.empty_like();
        out.set_order(order);
        for (k, c) in acc {
            out.add_term(k, c)?;
        }
        Ok(out)
    }

    /// Rewrite a `(q1, q2)` operator in `(x, y)` via `q1 = 1/x`, `q2 = x y`,
    /// so `d_q1 = d_y - d_x` and `d_q2 = d_y`.
    pub fn change_frame(&self) -> Result<DiffOp, OpError> {
        if self.frame != Frame::Q {
            return Err(OpError::AlreadyInFrame(self.frame));
        }
        let mut out = DiffOp::zero(Frame::XY);
        for (k, c) in &self.terms {
            let ex = k.e2 - k.e1;
            let ey = k.e2;
            // (d_y - d_x)^i1 d_y^i2
            for r in 0..=k.d1 {
                let sign = if r % 2 == 0 { rat(1, 1) } else { rat(-1, 1) };
                let coeff = c * binom(k.d1, r) * sign;
                out.add_term(OpKey::new(ex, ey, r, k.d1 - r + k.d2, k.zpow), coeff);
            }
        }
        Ok(out)
    }

    /// Specialize `z = 1`.
    pub fn dehomogenize(&self) -> DiffOp {
        let mut out = DiffOp::zero(self.frame);
        for (k, c) in &self.terms {
            let mut key = *k;
            key.zpow = 0;
            out.add_term(key, c.clone());
        }
        out
    }

    /// Restore `z`-homogeneity after setting `z = 1`: a term
    /// `v^a d^I` gets `z^(D - w.a)`, where `w` weights the variables and `D` is
    /// the largest weighted degree `|I| + w.a`. Each `d` then appears as `z d`.
    pub fn homogenize(&self, weights: (i64, i64)) -> Result<DiffOp, OpError> {
        let flat = self.dehomogenize();
        let weight = |k: &OpKey| -> Result<i64, OpError> {
            let twice = weights.0 * k.e1.twice() + weights.1 * k.e2.twice();
            if twice % 2 != 0 {
                return Err(OpError::NonIntegralWeight(format!("{k:?}")));
            }
            Ok(twice / 2)
        };
        let mut top = i64::MIN;
        for k in flat.terms.keys() {
            top = top.max((k.d1 + k.d2) as i64 + weight(k)?);
        }
        let mut out = DiffOp::zero(self.frame);
        for (k, c) in &flat.terms {
            let mut key = *k;
            key.zpow = (top - weight(k)?) as u32;
            out.add_term(key, c.clone());
        }
        Ok(out)
    }

    /// Solve `divisor * q = self` for `q`, where `divisor` involves only
    /// derivations and `z`. Each variable-monomial part is divided exactly by
    /// the shifted divisor.
    pub fn left_divide(&self, divisor: &DiffOp) -> Result<DiffOp, OpError> {
        self.check_frame(divisor)?;
        if divisor.is_zero() || divisor.terms.keys().any(|k| k.e1 != HalfInt::ZERO || k.e2 != HalfInt::ZERO) {
            return Err(OpError::BadDivisor);
        }
        let mut out = DiffOp::zero(self.frame);
        for (a1, a2) in self.shifts() {
            // divisor(d) v^a = v^a divisor(d + a)
            let shifted = divisor.compose(&DiffOp::var(self.frame, 1, a1).compose(&DiffOp::var(self.frame, 2, a2))?)?;
            let num = poly_of(&self.part_at(a1, a2));
            let den = poly_of(&shifted);
            let quo = poly_div(&num, &den).ok_or_else(|| OpError::NotDivisible(self.part_at(a1, a2).to_string()))?;
            for ((d1, d2, zp), c) in quo {
                out.add_term(OpKey::new(a1, a2, d1, d2, zp), c);
            }
        }
        Ok(out)
    }

    /// Parse an expression such as `(z*dq1)^3 - 4*q1*(2*z*dq1 + z)^2`.
    /// Juxtaposition and `*` both mean composition, left to right.
    pub fn parse(frame: Frame, src: &str) -> Result<DiffOp, OpError> {
        let mut p = Parser {
            frame,
            src: src.as_bytes(),
            pos: 0,
        };
        let op = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(op)
    }
}

type Poly3 = BTreeMap<(u32, u32, u32), Rational>;

fn poly_of(op: &DiffOp) -> Poly3 {
    op.terms.iter().map(|(k, c)| ((k.d1, k.d2, k.zpow), c.clone())).collect()
}

fn poly_mul(a: &Poly3, b: &Poly3) -> Poly3 {
    let mut out = Poly3::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let k = (ka.0 + kb.0, ka.1 + kb.1, ka.2 + kb.2);
            let e = out.entry(k).or_insert_with(Rational::zero);
            *e += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn poly_sub_assign(a: &mut Poly3, b: &Poly3) {
    for (k, c) in b {
        let e = a.entry(*k).or_insert_with(Rational::zero);
        *e -= c;
    }
    a.retain(|_, c| !c.is_zero());
}

/// Lex-ordered leading monomial with exponent tuple `(d1, d2, z)`.
fn leading(p: &Poly3) -> Option<((u32, u32, u32), Rational)> {
    p.iter().next_back().map(|(k, c)| (*k, c.clone()))
}

/// Exact multivariate division; `None` when a remainder is left.
fn poly_div(num: &Poly3, den: &Poly3) -> Option<Poly3> {
    let (dk, dc) = leading(den)?;
    let mut rem = num.clone();
    let mut quo = Poly3::new();
    while let Some((rk, rc)) = leading(&rem) {
        if rk.0 < dk.0 || rk.1 < dk.1 || rk.2 < dk.2 {
            return None;
        }
        let mk = (rk.0 - dk.0, rk.1 - dk.1, rk.2 - dk.2);
        let mc = rc / &dc;
        let mono: Poly3 = [(mk, mc.clone())].into_iter().collect();
        poly_sub_assign(&mut rem, &poly_mul(&mono, den));
        *quo.entry(mk).or_insert_with(Rational::zero) += mc;
    }
    quo.retain(|_, c| !c.is_zero());
    Some(quo)
}

/// `sum_i m_i * a_i - sum_j n_j * b_j`; zero means the identity holds.
pub fn check_identity(lhs: &[(DiffOp, DiffOp)], rhs: &[(DiffOp, DiffOp)]) -> Result<DiffOp, OpError> {
    let frame = lhs
        .first()
        .or(rhs.first())
        .map(|(m, _)| m.frame())
        .unwrap_or(Frame::Q);
    let mut acc = DiffOp::zero(frame);
    for (m, a) in lhs {
        acc = acc.try_add(&m.compose(a)?)?;
    }
    for (m, b) in rhs {
        acc = acc.try_sub(&m.compose(b)?)?;
    }
    Ok(acc)
}

impl Add for &DiffOp {
    type Output = DiffOp;
    fn add(self, rhs: &DiffOp) -> DiffOp {
        self.try_add(rhs).expect("frame mismatch in operator sum")
    }
}

impl Sub for &DiffOp {
    type Output = DiffOp;
    fn sub(self, rhs: &DiffOp) -> DiffOp {
        self.try_sub(rhs).expect("frame mismatch in operator difference")
    }
}

impl Neg for &DiffOp {
    type Output = DiffOp;
    fn neg(self) -> DiffOp {
        self.scale(&rat(-1, 1))
    }
}

fn delta_name(frame: Frame, slot: u8) -> String {
    let (a, b) = frame.var_names();
    format!("d{}", if slot == 1 { a } else { b })
}

fn fmt_exp(e: HalfInt) -> String {
    if e.is_integer() && e >= HalfInt::ZERO {
        format!("{e}")
    } else {
        format!("({e})")
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let (v1, v2) = self.frame.var_names();
        for (i, (k, c)) in self.terms.iter().rev().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut parts: Vec<String> = Vec::new();
            if k.e1 != HalfInt::ZERO {
                parts.push(if k.e1 == HalfInt::ONE { v1.to_string() } else { format!("{v1}^{}", fmt_exp(k.e1)) });
            }
            if k.e2 != HalfInt::ZERO {
                parts.push(if k.e2 == HalfInt::ONE { v2.to_string() } else { format!("{v2}^{}", fmt_exp(k.e2)) });
            }
            match k.zpow {
                0 => {}
                1 => parts.push("z".into()),
                n => parts.push(format!("z^{n}")),
            }
            for (slot, d) in [(1u8, k.d1), (2u8, k.d2)] {
                match d {
                    0 => {}
                    1 => parts.push(delta_name(self.frame, slot)),
                    n => parts.push(format!("{}^{n}", delta_name(self.frame, slot))),
                }
            }
            if !mag.is_one() || parts.is_empty() {
                crate::algebra::poly::fmt_rational(&mag, f)?;
                if !parts.is_empty() {
                    write!(f, "*")?;
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    frame: Frame,
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> OpError {
        OpError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<DiffOp, OpError> {
        let mut acc = if self.eat(b'-') { -&self.term()? } else { self.term()? };
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_factor(&mut self) -> bool {
        matches!(self.peek(), Some(c) if c == b'(' || c.is_ascii_alphanumeric())
    }

    fn term(&mut self) -> Result<DiffOp, OpError> {
        let mut acc = self.power()?;
        loop {
            if self.eat(b'*') {
                acc = acc.compose(&self.power()?)?;
            } else if self.eat(b'/') {
                let d = self.number()?;
                if d.is_zero() {
                    return Err(self.err("division by zero"));
                }
                acc = acc.scale(&d.recip());
            } else if self.starts_factor() {
                acc = acc.compose(&self.power()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn number(&mut self) -> Result<Rational, OpError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let n: num_bigint::BigInt = s.parse().map_err(|_| self.err("bad number"))?;
        Ok(Rational::from_integer(n))
    }

    /// Exponent: `n`, `-n`, or a parenthesized possibly-fractional value.
    fn exponent(&mut self) -> Result<Rational, OpError> {
        if self.eat(b'(') {
            let neg = self.eat(b'-');
            let mut v = self.number()?;
            if self.eat(b'/') {
                v /= self.number()?;
            }
            if !self.eat(b')') {
                return Err(self.err("expected ')'"));
            }
            Ok(if neg { -v } else { v })
        } else {
            let neg = self.eat(b'-');
            let v = self.number()?;
            Ok(if neg { -v } else { v })
        }
    }

    fn power(&mut self) -> Result<DiffOp, OpError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let e = self.exponent()?;
        let pure_var = base.len() == 1 && {
            let (k, c) = base.terms().next().unwrap();
            c.is_one() && k.d1 == 0 && k.d2 == 0 && k.zpow == 0
        };
        if pure_var {
            let (k, _) = base.terms().next().unwrap();
            let twice = |h: HalfInt| -> Result<HalfInt, OpError> {
                let v = h.to_rational() * &e * rat(2, 1);
                if !v.is_integer() {
                    return Err(self.err("exponent must be a half-integer"));
                }
                let t: i64 = v.to_integer().try_into().map_err(|_| self.err("exponent too large"))?;
                Ok(HalfInt::from_twice(t))
            };
            let key = OpKey::new(twice(k.e1)?, twice(k.e2)?, 0, 0, 0);
            return Ok(DiffOp::monomial(self.frame, key, Rational::one()));
        }
        if !e.is_integer() || e.is_negative() {
            return Err(self.err("only variables take negative or fractional powers"));
        }
        let n: u32 = e.to_integer().try_into().map_err(|_| self.err("exponent too large"))?;
        Ok(base.pow(n))
    }

    fn atom(&mut self) -> Result<DiffOp, OpError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(DiffOp::constant(self.frame, self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let (v1, v2) = self.frame.var_names();
                let fr = self.frame;
                match name {
                    "z" => Ok(DiffOp::z(fr)),
                    n if n == v1 && fr != Frame::Y => Ok(DiffOp::var(fr, 1, HalfInt::ONE)),
                    n if n == v2 => Ok(DiffOp::var(fr, 2, HalfInt::ONE)),
                    n if n == delta_name(fr, 1) && fr != Frame::Y => Ok(DiffOp::delta(fr, 1)),
                    n if n == delta_name(fr, 2) => Ok(DiffOp::delta(fr, 2)),
                    _ => {
                        self.pos = start;
                        Err(self.err(&format!("unknown symbol '{name}'")))
                    }
                }
            }
            _ => Err(self.err("expected an operand")),
        }
    }
}

/// Where an operator system came from.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Printed,
    Derived,
    Transformed,
}

#[derive(Clone, Debug)]
pub struct OperatorSystem {
    pub model: String,
    frame: Frame,
    pub provenance: Provenance,
    operators: Vec<(String, DiffOp)>,
}

impl OperatorSystem {
    pub fn new(model: &str, frame: Frame, provenance: Provenance, operators: Vec<(String, DiffOp)>) -> Result<Self, OpError> {
        for (_, op) in &operators {
            if op.frame() != frame {
                return Err(OpError::FrameMismatch(frame, op.frame()));
            }
        }
        Ok(OperatorSystem {
            model: model.to_string(),
            frame,
            provenance,
            operators,
        })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn operators(&self) -> &[(String, DiffOp)] {
        &self.operators
    }

    pub fn get(&self, name: &str) -> Option<&DiffOp> {
        self.operators.iter().find(|(n, _)| n == name).map(|(_, o)| o)
    }

    pub fn push(&mut self, name: &str, op: DiffOp) -> Result<(), OpError> {
        if op.frame() != self.frame {
            return Err(OpError::FrameMismatch(self.frame, op.frame()));
        }
        self.operators.push((name.to_string(), op));
        Ok(())
    }

    /// Every operator moved to `(x, y)`.
    pub fn change_frame(&self) -> Result<OperatorSystem, OpError> {
        let ops = self
            .operators
            .iter()
            .map(|(n, o)| Ok((n.clone(), o.change_frame()?)))
            .collect::<Result<Vec<_>, OpError>>()?;
        OperatorSystem::new(&self.model, Frame::XY, Provenance::Transformed, ops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{CohElem, RingPresentation};

    fn q(s: &str) -> DiffOp {
        DiffOp::parse(Frame::Q, s).unwrap()
    }

    fn xy(s: &str) -> DiffOp {
        DiffOp::parse(Frame::XY, s).unwrap()
    }

    #[test]
    fn commutation_rule() {
        assert_eq!(q("dq1").compose(&q("q1")).unwrap(), q("q1*dq1 + q1"));
        assert!(q("dq1*dq2 - dq2*dq1").is_zero());
        assert_eq!(xy("dx").compose(&xy("x^-1")).unwrap(), xy("x^(-1)*dx - x^(-1)"));
    }

    #[test]
    fn display_round_trips() {
        let a = q("(z*dq1)^3 - 4*q1*(2*z*dq1 + z)^2*(z*dq2 - z*dq1)");
        assert_eq!(q(&a.to_string()), a);
        let b = xy("3/2*x^(1/2)*y^(-1)*dx^2 - 7");
        assert_eq!(xy(&b.to_string()), b);
    }

    #[test]
    fn change_frame_substitution() {
        assert_eq!(q("dq1").change_frame().unwrap(), xy("dy - dx"));
        assert_eq!(q("q1").change_frame().unwrap(), xy("x^(-1)"));
        assert_eq!(q("q2").change_frame().unwrap(), xy("x*y"));
        let d2 = q("z*dq2*(z*dq2 - z*dq1) - q2");
        assert_eq!(d2.change_frame().unwrap(), xy("(z*dy)*(z*dx) - x*y"));
        assert!(matches!(xy("dx").change_frame(), Err(OpError::AlreadyInFrame(_))));
    }

    #[test]
    fn apply_basic_rules() {
        let ring = RingPresentation::y_ambient();
        let mut f = LogSeries::new(Frame::XY, &ring, HalfInt::int(3));
        f.add_term(SeriesKey::new(HalfInt::HALF, HalfInt::ZERO, 0, 0), DualCoeff::one(&ring))
            .unwrap();
        let g = xy("dx").apply(&f).unwrap();
        let c = g.coefficient(&SeriesKey::new(HalfInt::HALF, HalfInt::ZERO, 0, 0)).unwrap();
        assert_eq!(c.re, CohElem::scalar(&ring, RatFuncZ::from_rational(rat(1, 2))));

        let mut lg = LogSeries::new(Frame::XY, &ring, HalfInt::int(3));
        lg.add_term(SeriesKey::new(HalfInt::ZERO, HalfInt::ZERO, 1, 0), DualCoeff::one(&ring))
            .unwrap();
        let g = xy("dx").apply(&lg).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.coefficient(&SeriesKey::exps(0, 0)).unwrap().re.as_scalar().unwrap().is_one());
    }

    #[test]
    fn prefactor_is_eigenvector() {
        let ring = RingPresentation::y_ambient();
        let p = CohElem::linear(&ring, &[("p", 1)]);
        let e = LogSeries::exp_prefactor(&p, 2, Frame::Y, HalfInt::int(3)).unwrap();
        let lhs = DiffOp::parse(Frame::Y, "z*dy").unwrap().apply(&e).unwrap();
        let rhs = e.mul_coh(&p).unwrap();
        assert!(lhs.try_sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn trust_window_and_underflow() {
        let ring = RingPresentation::y_ambient();
        let mut f = LogSeries::new(Frame::XY, &ring, HalfInt::int(4));
        f.add_term(SeriesKey::exps(0, 0), DualCoeff::one(&ring)).unwrap();
        let g = xy("x^(-1)*dx + y").apply(&f).unwrap();
        assert_eq!(g.order(), HalfInt::int(3));
        assert!(matches!(
            xy("x^(-5)*y^5").apply(&f),
            Err(OpError::WindowUnderflow { .. })
        ));
    }

    #[test]
    fn left_division_recovers_factor() {
        let p = q("(dq1 + dq2)*dq1");
        let l = q("dq1^2 - q1*(2*dq1 + 1)*(dq2 - dq1) + q2*dq2");
        let a = p.compose(&l).unwrap();
        assert_eq!(a.left_divide(&p).unwrap(), l);
        assert!(matches!(q("dq1 + 1").left_divide(&q("dq2")), Err(OpError::NotDivisible(_))));
    }

    #[test]
    fn homogenize_restores_z() {
        let d2 = q("z*dq2*(z*dq2 - z*dq1) - q2");
        assert_eq!(d2.dehomogenize().homogenize((0, 2)).unwrap(), d2);
        let flat = q("dq1^2 - q1*(2*dq1 + 1)");
        assert_eq!(flat.homogenize((0, 0)).unwrap(), q("(z*dq1)^2 - q1*(2*z*dq1 + z)*z"));
    }
}
