//! Truncated bivariate series with half-integer exponents, bounded powers of
//! both logarithms and dual-number (`u^2 = 0`) cohomology-valued coefficients.
//!
//! A term is keyed by `(e1, e2, l1, l2)` and stands for
//! `v1^e1 v2^e2 (log v1)^l1 (log v2)^l2`. The window is `e_k >= floor`,
//! `e1 + e2 <= order` and `l1 + l2 <= log_cap`; keys outside it are unknown
//! rather than zero.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{rat, AlgebraError, CohElem, RatFuncZ, Rational, RingPresentation};

/// Exact half-integer stored as twice its value.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub const fn int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    pub const fn twice(self) -> i64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_rational(self) -> Rational {
        rat(self.0, 2)
    }

    pub fn max(self, other: HalfInt) -> HalfInt {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// `re + inf * u` with `u^2 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCoeff {
    pub re: CohElem,
    pub inf: CohElem,
}

impl DualCoeff {
    pub fn new(re: CohElem, inf: CohElem) -> Result<Self, AlgebraError> {
        re.ring_add(&inf)?;
        Ok(DualCoeff { re, inf })
    }

    pub fn real(re: CohElem) -> Self {
        let inf = CohElem::zero(re.ring());
        DualCoeff { re, inf }
    }

    pub fn zero(ring: &Arc<RingPresentation>) -> Self {
        DualCoeff::real(CohElem::zero(ring))
    }

    pub fn one(ring: &Arc<RingPresentation>) -> Self {
        DualCoeff::real(CohElem::one(ring))
    }

    /// The infinitesimal `u` itself.
    pub fn u(ring: &Arc<RingPresentation>) -> Self {
        DualCoeff {
            re: CohElem::zero(ring),
            inf: CohElem::one(ring),
        }
    }

    pub fn scalar(ring: &Arc<RingPresentation>, c: RatFuncZ) -> Self {
        DualCoeff::real(CohElem::scalar(ring, c))
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        self.re.ring()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.inf.is_zero()
    }

    pub fn scale(&self, c: &RatFuncZ) -> Self {
        DualCoeff {
            re: self.re.scale(c),
            inf: self.inf.scale(c),
        }
    }

    pub fn scale_rational(&self, c: &Rational) -> Self {
        DualCoeff {
            re: self.re.scale_rational(c),
            inf: self.inf.scale_rational(c),
        }
    }

    pub fn mul_z_pow(&self, k: i64) -> Self {
        DualCoeff {
            re: self.re.mul_z_pow(k),
            inf: self.inf.mul_z_pow(k),
        }
    }

    pub fn mul_coh(&self, c: &CohElem) -> Self {
        DualCoeff {
            re: &self.re * c,
            inf: &self.inf * c,
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = DualCoeff::one(self.ring());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn try_mul(&self, other: &DualCoeff) -> Result<Self, AlgebraError> {
        let re = self.re.ring_mul(&other.re)?;
        let inf = self.re.ring_mul(&other.inf)?.ring_add(&self.inf.ring_mul(&other.re)?)?;
        Ok(DualCoeff { re, inf })
    }

    /// Inverse of a dual number whose real part is a ring unit.
    pub fn invert(&self) -> Result<Self, AlgebraError> {
        let a_inv = self.re.ring_invert()?;
        let inf = -&(&(&a_inv * &self.inf) * &a_inv);
        Ok(DualCoeff { re: a_inv, inf })
    }
}

impl Add for &DualCoeff {
    type Output = DualCoeff;
    fn add(self, rhs: &DualCoeff) -> DualCoeff {
        DualCoeff {
            re: &self.re + &rhs.re,
            inf: &self.inf + &rhs.inf,
        }
    }
}

impl Sub for &DualCoeff {
    type Output = DualCoeff;
    fn sub(self, rhs: &DualCoeff) -> DualCoeff {
        DualCoeff {
            re: &self.re - &rhs.re,
            inf: &self.inf - &rhs.inf,
        }
    }
}

impl Neg for &DualCoeff {
    type Output = DualCoeff;
    fn neg(self) -> DualCoeff {
        DualCoeff {
            re: -&self.re,
            inf: -&self.inf,
        }
    }
}

impl Mul for &DualCoeff {
    type Output = DualCoeff;
    fn mul(self, rhs: &DualCoeff) -> DualCoeff {
        self.try_mul(rhs).expect("ring mismatch in DualCoeff product")
    }
}

impl fmt::Display for DualCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inf.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "[{}] + [{}]*u", self.re, self.inf)
        }
    }
}

/// Which pair of variables a series or operator is written in.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Frame {
    /// `(q1, q2)` around the large-radius point of the blown-up side.
    Q,
    /// `(x, y)` after `q1 -> 1/x`, `q2 -> x y`.
    XY,
    /// The single variable `y`; only the second slot is used.
    Y,
}

impl Frame {
    pub fn var_names(self) -> (&'static str, &'static str) {
        match self {
            Frame::Q => ("q1", "q2"),
            Frame::XY => ("x", "y"),
            Frame::Y => ("_", "y"),
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.var_names();
        match self {
            Frame::Y => write!(f, "(y)"),
            _ => write!(f, "({a},{b})"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKey {
    pub e1: HalfInt,
    pub e2: HalfInt,
    pub l1: u32,
    pub l2: u32,
}

impl SeriesKey {
    pub const fn new(e1: HalfInt, e2: HalfInt, l1: u32, l2: u32) -> Self {
        SeriesKey { e1, e2, l1, l2 }
    }

    pub const fn exps(e1: i64, e2: i64) -> Self {
        SeriesKey::new(HalfInt::int(e1), HalfInt::int(e2), 0, 0)
    }

    pub fn total(&self) -> HalfInt {
        self.e1 + self.e2
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, log^{}, log^{})", self.e1, self.e2, self.l1, self.l2)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("frame mismatch: {0} vs {1}")]
    FrameMismatch(Frame, Frame),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("key {0} lies outside the truncation window")]
    OutOfWindow(SeriesKey),
    #[error("log power {0} exceeds the cap {1}")]
    LogCapExceeded(u32, u32),
    #[error("prefactor class {0} is not nilpotent")]
    NotNilpotent(String),
    #[error("window underflow: exponent {got} below floor {floor}; rebuild with floor <= {got}")]
    WindowUnderflow { got: HalfInt, floor: HalfInt },
    #[error("key {0} is not allowed in frame {1}")]
    BadSlot(SeriesKey, Frame),
}

pub const DEFAULT_FLOOR: HalfInt = HalfInt::int(-4);
pub const DEFAULT_ORDER: u32 = 6;

#[derive(Clone, Debug)]
pub struct LogSeries {
    frame: Frame,
    ring: Arc<RingPresentation>,
    floor: HalfInt,
    order: HalfInt,
    log_cap: u32,
    terms: BTreeMap<SeriesKey, DualCoeff>,
}

impl LogSeries {
    pub fn new(frame: Frame, ring: &Arc<RingPresentation>, order: HalfInt) -> Self {
        Self::with_floor(frame, ring, order, DEFAULT_FLOOR)
    }

    pub fn with_floor(frame: Frame, ring: &Arc<RingPresentation>, order: HalfInt, floor: HalfInt) -> Self {
        LogSeries {
            frame,
            ring: ring.clone(),
            floor,
            order,
            log_cap: ring.nilpotency_cap(),
            terms: BTreeMap::new(),
        }
    }

    /// The constant series `c`.
    pub fn constant(frame: Frame, order: HalfInt, c: DualCoeff) -> Self {
        let mut s = Self::new(frame, c.ring(), order);
        s.add_term(SeriesKey::exps(0, 0), c).expect("constant term is in window");
        s
    }

    /// An empty series with the same frame, ring and window as `self`.
    pub fn empty_like(&self) -> Self {
        LogSeries {
            terms: BTreeMap::new(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Self {
        LogSeries {
            frame: self.frame,
            ring: self.ring.clone(),
            floor: self.floor,
            order: self.order,
            log_cap: self.log_cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        &self.ring
    }

    pub fn floor(&self) -> HalfInt {
        self.floor
    }

    pub fn order(&self) -> HalfInt {
        self.order
    }

    pub fn log_cap(&self) -> u32 {
        self.log_cap
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SeriesKey, &DualCoeff)> {
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

    pub fn set_order(&mut self, order: HalfInt) {
        self.order = order;
        self.terms.retain(|k, _| k.total() <= order);
    }

    pub fn set_frame(&mut self, frame: Frame) {
        self.frame = frame;
    }

    fn in_window(&self, key: &SeriesKey) -> bool {
        key.e1 >= self.floor
            && key.e2 >= self.floor
            && key.total() <= self.order
            && key.l1 + key.l2 <= self.log_cap
            && (self.frame != Frame::Y || (key.e1 == HalfInt::ZERO && key.l1 == 0))
    }

    /// Accumulate `c` at `key`. Terms beyond the order are truncated away;
    /// violations of the floor, the log cap or the frame are errors.
    pub fn add_term(&mut self, key: SeriesKey, c: DualCoeff) -> Result<(), SeriesError> {
        if c.is_zero() || key.total() > self.order {
            return Ok(());
        }
        if !RingPresentation::same(c.ring(), &self.ring) {
            return Err(AlgebraError::RingMismatch(c.ring().name().into(), self.ring.name().into()).into());
        }
        if key.e1 < self.floor || key.e2 < self.floor {
            return Err(SeriesError::WindowUnderflow {
                got: if key.e1 < key.e2 { key.e1 } else { key.e2 },
                floor: self.floor,
            });
        }
        if key.l1 + key.l2 > self.log_cap {
            return Err(SeriesError::LogCapExceeded(key.l1 + key.l2, self.log_cap));
        }
        if self.frame == Frame::Y && (key.e1 != HalfInt::ZERO || key.l1 != 0) {
            return Err(SeriesError::BadSlot(key, self.frame));
        }
        match self.terms.get_mut(&key) {
            Some(old) => {
                let sum = &*old + &c;
                if sum.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *old = sum;
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
        Ok(())
    }

    /// Stored coefficient, zero when absent. Keys outside the window are an
    /// error so that "zero" and "unknown" stay distinct.
    pub fn coefficient(&self, key: &SeriesKey) -> Result<DualCoeff, SeriesError> {
        if !self.in_window(key) {
            return Err(SeriesError::OutOfWindow(*key));
        }
        Ok(self
            .terms
            .get(key)
            .cloned()
            .unwrap_or_else(|| DualCoeff::zero(&self.ring)))
    }

    fn check_compatible(&self, other: &LogSeries) -> Result<(), SeriesError> {
        if self.frame != other.frame {
            return Err(SeriesError::FrameMismatch(self.frame, other.frame));
        }
        if !RingPresentation::same(&self.ring, &other.ring) {
            return Err(AlgebraError::RingMismatch(self.ring.name().into(), other.ring.name().into()).into());
        }
        Ok(())
    }

    /// Cauchy product, truncated to the smaller order.
    pub fn series_mul(&self, other: &LogSeries) -> Result<LogSeries, SeriesError> {
        self.check_compatible(other)?;
        let mut out = self.clone_meta();
        out.order = if self.order <= other.order { self.order } else { other.order };
        out.floor = if self.floor <= other.floor { self.floor } else { other.floor };
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                let key = SeriesKey::new(ka.e1 + kb.e1, ka.e2 + kb.e2, ka.l1 + kb.l1, ka.l2 + kb.l2);
                if key.total() > out.order {
                    continue;
                }
                let c = a.try_mul(b)?;
                if c.is_zero() {
                    continue;
                }
                out.add_term(key, c)?;
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &LogSeries) -> Result<LogSeries, SeriesError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.order = if self.order <= other.order { self.order } else { other.order };
        out.terms.retain(|k, _| k.total() <= out.order);
        for (k, c) in &other.terms {
            out.add_term(*k, c.clone())?;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &LogSeries) -> Result<LogSeries, SeriesError> {
        self.try_add(&other.scale(&RatFuncZ::from_int(-1)))
    }

    pub fn scale(&self, c: &RatFuncZ) -> LogSeries {
        let mut out = self.clone_meta();
        for (k, v) in &self.terms {
            let w = v.scale(c);
            if !w.is_zero() {
                out.terms.insert(*k, w);
            }
        }
        out
    }

    /// Multiply every coefficient by a ring element.
    pub fn mul_coh(&self, c: &CohElem) -> Result<LogSeries, SeriesError> {
        let mut out = self.clone_meta();
        for (k, v) in &self.terms {
            out.add_term(*k, DualCoeff { re: v.re.ring_mul(c)?, inf: v.inf.ring_mul(c)? })?;
        }
        Ok(out)
    }

    /// Restrict to total degree `<= order`.
    pub fn truncate(&self, order: HalfInt) -> LogSeries {
        let mut out = self.clone();
        out.set_order(if order < self.order { order } else { self.order });
        out
    }

    /// `exp((d / z) log v)` for the variable in `slot` (1 or 2).
    pub fn exp_prefactor(d: &CohElem, slot: u8, frame: Frame, order: HalfInt) -> Result<LogSeries, SeriesError> {
        if !d.is_nilpotent() {
            return Err(SeriesError::NotNilpotent(d.to_string()));
        }
        let ring = d.ring();
        let mut out = LogSeries::new(frame, ring, order);
        let step = d.mul_z_pow(-1);
        let mut power = CohElem::one(ring);
        let mut fact = Rational::from_integer(1.into());
        let mut k = 0u32;
        while !power.is_zero() {
            let key = if slot == 1 {
                SeriesKey::new(HalfInt::ZERO, HalfInt::ZERO, k, 0)
            } else {
                SeriesKey::new(HalfInt::ZERO, HalfInt::ZERO, 0, k)
            };
            out.add_term(key, DualCoeff::real(power.scale_rational(&fact.recip())))?;
            k += 1;
            fact *= Rational::from_integer(k.into());
            power = &power * &step;
        }
        Ok(out)
    }

    /// Split `re + inf*u` coefficients into two series with real coefficients.
    pub fn u_project(&self) -> (LogSeries, LogSeries) {
        let mut re = self.clone_meta();
        let mut inf = self.clone_meta();
        for (k, v) in &self.terms {
            if !v.re.is_zero() {
                re.terms.insert(*k, DualCoeff::real(v.re.clone()));
            }
            if !v.inf.is_zero() {
                inf.terms.insert(*k, DualCoeff::real(v.inf.clone()));
            }
        }
        (re, inf)
    }

    /// The same terms in a window with exponent floor `floor`.
    pub fn refloor(&self, floor: HalfInt) -> Result<LogSeries, SeriesError> {
        if let Some(k) = self.terms.keys().find(|k| k.e1 < floor || k.e2 < floor) {
            let got = if k.e1 < k.e2 { k.e1 } else { k.e2 };
            return Err(SeriesError::WindowUnderflow { got, floor });
        }
        let mut out = self.clone();
        out.floor = floor;
        Ok(out)
    }

    /// Check every stored key against floor, order, log cap and frame.
    pub fn structural_scan(&self) -> Result<(), SeriesError> {
        for (k, c) in &self.terms {
            if !self.in_window(k) {
                return Err(SeriesError::OutOfWindow(*k));
            }
            if c.is_zero() {
                return Err(SeriesError::OutOfWindow(*k));
            }
        }
        Ok(())
    }

    /// True when `self - other` vanishes on every key of total degree `<= through`.
    pub fn agrees_through(&self, other: &LogSeries, through: HalfInt) -> Result<bool, SeriesError> {
        let d = self.truncate(through).try_sub(&other.truncate(through))?;
        Ok(d.is_zero())
    }

    /// Largest total degree among stored terms.
    pub fn max_total(&self) -> Option<HalfInt> {
        self.terms.keys().map(SeriesKey::total).max()
    }

    pub fn min_key(&self) -> Option<&SeriesKey> {
        self.terms.keys().next()
    }
}

impl fmt::Display for LogSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (v1, v2) = self.frame.var_names();
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{c}]")?;
            if k.e1 != HalfInt::ZERO {
                write!(f, "*{v1}^({})", k.e1)?;
            }
            if k.e2 != HalfInt::ZERO {
                write!(f, "*{v2}^({})", k.e2)?;
            }
            if k.l1 > 0 {
                write!(f, "*log({v1})^{}", k.l1)?;
            }
            if k.l2 > 0 {
                write!(f, "*log({v2})^{}", k.l2)?;
            }
        }
        write!(f, " + O(deg > {})", self.order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y_ring() -> Arc<RingPresentation> {
        RingPresentation::y_ambient()
    }

    fn scalar_series(frame: Frame, order: i64, terms: &[((i64, i64), i64)]) -> LogSeries {
        let ring = y_ring();
        let mut s = LogSeries::new(frame, &ring, HalfInt::int(order));
        for ((a, b), c) in terms {
            s.add_term(SeriesKey::exps(*a, *b), DualCoeff::scalar(&ring, RatFuncZ::from_int(*c)))
                .unwrap();
        }
        s
    }

    #[test]
    fn one_plus_x_times_one_minus_x() {
        let a = scalar_series(Frame::XY, 2, &[((0, 0), 1), ((1, 0), 1)]);
        let b = scalar_series(Frame::XY, 2, &[((0, 0), 1), ((1, 0), -1)]);
        let c = a.series_mul(&b).unwrap();
        assert!(c.agrees_through(&scalar_series(Frame::XY, 2, &[((0, 0), 1), ((2, 0), -1)]), HalfInt::int(2)).unwrap());
    }

    #[test]
    fn dual_number_law() {
        let ring = y_ring();
        let s = |n| CohElem::from_int(&ring, n);
        let ab = DualCoeff::new(s(2), s(3)).unwrap();
        let cd = DualCoeff::new(s(5), s(7)).unwrap();
        let prod = &ab * &cd;
        assert_eq!(prod.re, s(10));
        assert_eq!(prod.inf, s(2 * 7 + 3 * 5));
        assert!((&DualCoeff::u(&ring) * &DualCoeff::u(&ring)).is_zero());
    }

    #[test]
    fn half_integer_exponents_add() {
        let ring = y_ring();
        let mut s = LogSeries::new(Frame::XY, &ring, HalfInt::int(2));
        s.add_term(SeriesKey::new(HalfInt::HALF, HalfInt::ZERO, 0, 0), DualCoeff::one(&ring)).unwrap();
        let sq = s.series_mul(&s).unwrap();
        let keys: Vec<_> = sq.terms().map(|(k, _)| *k).collect();
        assert_eq!(keys, vec![SeriesKey::exps(1, 0)]);
        assert_eq!(HalfInt::HALF + HalfInt::HALF, HalfInt::ONE);
        assert_eq!(HalfInt::from_twice(-3).to_string(), "-3/2");
    }

    #[test]
    fn prefactor_of_p_terminates() {
        let ring = y_ring();
        let p = CohElem::linear(&ring, &[("p", 1)]);
        let e = LogSeries::exp_prefactor(&p, 2, Frame::Y, HalfInt::int(3)).unwrap();
        assert_eq!(e.len(), 6);
        let c5 = e.coefficient(&SeriesKey::new(HalfInt::ZERO, HalfInt::ZERO, 0, 5)).unwrap();
        let want = p.pow(5).scale(&RatFuncZ::monomial(rat(1, 120), -5));
        assert_eq!(c5.re, want);
        let zero = LogSeries::exp_prefactor(&CohElem::zero(&ring), 2, Frame::Y, HalfInt::int(3)).unwrap();
        assert_eq!(zero.len(), 1);
        assert!(matches!(
            LogSeries::exp_prefactor(&CohElem::one(&ring), 2, Frame::Y, HalfInt::int(3)),
            Err(SeriesError::NotNilpotent(_))
        ));
    }

    #[test]
    fn out_of_window_is_not_zero() {
        let s = scalar_series(Frame::XY, 3, &[((0, 0), 1)]);
        assert!(s.coefficient(&SeriesKey::exps(1, 1)).unwrap().is_zero());
        assert!(matches!(s.coefficient(&SeriesKey::exps(2, 2)), Err(SeriesError::OutOfWindow(_))));
        assert!(matches!(s.coefficient(&SeriesKey::exps(-5, 0)), Err(SeriesError::OutOfWindow(_))));
    }

    #[test]
    fn frame_mismatch_is_reported() {
        let a = scalar_series(Frame::XY, 2, &[((0, 0), 1)]);
        let b = scalar_series(Frame::Q, 2, &[((0, 0), 1)]);
        assert!(matches!(a.series_mul(&b), Err(SeriesError::FrameMismatch(_, _))));
    }
}
