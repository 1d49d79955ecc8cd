//! Truncated graded cohomology rings given by monomial rewrite rules.
//!
//! A [`RingPresentation`] is pure data: generator names and degrees plus
//! rules `lhs -> rhs` (or `lhs -> 0`) on exponent vectors. The finite monomial
//! basis and the multiplication table are computed from the rules, so every
//! ambient ring used by the models comes from the same code path.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::ratfunc::RatFuncZ;
use super::{AlgebraError, Rational};

pub type Monomial = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub degree: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteRule {
    pub lhs: Monomial,
    /// `None` means the monomial rewrites to zero.
    pub rhs: Option<Monomial>,
}

#[derive(Debug)]
pub struct RingPresentation {
    name: String,
    generators: Vec<Generator>,
    rules: Vec<RewriteRule>,
    basis: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    table: Vec<Vec<Option<usize>>>,
    nilpotency_cap: u32,
}

const MAX_REWRITES: usize = 10_000;

impl RingPresentation {
    pub fn new(
        name: impl Into<String>,
        generators: Vec<Generator>,
        rules: Vec<RewriteRule>,
    ) -> Result<Arc<Self>, AlgebraError> {
        let name = name.into();
        let n = generators.len();
        for r in &rules {
            let ok_len = r.lhs.len() == n && r.rhs.as_ref().is_none_or(|m| m.len() == n);
            let same_count = r
                .rhs
                .as_ref()
                .is_none_or(|m| m.iter().sum::<u32>() == r.lhs.iter().sum::<u32>());
            if !ok_len || !same_count {
                return Err(AlgebraError::BadPresentation(format!(
                    "rule {:?} is not homogeneous in {name}",
                    r
                )));
            }
        }
        let mut ring = RingPresentation {
            name,
            generators,
            rules,
            basis: Vec::new(),
            index: HashMap::new(),
            table: Vec::new(),
            nilpotency_cap: 0,
        };

        // Closure of {1} under multiplication by generators.
        let mut seen: Vec<Monomial> = Vec::new();
        let mut queue = VecDeque::from([vec![0u32; n]]);
        while let Some(m) = queue.pop_front() {
            if seen.contains(&m) {
                continue;
            }
            for g in 0..n {
                let mut next = m.clone();
                next[g] += 1;
                if let Some(r) = ring.reduce(next)? {
                    if !seen.contains(&r) {
                        queue.push_back(r);
                    }
                }
            }
            seen.push(m);
            if seen.len() > MAX_REWRITES {
                return Err(AlgebraError::BadPresentation(format!(
                    "{} has no finite monomial basis",
                    ring.name
                )));
            }
        }
        seen.sort_by(|a, b| {
            let da = ring.monomial_degree(a);
            let db = ring.monomial_degree(b);
            da.cmp(&db).then_with(|| b.cmp(a))
        });
        ring.index = seen.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        ring.basis = seen;

        let dim = ring.basis.len();
        let mut table = vec![vec![None; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let prod: Monomial = ring.basis[i]
                    .iter()
                    .zip(&ring.basis[j])
                    .map(|(a, b)| a + b)
                    .collect();
                table[i][j] = match ring.reduce(prod)? {
                    Some(m) => Some(*ring.index.get(&m).ok_or_else(|| {
                        AlgebraError::BadPresentation(format!("basis of {} not closed", ring.name))
                    })?),
                    None => None,
                };
            }
        }
        ring.table = table;
        ring.nilpotency_cap = ring.basis.iter().map(|m| m.iter().sum::<u32>()).max().unwrap_or(0) + 1;
        Ok(Arc::new(ring))
    }

    /// `Q(z)[h, xi] / (h^5, xi^2 - xi h)`: the ambient ring on the blown-up side.
    pub fn x_ambient() -> Arc<Self> {
        Self::new(
            "X-ambient",
            vec![
                Generator { name: "h".into(), degree: 2 },
                Generator { name: "xi".into(), degree: 2 },
            ],
            vec![
                RewriteRule { lhs: vec![5, 0], rhs: None },
                RewriteRule { lhs: vec![0, 2], rhs: Some(vec![1, 1]) },
            ],
        )
        .expect("X-ambient presentation is valid")
    }

    /// `Q(z)[p] / (p^6)`: the cohomology of P^5.
    pub fn y_ambient() -> Arc<Self> {
        Self::new(
            "Y-ambient",
            vec![Generator { name: "p".into(), degree: 2 }],
            vec![RewriteRule { lhs: vec![6], rhs: None }],
        )
        .expect("Y-ambient presentation is valid")
    }

    fn reduce(&self, mut m: Monomial) -> Result<Option<Monomial>, AlgebraError> {
        for _ in 0..MAX_REWRITES {
            let rule = self
                .rules
                .iter()
                .find(|r| r.lhs.iter().zip(&m).all(|(l, e)| l <= e));
            match rule {
                None => return Ok(Some(m)),
                Some(RewriteRule { rhs: None, .. }) => return Ok(None),
                Some(RewriteRule { lhs, rhs: Some(rhs) }) => {
                    for k in 0..m.len() {
                        m[k] = m[k] - lhs[k] + rhs[k];
                    }
                }
            }
        }
        Err(AlgebraError::BadPresentation(format!(
            "rewriting does not terminate in {}",
            self.name
        )))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Index of the product of two basis monomials, `None` when it vanishes.
    pub fn product_index(&self, i: usize, j: usize) -> Option<usize> {
        self.table[i][j]
    }

    /// Smallest `k` such that every product of `k` generators vanishes.
    pub fn nilpotency_cap(&self) -> u32 {
        self.nilpotency_cap
    }

    pub fn monomial_degree(&self, m: &[u32]) -> u32 {
        m.iter().zip(&self.generators).map(|(e, g)| e * g.degree).sum()
    }

    pub fn basis_degree(&self, i: usize) -> u32 {
        self.monomial_degree(&self.basis[i])
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    pub fn monomial_name(&self, m: &[u32]) -> String {
        let parts: Vec<String> = m
            .iter()
            .zip(&self.generators)
            .filter(|(e, _)| **e > 0)
            .map(|(e, g)| if *e == 1 { g.name.clone() } else { format!("{}^{}", g.name, e) })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    pub fn same(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b) || (a.name == b.name && a.rules == b.rules && a.generators == b.generators)
    }
}

/// Element of a truncated cohomology ring with `Q(z)` coefficients.
#[derive(Clone, Debug)]
pub struct CohElem {
    ring: Arc<RingPresentation>,
    coords: Vec<RatFuncZ>,
}

impl PartialEq for CohElem {
    fn eq(&self, other: &Self) -> bool {
        RingPresentation::same(&self.ring, &other.ring) && self.coords == other.coords
    }
}

impl CohElem {
    pub fn zero(ring: &Arc<RingPresentation>) -> Self {
        CohElem {
            ring: ring.clone(),
            coords: vec![RatFuncZ::zero(); ring.dim()],
        }
    }

    pub fn scalar(ring: &Arc<RingPresentation>, c: RatFuncZ) -> Self {
        let mut e = Self::zero(ring);
        e.coords[0] = c;
        e
    }

    pub fn one(ring: &Arc<RingPresentation>) -> Self {
        Self::scalar(ring, RatFuncZ::one())
    }

    pub fn from_int(ring: &Arc<RingPresentation>, c: i64) -> Self {
        Self::scalar(ring, RatFuncZ::from_int(c))
    }

    /// `c * m` for a monomial `m`, reduced into the basis.
    pub fn monomial(ring: &Arc<RingPresentation>, m: Monomial, c: RatFuncZ) -> Result<Self, AlgebraError> {
        let mut e = Self::zero(ring);
        if let Some(r) = ring.reduce(m)? {
            let i = ring.index_of(&r).expect("reduced monomial is a basis element");
            e.coords[i] = c;
        }
        Ok(e)
    }

    /// Integer combination of generators, e.g. `[("h", 2), ("xi", 1)]`.
    pub fn linear(ring: &Arc<RingPresentation>, parts: &[(&str, i64)]) -> Self {
        let mut e = Self::zero(ring);
        for (name, c) in parts {
            let g = ring
                .generator_index(name)
                .unwrap_or_else(|| panic!("{} has no generator {name}", ring.name()));
            let mut m = vec![0; ring.generators().len()];
            m[g] = 1;
            let term = Self::monomial(ring, m, RatFuncZ::from_int(*c)).expect("generator");
            e = &e + &term;
        }
        e
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        &self.ring
    }

    pub fn coord(&self, i: usize) -> &RatFuncZ {
        &self.coords[i]
    }

    pub fn coords_dense(&self) -> &[RatFuncZ] {
        &self.coords
    }

    /// Nonzero coordinates as `(basis monomial, coefficient)`.
    pub fn coords(&self) -> impl Iterator<Item = (&Monomial, &RatFuncZ)> {
        self.coords
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (&self.ring.basis[i], c))
    }

    pub fn from_dense(ring: &Arc<RingPresentation>, coords: Vec<RatFuncZ>) -> Self {
        assert_eq!(coords.len(), ring.dim());
        CohElem { ring: ring.clone(), coords }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(RatFuncZ::is_zero)
    }

    pub fn degree_zero(&self) -> &RatFuncZ {
        &self.coords[0]
    }

    pub fn is_nilpotent(&self) -> bool {
        self.coords[0].is_zero()
    }

    /// Scalar value, if every non-unit coordinate vanishes.
    pub fn as_scalar(&self) -> Option<&RatFuncZ> {
        self.coords[1..].iter().all(RatFuncZ::is_zero).then(|| &self.coords[0])
    }

    fn check_ring(&self, other: &CohElem) -> Result<(), AlgebraError> {
        if RingPresentation::same(&self.ring, &other.ring) {
            Ok(())
        } else {
            Err(AlgebraError::RingMismatch(
                self.ring.name().to_string(),
                other.ring.name().to_string(),
            ))
        }
    }

    pub fn ring_mul(&self, other: &CohElem) -> Result<CohElem, AlgebraError> {
        self.check_ring(other)?;
        let dim = self.ring.dim();
        let mut out = vec![RatFuncZ::zero(); dim];
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coords.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                if let Some(k) = self.ring.table[i][j] {
                    out[k] = &out[k] + &(a * b);
                }
            }
        }
        Ok(CohElem { ring: self.ring.clone(), coords: out })
    }

    pub fn ring_add(&self, other: &CohElem) -> Result<CohElem, AlgebraError> {
        self.check_ring(other)?;
        Ok(CohElem {
            ring: self.ring.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        })
    }

    /// Inverse of a unit: scalar part nonzero, the rest nilpotent.
    pub fn ring_invert(&self) -> Result<CohElem, AlgebraError> {
        let c0 = &self.coords[0];
        if c0.is_zero() {
            return Err(AlgebraError::NonUnit(self.to_string()));
        }
        let c0_inv = c0.inv()?;
        // a = c0 (1 - t) with t nilpotent; a^-1 = c0^-1 sum t^k.
        let mut t = self.scale(&c0_inv);
        t.coords[0] = RatFuncZ::zero();
        let t = -&t;
        let one = CohElem::one(&self.ring);
        let mut acc = one.clone();
        let mut power = one;
        for _ in 1..self.ring.nilpotency_cap() {
            power = &power * &t;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc.scale(&c0_inv))
    }

    pub fn scale(&self, c: &RatFuncZ) -> CohElem {
        CohElem {
            ring: self.ring.clone(),
            coords: self.coords.iter().map(|a| a * c).collect(),
        }
    }

    pub fn scale_rational(&self, c: &Rational) -> CohElem {
        CohElem {
            ring: self.ring.clone(),
            coords: self.coords.iter().map(|a| a.scale(c)).collect(),
        }
    }

    pub fn mul_z_pow(&self, k: i64) -> CohElem {
        CohElem {
            ring: self.ring.clone(),
            coords: self.coords.iter().map(|a| a.mul_z_pow(k)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> CohElem {
        let mut acc = CohElem::one(&self.ring);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Coordinates grouped by basis monomial degree.
    pub fn graded_part(&self, degree: u32) -> CohElem {
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if self.ring.basis_degree(i) == degree {
                    c.clone()
                } else {
                    RatFuncZ::zero()
                }
            })
            .collect();
        CohElem { ring: self.ring.clone(), coords }
    }
}

impl Add for &CohElem {
    type Output = CohElem;
    fn add(self, rhs: &CohElem) -> CohElem {
        self.ring_add(rhs).expect("ring mismatch in CohElem addition")
    }
}

impl Sub for &CohElem {
    type Output = CohElem;
    fn sub(self, rhs: &CohElem) -> CohElem {
        self + &(-rhs)
    }
}

impl Neg for &CohElem {
    type Output = CohElem;
    fn neg(self) -> CohElem {
        CohElem {
            ring: self.ring.clone(),
            coords: self.coords.iter().map(|a| -a).collect(),
        }
    }
}

impl Mul for &CohElem {
    type Output = CohElem;
    fn mul(self, rhs: &CohElem) -> CohElem {
        self.ring_mul(rhs).expect("ring mismatch in CohElem product")
    }
}

impl fmt::Display for CohElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let m = self.ring.monomial_name(&self.ring.basis[i]);
            if m == "1" {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gens(ring: &Arc<RingPresentation>) -> (CohElem, CohElem) {
        (CohElem::linear(ring, &[("h", 1)]), CohElem::linear(ring, &[("xi", 1)]))
    }

    #[test]
    fn x_ambient_basis_is_ten_dimensional() {
        let r = RingPresentation::x_ambient();
        let names: Vec<String> = r.basis().iter().map(|m| r.monomial_name(m)).collect();
        assert_eq!(r.dim(), 10);
        for want in ["1", "h", "h^4", "xi", "h^4*xi"] {
            assert!(names.contains(&want.to_string()), "{want} missing from {names:?}");
        }
        assert_eq!(r.nilpotency_cap(), 6);
        assert_eq!(RingPresentation::y_ambient().dim(), 6);
        assert_eq!(RingPresentation::y_ambient().nilpotency_cap(), 6);
    }

    #[test]
    fn relations_hold() {
        let r = RingPresentation::x_ambient();
        let (h, xi) = gens(&r);
        assert_eq!(&xi * &xi, &xi * &h);
        assert!((&h.pow(4) * &h).is_zero());
        // (2h)(2h + 2xi) = 4h^2 + 4h xi
        let lhs = &h.scale_rational(&crate::algebra::rat(2, 1))
            * &CohElem::linear(&r, &[("h", 2), ("xi", 2)]);
        let rhs = &(&h * &h).scale_rational(&crate::algebra::rat(4, 1))
            + &(&h * &xi).scale_rational(&crate::algebra::rat(4, 1));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn inverse_of_p_plus_z_is_geometric() {
        let r = RingPresentation::y_ambient();
        let p = CohElem::linear(&r, &[("p", 1)]);
        let a = &p + &CohElem::scalar(&r, RatFuncZ::z());
        let inv = a.ring_invert().unwrap();
        let mut expect = CohElem::zero(&r);
        for k in 0..6u32 {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let c = RatFuncZ::monomial(crate::algebra::rat(sign, 1), -(k as i64) - 1);
            expect = &expect + &p.pow(k).scale(&c);
        }
        assert_eq!(inv, expect);
    }

    #[test]
    fn inverse_multiplies_back_to_one() {
        let r = RingPresentation::x_ambient();
        let (h, xi) = gens(&r);
        let a = &(&xi - &h) + &CohElem::scalar(&r, RatFuncZ::z());
        assert_eq!(&a * &a.ring_invert().unwrap(), CohElem::one(&r));
        let zc = CohElem::scalar(&r, RatFuncZ::z());
        assert_eq!(zc.ring_invert().unwrap(), CohElem::scalar(&r, RatFuncZ::monomial(crate::algebra::rat(1, 1), -1)));
    }

    #[test]
    fn non_unit_and_mismatch_errors() {
        let x = RingPresentation::x_ambient();
        let y = RingPresentation::y_ambient();
        let (h, _) = gens(&x);
        assert!(matches!(h.ring_invert(), Err(AlgebraError::NonUnit(_))));
        let p = CohElem::linear(&y, &[("p", 1)]);
        assert!(matches!(h.ring_mul(&p), Err(AlgebraError::RingMismatch(_, _))));
    }
}
