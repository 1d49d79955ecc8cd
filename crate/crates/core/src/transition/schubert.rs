//! Schubert calculus on the Grassmannian of lines in `P^5`, used as an
//! independent count of lines on complete intersections.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Partitions in the `2 x 4` box, as `(l1, l2)` with `4 >= l1 >= l2 >= 0`.
type Part = (u32, u32);

const WIDTH: u32 = 4;

/// A class as a combination of Schubert classes.
pub type Class = BTreeMap<Part, BigInt>;

pub fn point_class() -> Class {
    BTreeMap::from([((WIDTH, WIDTH), BigInt::one())])
}

pub fn unit() -> Class {
    BTreeMap::from([((0, 0), BigInt::one())])
}

/// Pieri rule for `sigma_1`: add one box in any valid position.
pub fn mul_sigma1(c: &Class) -> Class {
    let mut out = Class::new();
    for (&(a, b), k) in c {
        if a < WIDTH {
            *out.entry((a + 1, b)).or_insert_with(BigInt::zero) += k;
        }
        if b < a {
            *out.entry((a, b + 1)).or_insert_with(BigInt::zero) += k;
        }
    }
    out.retain(|_, k| !k.is_zero());
    out
}

/// Pieri rule for `sigma_{1,1}`: add a full column.
pub fn mul_sigma11(c: &Class) -> Class {
    let mut out = Class::new();
    for (&(a, b), k) in c {
        if a < WIDTH {
            *out.entry((a + 1, b + 1)).or_insert_with(BigInt::zero) += k;
        }
    }
    out
}

/// Degree of the top class.
pub fn integrate(c: &Class) -> BigInt {
    c.get(&(WIDTH, WIDTH)).cloned().unwrap_or_default()
}

/// Symmetric polynomial in the Chern roots `a, b`, keyed by `(deg_a, deg_b)`.
pub type RootPoly = BTreeMap<(u32, u32), BigInt>;

fn root_mul(p: &RootPoly, q: &RootPoly) -> RootPoly {
    let mut out = RootPoly::new();
    for (&(i, j), c) in p {
        for (&(k, l), d) in q {
            *out.entry((i + k, j + l)).or_insert_with(BigInt::zero) += c * d;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Top Chern class of `Sym^k` of a rank-2 bundle with roots `a, b`: the
/// product of the weights `i a + (k - i) b`.
pub fn sym_top_chern(k: u32) -> RootPoly {
    (0..=k).fold(RootPoly::from([((0, 0), BigInt::one())]), |acc, i| {
        let mut w = RootPoly::new();
        if i > 0 {
            w.insert((1, 0), BigInt::from(i));
        }
        if k > i {
            w.insert((0, 1), BigInt::from(k - i));
        }
        root_mul(&acc, &w)
    })
}

/// Rewrite a symmetric polynomial in `e1 = a + b` and `e2 = a b`, keyed by
/// `(power of e1, power of e2)`. `None` if `p` is not symmetric.
pub fn to_elementary(p: &RootPoly) -> Option<BTreeMap<(u32, u32), BigInt>> {
    let mut rest = p.clone();
    let mut out = BTreeMap::new();
    // Peel off the lex-leading monomial a^i b^j (i >= j) with e1^(i-j) e2^j.
    while let Some((&(i, j), c)) = rest.iter().next_back() {
        if i < j {
            return None;
        }
        let c = c.clone();
        let mut term = RootPoly::from([((0, 0), c.clone())]);
        for _ in 0..(i - j) {
            term = root_mul(&term, &RootPoly::from([((1, 0), BigInt::one()), ((0, 1), BigInt::one())]));
        }
        for _ in 0..j {
            term = root_mul(&term, &RootPoly::from([((1, 1), BigInt::one())]));
        }
        for (k, v) in term {
            let e = rest.entry(k).or_insert_with(BigInt::zero);
            *e -= v;
            if e.is_zero() {
                rest.remove(&k);
            }
        }
        *out.entry((i - j, j)).or_insert_with(BigInt::zero) += c;
    }
    Some(out)
}

/// `int e1^a e2^b` with `e1 = sigma_1` and `e2 = sigma_{1,1}` for the dual tautological bundle.
pub fn integrate_elementary(p: &BTreeMap<(u32, u32), BigInt>) -> BigInt {
    let mut total = BigInt::zero();
    for (&(a, b), c) in p {
        if a + 2 * b != 2 * WIDTH {
            continue;
        }
        let mut cl = unit();
        for _ in 0..a {
            cl = mul_sigma1(&cl);
        }
        for _ in 0..b {
            cl = mul_sigma11(&cl);
        }
        total += c * integrate(&cl);
    }
    total
}

/// Number of lines on a complete intersection of the given degrees in `P^5`.
pub fn lines_on_complete_intersection(degrees: &[u32]) -> Option<BigInt> {
    let top = degrees
        .iter()
        .fold(RootPoly::from([((0, 0), BigInt::one())]), |acc, &d| root_mul(&acc, &sym_top_chern(d)));
    Some(integrate_elementary(&to_elementary(&top)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_and_sigma1_powers() {
        assert_eq!(integrate(&point_class()), BigInt::one());
        let mut c = unit();
        for _ in 0..8 {
            c = mul_sigma1(&c);
        }
        assert_eq!(integrate(&c), BigInt::from(14));
    }

    #[test]
    fn elementary_rewrite_of_a_squared_plus_b_squared() {
        let p = RootPoly::from([((2, 0), BigInt::one()), ((0, 2), BigInt::one())]);
        let e = to_elementary(&p).unwrap();
        assert_eq!(e, BTreeMap::from([((2, 0), BigInt::one()), ((0, 1), BigInt::from(-2))]));
    }

    #[test]
    fn line_counts_for_the_two_calabi_yau_intersections() {
        assert_eq!(lines_on_complete_intersection(&[2, 4]), Some(BigInt::from(1280)));
        assert_eq!(lines_on_complete_intersection(&[3, 3]), Some(BigInt::from(1053)));
    }
}
