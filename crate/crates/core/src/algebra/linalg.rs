//! Exact dense linear algebra over `Q(z)`.

use super::RatFuncZ;

/// Rank by fraction-free (Bareiss) elimination.
pub fn rank(rows: &[Vec<RatFuncZ>]) -> usize {
    let mut m: Vec<Vec<RatFuncZ>> = rows.to_vec();
    let nrows = m.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = m[0].len();
    let mut prev = RatFuncZ::one();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in (r + 1)..nrows {
            for j in (c + 1)..ncols {
                let v = &(&m[r][c] * &m[i][j]) - &(&m[i][c] * &m[r][j]);
                m[i][j] = v.checked_div(&prev).expect("Bareiss pivot is nonzero");
            }
            m[i][c] = RatFuncZ::zero();
        }
        prev = m[r][c].clone();
        r += 1;
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub enum Solution {
    Unique(Vec<RatFuncZ>),
    Inconsistent,
    /// The system is consistent but leaves some unknowns free.
    Underdetermined,
}

/// Solve `a x = b` exactly.
pub fn solve(a: &[Vec<RatFuncZ>], b: &[RatFuncZ]) -> Solution {
    let nrows = a.len();
    let ncols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<RatFuncZ>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].inv().expect("pivot is nonzero");
        for j in c..=ncols {
            m[r][j] = &m[r][j] * &inv;
        }
        for i in 0..nrows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for j in c..=ncols {
                let v = &m[i][j] - &(&f * &m[r][j]);
                m[i][j] = v;
            }
        }
        pivots.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    if m[r..].iter().any(|row| !row[ncols].is_zero()) {
        return Solution::Inconsistent;
    }
    if pivots.len() < ncols {
        return Solution::Underdetermined;
    }
    let mut x = vec![RatFuncZ::zero(); ncols];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = m[row][ncols].clone();
    }
    Solution::Unique(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: i64) -> RatFuncZ {
        RatFuncZ::from_int(n)
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![vec![f(1), f(2)], vec![f(2), f(4)], vec![f(0), f(1)]];
        assert_eq!(rank(&rows), 2);
        assert_eq!(rank(&[vec![f(1), f(2)], vec![f(1), f(2)]]), 1);
    }

    #[test]
    fn rank_with_z_entries() {
        let z = RatFuncZ::z();
        let rows = vec![vec![z.clone(), f(1)], vec![&z * &z, z.clone()]];
        assert_eq!(rank(&rows), 1);
    }

    #[test]
    fn solve_cases() {
        let a = vec![vec![f(2), f(0)], vec![f(0), RatFuncZ::z()]];
        assert_eq!(
            solve(&a, &[f(4), f(1)]),
            Solution::Unique(vec![f(2), RatFuncZ::monomial(crate::algebra::rat(1, 1), -1)])
        );
        let a = vec![vec![f(1), f(1)], vec![f(2), f(2)]];
        assert_eq!(solve(&a, &[f(1), f(3)]), Solution::Inconsistent);
        assert_eq!(solve(&a, &[f(1), f(2)]), Solution::Underdetermined);
    }
}
