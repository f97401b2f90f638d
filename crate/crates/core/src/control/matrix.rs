//! Dense rational matrices and the fraction-free reference solver.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::poly::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix { rows, cols, entries: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RationalMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        RationalMatrix { rows: r, cols: c, entries: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        RationalMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect())
                .collect(),
        )
    }

    pub fn from_columns(rows: usize, cols: &[Vec<Rational>]) -> Self {
        let mut m = RationalMatrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length mismatch");
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn mul_vec(&self, u: &[Rational]) -> Vec<Rational> {
        assert_eq!(u.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut s = Rational::zero();
                for (j, uj) in u.iter().enumerate() {
                    let a = self.get(i, j);
                    if !a.is_zero() && !uj.is_zero() {
                        s += a * uj;
                    }
                }
                s
            })
            .collect()
    }
}

/// Affine solution set of A·u = b.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSolution {
    pub particular: Vec<Rational>,
    pub nullspace_basis: Vec<Vec<Rational>>,
    pub pivots: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("system is inconsistent: rank(A) < rank([A|b])")]
    Unsolvable,
    #[error("dimension mismatch: A has {rows} rows, b has {len}")]
    Dimension { rows: usize, len: usize },
}

/// Fraction-free elimination of A·u = b.
///
/// Pivots are chosen leftmost column first, then smallest row index. The
/// particular solution sets every free variable to zero; the nullspace basis
/// has one vector per free column.
pub fn solve_exact(a: &RationalMatrix, b: &[Rational]) -> Result<LinearSolution, SolveError> {
    if b.len() != a.rows {
        return Err(SolveError::Dimension { rows: a.rows, len: b.len() });
    }
    let n = a.cols;
    // Scale each augmented row to integers.
    let mut m: Vec<Vec<BigInt>> = (0..a.rows)
        .map(|i| {
            let row: Vec<&Rational> = (0..n).map(|j| a.get(i, j)).chain(std::iter::once(&b[i])).collect();
            let l = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| (*v * Rational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();

    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..m.len() {
            for j in c + 1..=n {
                let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                m[i][j] = v;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    if m[r..].iter().any(|row| !row[n].is_zero()) {
        return Err(SolveError::Unsolvable);
    }

    // Back substitution over the rationals on the echelon rows.
    let rank = pivots.len();
    let back = |rhs: &dyn Fn(usize) -> Rational, free: Option<usize>| -> Vec<Rational> {
        let mut u = vec![Rational::zero(); n];
        if let Some(f) = free {
            u[f] = Rational::one();
        }
        for k in (0..rank).rev() {
            let c = pivots[k];
            let mut s = rhs(k);
            for j in c + 1..n {
                if !m[k][j].is_zero() && !u[j].is_zero() {
                    s -= Rational::from_integer(m[k][j].clone()) * &u[j];
                }
            }
            u[c] = s / Rational::from_integer(m[k][c].clone());
        }
        u
    };
    let particular = back(&|k| Rational::from_integer(m[k][n].clone()), None);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let nullspace_basis = free.iter().map(|&f| back(&|_| Rational::zero(), Some(f))).collect();
    Ok(LinearSolution { particular, nullspace_basis, pivots })
}

/// Rank of a rational matrix by the same elimination.
pub fn rank(a: &RationalMatrix) -> usize {
    let zeros = vec![Rational::zero(); a.rows];
    solve_exact(a, &zeros).map(|s| s.pivots.len()).unwrap_or(0)
}

/// True when every entry is zero.
pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

/// max |numerator| and denominator digits, for reporting.
pub fn max_digits(v: &[Rational]) -> usize {
    v.iter()
        .map(|x| x.numer().abs().to_string().len().max(x.denom().to_string().len()))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn identity_system() {
        let b = vec![rat(3), rat(-1), rat(7)];
        let s = solve_exact(&RationalMatrix::identity(3), &b).unwrap();
        assert_eq!(s.particular, b);
        assert!(s.nullspace_basis.is_empty());
    }

    #[test]
    fn rank_one_system() {
        let a = RationalMatrix::from_i64(&[&[1, 2], &[2, 4]]);
        let s = solve_exact(&a, &[rat(1), rat(2)]).unwrap();
        assert_eq!(s.particular, vec![rat(1), rat(0)]);
        assert_eq!(s.nullspace_basis, vec![vec![rat(-2), rat(1)]]);
        assert_eq!(solve_exact(&a, &[rat(1), rat(3)]), Err(SolveError::Unsolvable));
    }

    #[test]
    fn random_system_residual() {
        // deterministic pseudo-random 6x9 rational system with a planted solution
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) % 11) as i64 - 5
        };
        let rows: Vec<Vec<Rational>> =
            (0..6).map(|_| (0..9).map(|_| crate::poly::ratio(next(), next().abs() + 1)).collect()).collect();
        let a = RationalMatrix::from_rows(rows);
        let u0: Vec<Rational> = (0..9).map(|_| rat(next())).collect();
        let b = a.mul_vec(&u0);
        let s = solve_exact(&a, &b).unwrap();
        assert_eq!(a.mul_vec(&s.particular), b);
        for v in &s.nullspace_basis {
            assert!(is_zero_vec(&a.mul_vec(v)));
        }
        assert_eq!(s.nullspace_basis.len(), 9 - s.pivots.len());
    }
}
