//! Multi-modular linear algebra with exact certification.
//!
//! Decisions are taken modulo a word-size prime and then certified over Q:
//! solutions are rebuilt by CRT and rational reconstruction and checked
//! exactly against every row.

use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::poly::Rational;

/// A column with integer entries and a positive scale: value = entries / scale.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntColumn {
    /// Sparse (row, value) pairs sorted by row, no zeros.
    pub entries: Vec<(usize, BigInt)>,
    pub scale: BigInt,
}

impl IntColumn {
    pub fn from_rational(entries: &[(usize, Rational)]) -> Self {
        let scale = entries.iter().fold(BigInt::one(), |acc, (_, v)| acc.lcm(v.denom()));
        let mut e: Vec<(usize, BigInt)> = entries
            .iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(r, v)| (*r, (v * Rational::from_integer(scale.clone())).to_integer()))
            .collect();
        e.sort_by_key(|(r, _)| *r);
        IntColumn { entries: e, scale }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn reduce(&self, p: u64, rows: usize) -> Vec<u64> {
        let mut v = vec![0u64; rows];
        for (r, x) in &self.entries {
            v[*r] = mod_big(x, p);
        }
        v
    }

    fn norm_bits(&self) -> f64 {
        let mut s = 0f64;
        for (_, x) in &self.entries {
            let b = x.bits() as f64;
            s = log2_add(s, 2.0 * b);
        }
        s / 2.0
    }
}

fn log2_add(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

pub fn mod_big(x: &BigInt, p: u64) -> u64 {
    let r = (x.magnitude() % p).to_u64().expect("residue fits");
    if x.sign() == Sign::Minus && r != 0 {
        p - r
    } else {
        r
    }
}

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

pub fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The i-th prime below 2^31, descending.
pub fn prime(i: usize) -> u64 {
    static CACHE: OnceLock<Mutex<Vec<u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut v = cache.lock().expect("prime cache poisoned");
    let mut n = v.last().map_or(1u64 << 31, |&q| q);
    while v.len() <= i {
        n -= 1;
        while !is_prime(n) {
            n -= 1;
        }
        v.push(n);
    }
    v[i]
}

/// Echelon basis of a growing column set modulo p.
///
/// Each stored vector is zero at the pivot rows of earlier vectors and has a
/// unit entry at its own pivot row.
#[derive(Clone, Debug)]
pub struct ModBasis {
    p: u64,
    vecs: Vec<(usize, Vec<u64>)>,
    pivot_cols: Vec<usize>,
}

impl ModBasis {
    pub fn new(p: u64) -> Self {
        ModBasis { p, vecs: Vec::new(), pivot_cols: Vec::new() }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.vecs.len()
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }

    pub fn pivot_rows(&self) -> Vec<usize> {
        self.vecs.iter().map(|(r, _)| *r).collect()
    }

    fn reduce(&self, v: &mut Vec<u64>) {
        let p = self.p;
        for (pr, b) in &self.vecs {
            if *pr >= v.len() {
                continue;
            }
            let f = v[*pr];
            if f == 0 {
                continue;
            }
            if v.len() < b.len() {
                v.resize(b.len(), 0);
            }
            let nf = p - f;
            for (x, y) in v.iter_mut().zip(b) {
                if *y != 0 {
                    *x = (*x + nf * y) % p;
                }
            }
        }
    }

    /// Reduce v; when it is independent insert it with column label `col`.
    pub fn insert(&mut self, col: usize, mut v: Vec<u64>) -> bool {
        self.reduce(&mut v);
        let Some(pr) = v.iter().position(|&x| x != 0) else { return false };
        let inv = invmod(v[pr], self.p);
        for x in v.iter_mut() {
            *x = mulmod(*x, inv, self.p);
        }
        self.vecs.push((pr, v));
        self.pivot_cols.push(col);
        true
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(|&x| x == 0)
    }
}

/// Solve the square system M·w = r_k mod p for every right-hand side.
/// Returns None when M is singular mod p.
fn solve_mod(m: &[Vec<u64>], rhs: &[Vec<u64>], p: u64) -> Option<Vec<Vec<u64>>> {
    let n = m.len();
    let k = rhs.len();
    let mut a: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut row = m[i].clone();
            row.extend(rhs.iter().map(|r| r[i]));
            row
        })
        .collect();
    let w = n + k;
    for c in 0..n {
        let piv = (c..n).find(|&i| a[i][c] != 0)?;
        a.swap(c, piv);
        let inv = invmod(a[c][c], p);
        for x in a[c][c..w].iter_mut() {
            *x = mulmod(*x, inv, p);
        }
        let (top, rest) = a.split_at_mut(c + 1);
        let prow = &top[c];
        for row in rest.iter_mut() {
            let f = row[c];
            if f == 0 {
                continue;
            }
            let nf = p - f;
            for j in c..w {
                let y = prow[j];
                if y != 0 {
                    row[j] = (row[j] + nf * y) % p;
                }
            }
        }
    }
    let mut sol = vec![vec![0u64; n]; k];
    for (s, out) in sol.iter_mut().enumerate() {
        for i in (0..n).rev() {
            let mut v = a[i][n + s];
            for j in i + 1..n {
                if a[i][j] != 0 {
                    v = (v + p - mulmod(a[i][j], out[j], p)) % p;
                }
            }
            out[i] = v;
        }
    }
    Some(sol)
}

fn ratrecon(a: &BigInt, m: &BigInt, bound: &BigInt) -> Option<Rational> {
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while &r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r2);
        let t2 = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || &t1.abs() > bound || !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(Rational::new(r1, t1))
}

/// Reconstruct a vector sharing denominators where possible.
fn reconstruct(res: &[BigInt], m: &BigInt, guaranteed: bool) -> Option<Vec<Rational>> {
    let bound = (m / 2u32).sqrt();
    if guaranteed {
        return res.iter().map(|a| ratrecon(a, m, &bound)).collect();
    }
    let half = m / 2u32;
    let mut d = BigInt::one();
    let mut out = Vec::with_capacity(res.len());
    for a in res {
        let mut t = (a * &d).mod_floor(m);
        if t > half {
            t -= m;
        }
        if t.abs() <= bound {
            out.push(Rational::new(t, d.clone()));
            continue;
        }
        let q = ratrecon(&t, m, &bound)?;
        d *= q.denom();
        if d > bound {
            return None;
        }
        out.push(Rational::new(q.numer().clone(), d.clone()));
    }
    Some(out)
}

/// Exact check Σ_j cols[j]·w_j = rhs over Z after clearing denominators.
fn verify(cols: &[&IntColumn], w: &[Rational], rhs: &IntColumn, rows: usize) -> bool {
    let d = w.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut acc = vec![BigInt::zero(); rows];
    for (c, x) in cols.iter().zip(w) {
        if x.is_zero() {
            continue;
        }
        let f = x.numer() * (&d / x.denom());
        for (r, v) in &c.entries {
            acc[*r] += v * &f;
        }
    }
    for (r, v) in &rhs.entries {
        acc[*r] -= v * &d;
    }
    acc.iter().all(Zero::is_zero)
}

/// Solve Σ_j cols[j]·w_j = rhs exactly for each right-hand side, using the
/// square subsystem on `pivot_rows` (nonsingular modulo some prime).
///
/// Returns per right-hand side the unique solution, or None when the
/// right-hand side is not in the rational span of the columns. The None
/// verdict is certified by reconstructing past the Hadamard bound.
pub fn certified_solve(
    cols: &[&IntColumn],
    pivot_rows: &[usize],
    rhs: &[&IntColumn],
    rows: usize,
) -> Vec<Option<Vec<Rational>>> {
    let n = cols.len();
    assert_eq!(n, pivot_rows.len());
    if rhs.is_empty() {
        return Vec::new();
    }
    if n == 0 {
        return rhs.iter().map(|r| if r.is_zero() { Some(Vec::new()) } else { None }).collect();
    }
    let mut row_pos = vec![usize::MAX; rows];
    for (i, &r) in pivot_rows.iter().enumerate() {
        row_pos[r] = i;
    }
    let restrict = |c: &IntColumn, p: u64| -> Vec<u64> {
        let mut v = vec![0u64; n];
        for (r, x) in &c.entries {
            let i = row_pos[*r];
            if i != usize::MAX {
                v[i] = mod_big(x, p);
            }
        }
        v
    };

    // Hadamard bound on numerators and denominators of the square solution.
    let det_bits: f64 = cols.iter().map(|c| c.norm_bits().max(0.0)).sum();
    let rhs_bits = rhs.iter().map(|c| c.norm_bits()).fold(0.0f64, f64::max);
    let need_bits = 2.0 * (det_bits + rhs_bits.max(0.0)) + 4.0;

    let mut done: Vec<Option<Option<Vec<Rational>>>> = vec![None; rhs.len()];
    let mut residues: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; rhs.len()];
    let mut last: Vec<Option<Vec<Rational>>> = vec![None; rhs.len()];
    let mut modulus = BigInt::one();
    let mut next_prime = 0usize;
    let batch = rayon::current_num_threads().max(1) * 2;

    loop {
        let pending: Vec<usize> = (0..rhs.len()).filter(|&i| done[i].is_none()).collect();
        if pending.is_empty() {
            break;
        }
        let primes: Vec<u64> = (next_prime..next_prime + batch).map(prime).collect();
        next_prime += batch;
        let images: Vec<(u64, Option<Vec<Vec<u64>>>)> = primes
            .par_iter()
            .map(|&p| {
                let m: Vec<Vec<u64>> = {
                    let colsm: Vec<Vec<u64>> = cols.iter().map(|c| restrict(c, p)).collect();
                    (0..n).map(|i| (0..n).map(|j| colsm[j][i]).collect()).collect()
                };
                let r: Vec<Vec<u64>> = pending.iter().map(|&i| restrict(rhs[i], p)).collect();
                (p, solve_mod(&m, &r, p))
            })
            .collect();
        for (p, img) in images {
            let Some(img) = img else { continue };
            let pb = BigInt::from(p);
            let minv = invmod(mod_big(&modulus, p), p);
            for (slot, &i) in pending.iter().enumerate() {
                for (x, &r) in residues[i].iter_mut().zip(&img[slot]) {
                    let cur = mod_big(x, p);
                    let delta = mulmod((r + p - cur) % p, minv, p);
                    if delta != 0 {
                        *x += &modulus * BigInt::from(delta);
                    }
                }
            }
            modulus *= pb;
        }
        let guaranteed = modulus.bits() as f64 > need_bits;
        for &i in &pending {
            let rec = reconstruct(&residues[i], &modulus, guaranteed);
            match rec {
                Some(w) => {
                    let stable = last[i].as_ref() == Some(&w);
                    if (stable || guaranteed) && verify(cols, &w, rhs[i], rows) {
                        done[i] = Some(Some(w));
                        continue;
                    }
                    if guaranteed {
                        done[i] = Some(None);
                        continue;
                    }
                    last[i] = Some(w);
                }
                None => {
                    assert!(!guaranteed, "reconstruction failed past the Hadamard bound");
                    last[i] = None;
                }
            }
        }
    }
    done.into_iter().map(|d| d.expect("all resolved")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::matrix::{solve_exact, RationalMatrix};
    use crate::poly::{rat, ratio};

    fn col(v: &[Rational]) -> IntColumn {
        IntColumn::from_rational(&v.iter().cloned().enumerate().collect::<Vec<_>>())
    }

    #[test]
    fn primes_descend() {
        assert_eq!(prime(0), (1u64 << 31) - 1);
        assert!(prime(1) < prime(0));
        assert!(is_prime(prime(5)));
    }

    #[test]
    fn reconstructs_against_reference() {
        let rows: Vec<Vec<Rational>> = vec![
            vec![rat(2), ratio(1, 3), rat(0)],
            vec![rat(5), rat(-7), ratio(3, 2)],
            vec![rat(1), rat(1), rat(1)],
            vec![rat(3), ratio(-20, 3), ratio(5, 2)],
        ];
        let a = RationalMatrix::from_rows(rows);
        let b = a.mul_vec(&[ratio(1, 7), rat(3), ratio(-2, 5)]);
        let reference = solve_exact(&a, &b).unwrap();
        let cols: Vec<IntColumn> = (0..3).map(|j| col(&a.column(j))).collect();
        let rhs = col(&b);
        let mut basis = ModBasis::new(prime(0));
        for (j, c) in cols.iter().enumerate() {
            basis.insert(j, c.reduce(prime(0), 4));
        }
        assert!(basis.contains(&rhs.reduce(prime(0), 4)));
        let refs: Vec<&IntColumn> = cols.iter().collect();
        let sol = certified_solve(&refs, &basis.pivot_rows(), &[&rhs], 4);
        let w = sol[0].clone().unwrap();
        let u: Vec<Rational> =
            w.iter().zip(&cols).map(|(x, c)| x * Rational::from_integer(c.scale.clone()) / Rational::from_integer(rhs.scale.clone())).collect();
        assert_eq!(u, reference.particular);
    }

    #[test]
    fn certifies_inconsistency() {
        let cols = [col(&[rat(1), rat(0), rat(1)])];
        let rhs = col(&[rat(1), rat(1), rat(1)]);
        let refs: Vec<&IntColumn> = cols.iter().collect();
        let sol = certified_solve(&refs, &[0], &[&rhs], 3);
        assert_eq!(sol, vec![None]);
    }
}
