//! Probabilists' Hermite polynomials, basis conversion and Gaussian expectations.

use std::collections::BTreeMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::poly::{MultiIndex, Poly, Rational};

/// Connection coefficients c(n, k) with x^n = Σ_k c(n, k) H_k(x).
///
/// The same magnitudes give H_n = Σ_k (−1)^{(n−k)/2} c(n, k) x^k.
struct Table {
    rows: Vec<Vec<BigInt>>,
}

impl Table {
    fn grow(&mut self, n: usize) {
        while self.rows.len() <= n {
            let m = self.rows.len();
            if m == 0 {
                self.rows.push(vec![BigInt::one()]);
                continue;
            }
            let prev = &self.rows[m - 1];
            let mut row = vec![BigInt::zero(); m + 1];
            for (k, slot) in row.iter_mut().enumerate() {
                let mut v = BigInt::zero();
                if k >= 1 && k - 1 < prev.len() {
                    v += &prev[k - 1];
                }
                if k + 1 < prev.len() {
                    v += &prev[k + 1] * BigInt::from(k + 1);
                }
                *slot = v;
            }
            self.rows.push(row);
        }
    }
}

fn table() -> &'static RwLock<Table> {
    static T: OnceLock<RwLock<Table>> = OnceLock::new();
    T.get_or_init(|| RwLock::new(Table { rows: Vec::new() }))
}

/// Run `f` on the connection row for degree n, growing the cache if needed.
fn with_row<R>(n: usize, f: impl FnOnce(&[BigInt]) -> R) -> R {
    {
        let t = table().read().expect("hermite table poisoned");
        if let Some(row) = t.rows.get(n) {
            return f(row);
        }
    }
    let mut t = table().write().expect("hermite table poisoned");
    t.grow(n);
    f(&t.rows[n])
}

/// Ascending integer coefficients of H_n.
pub fn hermite_coeffs(n: usize) -> Vec<BigInt> {
    with_row(n, |row| {
        row.iter()
            .enumerate()
            .map(|(k, c)| if ((n - k) / 2) % 2 == 1 { -c.clone() } else { c.clone() })
            .collect()
    })
}

/// Ascending coefficients of x^n in the Hermite basis.
pub fn monomial_in_hermite(n: usize) -> Vec<BigInt> {
    with_row(n, |row| row.to_vec())
}

/// H_n as a univariate polynomial.
pub fn hermite(n: usize) -> Poly {
    let c: Vec<Rational> = hermite_coeffs(n).into_iter().map(Rational::from_integer).collect();
    Poly::from_coeffs(&c)
}

/// H_α(x) = Π_k H_{α_k}(x_k).
pub fn hermite_multi(alpha: &MultiIndex) -> Poly {
    from_hermite(&HermiteExpansion::single(alpha.clone(), Rational::one()))
}

/// A polynomial in the product-Hermite basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermiteExpansion {
    nvars: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl HermiteExpansion {
    pub fn zero(nvars: usize) -> Self {
        HermiteExpansion { nvars, terms: BTreeMap::new() }
    }

    pub fn single(alpha: MultiIndex, c: Rational) -> Self {
        let mut e = HermiteExpansion::zero(alpha.len());
        e.add_term(alpha, c);
        e
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Rational {
        self.terms.get(alpha).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(alpha.clone()).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&alpha);
        }
    }

    /// Coefficient of H_0, which is the Gaussian expectation.
    pub fn expect(&self) -> Rational {
        self.coeff(&MultiIndex::zero(self.nvars))
    }

    /// Apply a scalar function of the multi-index to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&MultiIndex, &Rational) -> Rational) -> HermiteExpansion {
        let mut r = HermiteExpansion::zero(self.nvars);
        for (a, c) in &self.terms {
            r.add_term(a.clone(), f(a, c));
        }
        r
    }
}

/// Expand each monomial per variable through `row_of`, tensoring the rows.
fn convert(
    nvars: usize,
    terms: impl Iterator<Item = (MultiIndex, Rational)>,
    row_of: impl Fn(usize) -> Vec<BigInt>,
) -> BTreeMap<MultiIndex, Rational> {
    let mut out: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
    for (alpha, c) in terms {
        let mut partial: Vec<(MultiIndex, Rational)> = vec![(MultiIndex::zero(nvars), c)];
        for k in 0..nvars {
            let e = alpha.get(k) as usize;
            if e == 0 {
                continue;
            }
            let row = row_of(e);
            let mut next = Vec::with_capacity(partial.len() * (e / 2 + 1));
            for (b, v) in &partial {
                for (j, r) in row.iter().enumerate() {
                    if !r.is_zero() {
                        next.push((b.with(k, j as u32), v * Rational::from_integer(r.clone())));
                    }
                }
            }
            partial = next;
        }
        for (b, v) in partial {
            let slot = out.entry(b).or_insert_with(Rational::zero);
            *slot += v;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

pub fn to_hermite(p: &Poly) -> HermiteExpansion {
    let terms = convert(p.nvars(), p.terms().map(|(a, c)| (a.clone(), c.clone())), monomial_in_hermite);
    HermiteExpansion { nvars: p.nvars(), terms }
}

pub fn from_hermite(e: &HermiteExpansion) -> Poly {
    let terms = convert(e.nvars, e.terms.iter().map(|(a, c)| (a.clone(), c.clone())), hermite_coeffs);
    Poly::from_terms(e.nvars, terms)
}

fn moment_cache() -> &'static RwLock<Vec<BigInt>> {
    static M: OnceLock<RwLock<Vec<BigInt>>> = OnceLock::new();
    M.get_or_init(|| RwLock::new(vec![BigInt::one()]))
}

/// E[X^n] for X ~ N(0, 1) as an integer.
pub fn gaussian_moment_int(n: usize) -> BigInt {
    if n % 2 == 1 {
        return BigInt::zero();
    }
    let half = n / 2;
    {
        let m = moment_cache().read().expect("moment cache poisoned");
        if let Some(v) = m.get(half) {
            return v.clone();
        }
    }
    let mut m = moment_cache().write().expect("moment cache poisoned");
    while m.len() <= half {
        let j = m.len();
        let v = &m[j - 1] * BigInt::from(2 * j - 1);
        m.push(v);
    }
    m[half].clone()
}

/// E[X^n] = (n−1)!! for even n, 0 for odd n.
pub fn gaussian_moment(n: usize) -> Rational {
    Rational::from_integer(gaussian_moment_int(n))
}

/// E[p(X)] for i.i.d. standard Gaussian coordinates.
pub fn expect(p: &Poly) -> Rational {
    let mut s = Rational::zero();
    for (a, c) in p.terms() {
        if a.exps().iter().any(|e| e % 2 == 1) {
            continue;
        }
        let mut m = BigInt::one();
        for &e in a.exps() {
            m *= gaussian_moment_int(e as usize);
        }
        s += c * Rational::from_integer(m);
    }
    s
}

/// E[h^j] for j = 0..=n.
pub fn moments_of(h: &Poly, n: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n + 1);
    let mut pw = Poly::one(h.nvars());
    out.push(Rational::one());
    for _ in 1..=n {
        pw = &pw * h;
        out.push(expect(&pw));
    }
    out
}

/// Cumulants κ_1..κ_n from raw moments m_0..m_n (index 0 of the result is unused and zero).
pub fn cumulants_from_moments(m: &[Rational]) -> Vec<Rational> {
    let n = m.len() - 1;
    let mut k = vec![Rational::zero(); n + 1];
    for i in 1..=n {
        let mut v = m[i].clone();
        let mut binom = BigInt::one();
        for j in 1..i {
            // binom = C(i−1, j−1)
            v -= Rational::from_integer(binom.clone()) * &k[j] * &m[i - j];
            binom = binom * BigInt::from(i - j) / BigInt::from(j);
        }
        k[i] = v;
    }
    k
}

/// κ_n(h(X)) from exact moments.
pub fn cumulant(h: &Poly, n: usize) -> Rational {
    assert!(n >= 1, "cumulant order starts at 1");
    let m = moments_of(h, n);
    cumulants_from_moments(&m)[n].clone()
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}
