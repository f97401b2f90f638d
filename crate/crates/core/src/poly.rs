//! Exact multivariate polynomials over arbitrary-precision rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    VarMismatch { left: usize, right: usize },
    #[error("variable index {k} out of range for {nvars} variables")]
    IndexOutOfRange { k: usize, nvars: usize },
    #[error("all polynomials are zero")]
    AllZero,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        MultiIndex(exps)
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, k: usize) -> Self {
        let mut v = vec![0; d];
        v[k] = 1;
        MultiIndex(v)
    }

    pub fn univariate(n: u32) -> Self {
        MultiIndex(vec![n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, k: usize) -> u32 {
        self.0[k]
    }

    /// Total degree |α|.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// α − e_k, or None when α_k = 0.
    pub fn minus_unit(&self, k: usize) -> Option<MultiIndex> {
        if self.0[k] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[k] -= 1;
        Some(MultiIndex(v))
    }

    pub fn with(&self, k: usize, e: u32) -> MultiIndex {
        let mut v = self.0.clone();
        v[k] = e;
        MultiIndex(v)
    }
}

/// Degree with a distinguished value for the zero polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Degree {
    MinusInfinity,
    Finite(u32),
}

impl Degree {
    pub fn finite(self) -> Option<u32> {
        match self {
            Degree::Finite(n) => Some(n),
            Degree::MinusInfinity => None,
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::MinusInfinity => write!(f, "-inf"),
            Degree::Finite(n) => write!(f, "{n}"),
        }
    }
}

/// Sparse polynomial in `nvars` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(MultiIndex::zero(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Rational::one())
    }

    pub fn monomial(alpha: MultiIndex, c: Rational) -> Self {
        let mut p = Poly::zero(alpha.len());
        p.add_term(alpha, c);
        p
    }

    /// The variable x_k (0-based k).
    pub fn var(nvars: usize, k: usize) -> Self {
        Poly::monomial(MultiIndex::unit(nvars, k), Rational::one())
    }

    /// Univariate polynomial from ascending coefficients.
    pub fn from_coeffs(coeffs: &[Rational]) -> Self {
        let mut p = Poly::zero(1);
        for (n, c) in coeffs.iter().enumerate() {
            p.add_term(MultiIndex::univariate(n as u32), c.clone());
        }
        p
    }

    pub fn from_int_coeffs(coeffs: &[i64]) -> Self {
        let v: Vec<Rational> = coeffs.iter().map(|&c| rat(c)).collect();
        Poly::from_coeffs(&v)
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, Rational)>>(nvars: usize, it: I) -> Self {
        let mut p = Poly::zero(nvars);
        for (a, c) in it {
            assert_eq!(a.len(), nvars, "multi-index length must match nvars");
            p.add_term(a, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<MultiIndex, Rational> {
        self.terms
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Rational {
        self.terms.get(alpha).cloned().unwrap_or_else(Rational::zero)
    }

    /// Coefficient of x^n in a univariate polynomial.
    pub fn coeff_n(&self, n: u32) -> Rational {
        self.coeff(&MultiIndex::univariate(n))
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&MultiIndex::zero(self.nvars))
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(alpha) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn degree(&self) -> Degree {
        self.terms
            .keys()
            .map(|a| a.degree())
            .max()
            .map_or(Degree::MinusInfinity, Degree::Finite)
    }

    /// Degree in variable k.
    pub fn degree_in(&self, k: usize) -> Degree {
        self.terms
            .keys()
            .map(|a| a.get(k))
            .max()
            .map_or(Degree::MinusInfinity, Degree::Finite)
    }

    /// Leading coefficient of a univariate polynomial.
    pub fn leading_coeff(&self) -> Rational {
        self.terms.iter().next_back().map(|(_, c)| c.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(a, v)| (a.clone(), v * c)).collect(),
        }
    }

    fn check(&self, other: &Poly) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::VarMismatch { left: self.nvars, right: other.nvars });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check(other)?;
        let mut r = self.clone();
        for (a, c) in &other.terms {
            r.add_term(a.clone(), c.clone());
        }
        Ok(r)
    }

    pub fn checked_sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check(other)?;
        let mut r = self.clone();
        for (a, c) in &other.terms {
            r.add_term(a.clone(), -c.clone());
        }
        Ok(r)
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check(other)?;
        let mut r = Poly::zero(self.nvars);
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                r.add_term(a.add(b), u * v);
            }
        }
        Ok(r)
    }

    pub fn add_scaled(&mut self, other: &Poly, c: &Rational) {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        if c.is_zero() {
            return;
        }
        for (a, v) in &other.terms {
            self.add_term(a.clone(), v * c);
        }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut r = Poly::one(self.nvars);
        for _ in 0..n {
            r = &r * self;
        }
        r
    }

    /// Formal partial derivative in variable k (0-based).
    pub fn partial(&self, k: usize) -> Result<Poly, PolyError> {
        if k >= self.nvars {
            return Err(PolyError::IndexOutOfRange { k, nvars: self.nvars });
        }
        let mut r = Poly::zero(self.nvars);
        for (a, c) in &self.terms {
            let e = a.get(k);
            if e > 0 {
                r.add_term(a.with(k, e - 1), c * rat(e as i64));
            }
        }
        Ok(r)
    }

    /// Univariate derivative.
    pub fn derivative(&self) -> Poly {
        self.partial(0).expect("univariate derivative")
    }

    /// Multiply by x_k.
    pub fn mul_var(&self, k: usize) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(a, c)| (a.with(k, a.get(k) + 1), c.clone())).collect(),
        }
    }

    /// Evaluate at a rational point.
    pub fn eval(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.nvars);
        let mut s = Rational::zero();
        for (a, c) in &self.terms {
            let mut t = c.clone();
            for (k, &e) in a.exps().iter().enumerate() {
                for _ in 0..e {
                    t *= &x[k];
                }
            }
            s += t;
        }
        s
    }

    /// Embed a polynomial of a single variable into `nvars` variables as variable k.
    pub fn embed(&self, nvars: usize, k: usize) -> Poly {
        assert_eq!(self.nvars, 1);
        Poly {
            nvars,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (MultiIndex::unit(nvars, k).with(k, a.get(0)), c.clone()))
                .collect(),
        }
    }

    /// Ascending dense coefficients of a univariate polynomial.
    pub fn dense_coeffs(&self) -> Vec<Rational> {
        assert_eq!(self.nvars, 1);
        let n = match self.degree() {
            Degree::MinusInfinity => return Vec::new(),
            Degree::Finite(n) => n as usize,
        };
        let mut v = vec![Rational::zero(); n + 1];
        for (a, c) in &self.terms {
            v[a.get(0) as usize] = c.clone();
        }
        v
    }

    /// Quotient and remainder of univariate division.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert_eq!(self.nvars, 1);
        assert_eq!(d.nvars, 1);
        let dd = d.degree().finite().expect("division by zero polynomial");
        let lc = d.leading_coeff();
        let mut q = Poly::zero(1);
        let mut r = self.clone();
        while let Degree::Finite(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let c = r.leading_coeff() / &lc;
            let shift = MultiIndex::univariate(rd - dd);
            q.add_term(shift.clone(), c.clone());
            for (a, v) in &d.terms {
                r.add_term(a.add(&shift), -(v * &c));
            }
        }
        (q, r)
    }

    /// Monic gcd of univariate polynomials.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lc = a.leading_coeff();
        a.scale(&(Rational::one() / lc))
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    /// Render with the given variable names.
    pub fn display_with(&self, names: &VarNames) -> String {
        format_poly(self, names)
    }

    /// Render a univariate polynomial in y.
    pub fn to_y_string(&self) -> String {
        format_poly(self, &VarNames::Y)
    }

    /// Parse a polynomial in x (x alias x1) with inferred variable count.
    pub fn parse_x(s: &str) -> Result<Poly, PolyError> {
        parse(s, VarMode::X(None))
    }

    /// Parse a polynomial in x1..xd with exactly `d` variables.
    pub fn parse_xd(s: &str, d: usize) -> Result<Poly, PolyError> {
        parse(s, VarMode::X(Some(d)))
    }

    /// Parse a univariate polynomial in y.
    pub fn parse_y(s: &str) -> Result<Poly, PolyError> {
        parse(s, VarMode::Y)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.checked_add(rhs).expect("variable count mismatch")
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.checked_sub(rhs).expect("variable count mismatch")
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.checked_mul(rhs).expect("variable count mismatch")
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(a, c)| (a.clone(), -c)).collect() }
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        &self + &rhs
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self - &rhs
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_poly(self, &VarNames::X))
    }
}

/// A sequence of d polynomials over the same variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyVector {
    pub components: Vec<Poly>,
}

impl PolyVector {
    pub fn zero(d: usize, nvars: usize) -> Self {
        PolyVector { components: vec![Poly::zero(nvars); d] }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    /// Euclidean pairing Σ a_k b_k.
    pub fn dot(&self, other: &PolyVector) -> Poly {
        assert_eq!(self.len(), other.len());
        let nvars = self.components.first().map_or(1, Poly::nvars);
        let mut s = Poly::zero(nvars);
        for (a, b) in self.components.iter().zip(&other.components) {
            s = &s + &(a * b);
        }
        s
    }
}

/// p(h(x)) for univariate p, by Horner evaluation.
pub fn compose_target(p: &Poly, h: &Poly) -> Poly {
    assert_eq!(p.nvars(), 1, "compose_target expects a univariate outer polynomial");
    let coeffs = p.dense_coeffs();
    let mut r = Poly::zero(h.nvars());
    for c in coeffs.iter().rev() {
        r = &r * h;
        r.add_term(MultiIndex::zero(h.nvars()), c.clone());
    }
    r
}

/// Scale a list of polynomials by one rational so all coefficients are coprime
/// integers and the first nonzero coefficient (lowest index, then lowest
/// monomial) is positive. Returns the normalized list and the scale applied.
pub fn content_normalize(coeffs: &[Poly]) -> Result<(Vec<Poly>, Rational), PolyError> {
    let mut den = BigInt::one();
    let mut num = BigInt::zero();
    let mut first: Option<Rational> = None;
    for p in coeffs {
        for c in p.terms.values() {
            den = den.lcm(c.denom());
            num = num.gcd(c.numer());
            if first.is_none() {
                first = Some(c.clone());
            }
        }
    }
    let first = first.ok_or(PolyError::AllZero)?;
    let mut scale = Rational::new(den, num);
    if first.is_negative() {
        scale = -scale;
    }
    Ok((coeffs.iter().map(|p| p.scale(&scale)).collect(), scale))
}

/// Variable naming for rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarNames {
    /// x when univariate, x1..xd otherwise.
    X,
    Y,
    Custom(Vec<String>),
}

impl VarNames {
    fn name(&self, k: usize, nvars: usize) -> String {
        match self {
            VarNames::X if nvars == 1 => "x".to_string(),
            VarNames::X => format!("x{}", k + 1),
            VarNames::Y => "y".to_string(),
            VarNames::Custom(v) => v[k].clone(),
        }
    }
}

/// Monomials in display order: descending total degree, then descending lex.
pub fn display_order(p: &Poly) -> Vec<(&MultiIndex, &Rational)> {
    let mut v: Vec<_> = p.terms.iter().collect();
    v.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| b.0.cmp(a.0)));
    v
}

pub fn format_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn format_monomial(a: &MultiIndex, names: &VarNames) -> String {
    let mut parts = Vec::new();
    for (k, &e) in a.exps().iter().enumerate() {
        if e == 0 {
            continue;
        }
        let n = names.name(k, a.len());
        if e == 1 {
            parts.push(n);
        } else {
            parts.push(format!("{n}^{e}"));
        }
    }
    parts.join("*")
}

fn format_poly(p: &Poly, names: &VarNames) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (i, (a, c)) in display_order(p).into_iter().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push(if neg { '-' } else { '+' });
        }
        let abs = c.abs();
        let mono = format_monomial(a, names);
        if mono.is_empty() {
            s.push_str(&format_rational(&abs));
        } else if abs.is_one() {
            s.push_str(&mono);
        } else {
            s.push_str(&format_rational(&abs));
            s.push('*');
            s.push_str(&mono);
        }
    }
    s
}

#[derive(Clone, Copy, Debug)]
enum VarMode {
    X(Option<usize>),
    Y,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn perr(pos: usize, msg: impl Into<String>) -> PolyError {
    PolyError::Parse { pos, msg: msg.into() }
}

fn tokenize(s: &str, mode: VarMode) -> Result<Vec<(usize, Tok)>, PolyError> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'0'..=b'9' => {
                let st = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'.' || b[i] == b'e' || b[i] == b'E') {
                    return Err(perr(i, "floating-point literals are not accepted"));
                }
                let n: BigInt = s[st..i].parse().map_err(|_| perr(st, "bad integer"))?;
                out.push((st, Tok::Int(n)));
            }
            b'x' => {
                let st = i;
                i += 1;
                let ds = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if matches!(mode, VarMode::Y) {
                    return Err(perr(st, "expected a polynomial in y"));
                }
                let k = if ds == i {
                    1
                } else {
                    s[ds..i].parse::<usize>().map_err(|_| perr(ds, "bad variable index"))?
                };
                if k == 0 {
                    return Err(perr(ds, "variables are numbered from x1"));
                }
                out.push((st, Tok::Var(k - 1)));
            }
            b'y' => {
                if !matches!(mode, VarMode::Y) {
                    return Err(perr(i, "expected a polynomial in x"));
                }
                out.push((i, Tok::Var(0)));
                i += 1;
            }
            b'+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            b'-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            b'*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            b'/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            b'^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            _ => return Err(perr(i, format!("unexpected character '{}'", c as char))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    nvars: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn expr(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly, PolyError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly, PolyError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let at = self.here();
            match self.toks.get(self.pos).map(|(_, t)| t.clone()) {
                Some(Tok::Int(n)) => {
                    self.pos += 1;
                    let e: u32 = n.try_into().map_err(|_| perr(at, "exponent too large"))?;
                    Ok(base.pow(e))
                }
                _ => Err(perr(at, "expected a non-negative integer exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly, PolyError> {
        let at = self.here();
        match self.toks.get(self.pos).map(|(_, t)| t.clone()) {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                let mut q = Rational::from_integer(n);
                if let Some(Tok::Slash) = self.peek() {
                    self.pos += 1;
                    let at2 = self.here();
                    match self.toks.get(self.pos).map(|(_, t)| t.clone()) {
                        Some(Tok::Int(d)) if !d.is_zero() => {
                            self.pos += 1;
                            q /= Rational::from_integer(d);
                        }
                        _ => return Err(perr(at2, "expected a nonzero integer denominator")),
                    }
                }
                Ok(Poly::constant(self.nvars, q))
            }
            Some(Tok::Var(k)) => {
                self.pos += 1;
                Ok(Poly::var(self.nvars, k))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(perr(self.here(), "expected ')'")),
                }
            }
            Some(t) => Err(perr(at, format!("unexpected token {t:?}"))),
            None => Err(perr(at, "unexpected end of input")),
        }
    }
}

fn parse(s: &str, mode: VarMode) -> Result<Poly, PolyError> {
    let toks = tokenize(s, mode)?;
    if toks.is_empty() {
        return Err(perr(0, "empty expression"));
    }
    let max_var = toks
        .iter()
        .filter_map(|(_, t)| if let Tok::Var(k) = t { Some(*k + 1) } else { None })
        .max()
        .unwrap_or(1);
    let nvars = match mode {
        VarMode::Y => 1,
        VarMode::X(None) => max_var,
        VarMode::X(Some(d)) => {
            if max_var > d {
                return Err(perr(0, format!("variable x{max_var} exceeds declared dimension {d}")));
            }
            d
        }
    };
    let mut p = Parser { toks, pos: 0, nvars, end: s.len() };
    let r = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(perr(p.here(), "trailing input"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(s: &str) -> Poly {
        Poly::parse_x(s).unwrap()
    }

    #[test]
    fn product_telescopes() {
        let a = x("x1^2+x1");
        let b = x("x1-1");
        assert_eq!(&a * &b, x("x1^3-x1"));
    }

    #[test]
    fn adding_zero_is_identity() {
        let p = x("3*x^2-1/2");
        assert_eq!(&p + &Poly::zero(1), p);
    }

    #[test]
    fn h3_squared() {
        let h = x("x^3-3*x");
        assert_eq!(&h * &h, x("x^6-6*x^4+9*x^2"));
    }

    #[test]
    fn partials() {
        assert_eq!(x("x^3-3*x").partial(0).unwrap(), x("3*x^2-3"));
        assert_eq!(x("x1^2*x2").partial(0).unwrap(), x("2*x1*x2"));
        assert!(Poly::constant(2, rat(5)).partial(1).unwrap().is_zero());
        assert!(matches!(x("x").partial(1), Err(PolyError::IndexOutOfRange { .. })));
    }

    #[test]
    fn mismatch_is_reported() {
        let a = x("x1");
        let b = x("x2");
        assert!(matches!(a.checked_add(&b), Err(PolyError::VarMismatch { left: 1, right: 2 })));
    }

    #[test]
    fn compose_examples() {
        let y2 = Poly::parse_y("y^2").unwrap();
        assert_eq!(compose_target(&y2, &x("x^2-1")), x("x^4-2*x^2+1"));
        let h = x("x^3-3*x");
        assert_eq!(compose_target(&Poly::parse_y("y").unwrap(), &h), h);
        assert_eq!(compose_target(&Poly::parse_y("y^2-3").unwrap(), &h), x("x^6-6*x^4+9*x^2-3"));
    }

    #[test]
    fn normalize_examples() {
        let (v, s) =
            content_normalize(&[Poly::parse_y("1/2*y").unwrap(), Poly::parse_y("-3/2").unwrap()]).unwrap();
        assert_eq!(v, vec![Poly::parse_y("y").unwrap(), Poly::parse_y("-3").unwrap()]);
        assert_eq!(s, rat(2));

        let input = vec![Poly::parse_y("y").unwrap(), Poly::parse_y("-3").unwrap()];
        let (v, s) = content_normalize(&input).unwrap();
        assert_eq!(v, input);
        assert_eq!(s, rat(1));

        let (v, s) =
            content_normalize(&[Poly::parse_y("-y").unwrap(), Poly::parse_y("2*y^2").unwrap()]).unwrap();
        assert_eq!(v, vec![Poly::parse_y("y").unwrap(), Poly::parse_y("-2*y^2").unwrap()]);
        assert_eq!(s, rat(-1));

        assert_eq!(content_normalize(&[Poly::zero(1)]), Err(PolyError::AllZero));
    }

    #[test]
    fn zero_degree_is_sentinel() {
        assert_eq!(Poly::zero(2).degree(), Degree::MinusInfinity);
        assert!(Degree::MinusInfinity < Degree::Finite(0));
        assert_eq!(x("x1*x2^3+x1").degree(), Degree::Finite(4));
    }

    #[test]
    fn grammar() {
        assert_eq!(x("x^4-6*x^2+3").to_string(), "x^4-6*x^2+3");
        assert_eq!(x("(x+1)^2").to_string(), "x^2+2*x+1");
        assert_eq!(x("3/4*x1*x2^2-x3").nvars(), 3);
        assert_eq!(x("3/4*x1*x2^2-x3").to_string(), "3/4*x1*x2^2-x3");
        assert!(Poly::parse_x("1.5*x").is_err());
        assert!(Poly::parse_x("x+").is_err());
        assert!(Poly::parse_x("x/2").is_err());
        assert!(Poly::parse_y("x").is_err());
        assert!(Poly::parse_xd("x3", 2).is_err());
        assert_eq!(Poly::parse_xd("x1", 3).unwrap().nvars(), 3);
        assert_eq!(Poly::parse_y("-y^2+50*y+24").unwrap().to_y_string(), "-y^2+50*y+24");
    }

    #[test]
    fn division() {
        let (q, r) = x("x^3-3*x").div_rem(&x("3*x^2-3"));
        assert_eq!(q, x("1/3*x"));
        assert_eq!(r, x("-2*x"));
        assert_eq!(x("x^2-1").gcd(&x("x^2+2*x+1")), x("x+1"));
    }
}
