//! Null-controllability search for algebraic Stein operators.
//!
//! At horizon T the controls p_1..p_T must satisfy
//! Γ^T v₀ + Σ_s Γ^{T−s} Θ p_s = 0 with Θp = p(h). Columns are stacked
//! block-major as [Θ | ΓΘ | Γ²Θ | …], so block j holds the coefficients of
//! p_{T−j} and a new horizon only appends a block.

pub mod matrix;
pub mod modular;
pub mod state;

use std::collections::HashMap;
use std::time::Instant;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::chain::{Provenance, SteinOperator};
use crate::hermite::expect;
use crate::malliavin::{gamma, GammaVariant, TargetSpec};
use crate::poly::{compose_target, content_normalize, MultiIndex, Poly, PolyError, Rational};

use matrix::{solve_exact, RationalMatrix};
use modular::{certified_solve, prime, IntColumn, ModBasis};

pub use state::{gamma_matrix, lambda_matrix, monomial_basis, state_bound, StateVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error("no null control with horizon <= {t_max} at degree {m}")]
    NotReachable { t_max: usize, m: usize },
    #[error("zero-order term must be nonzero")]
    ZeroOrderZero,
    #[error("state of degree {degree} exceeds the bound {bound}")]
    DimensionAudit { degree: u32, bound: usize },
    #[error("deadline passed at horizon {t}")]
    Timeout { t: usize },
    #[error("elimination needs about {needed} bytes, over the cap of {cap}")]
    MemoryCap { needed: u64, cap: u64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// How the zero-order coefficient p₀ is fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZeroOrder {
    /// p₀ = y, the zero-order term c·y with c = 1.
    Cy,
    /// p₀ = y^k − E[h(X)^k].
    Monomial(u32),
    /// A given p₀, centered before solving.
    Explicit(Poly),
    /// p₀ a free combination of y^k − E[h^k], k = 1..m.
    Generic,
}

impl ZeroOrder {
    pub fn label(&self) -> String {
        match self {
            ZeroOrder::Cy => "cy".into(),
            ZeroOrder::Monomial(k) => format!("y^{k}"),
            ZeroOrder::Explicit(p) => p.to_y_string(),
            ZeroOrder::Generic => "generic".into(),
        }
    }
}

/// A null control at the first feasible horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlSolution {
    pub t: usize,
    pub m: usize,
    /// p₀ before normalization.
    pub zero_order: Poly,
    /// Stacked p_1..p_T, each m+1 coefficients, after moment correction.
    pub particular: Vec<Rational>,
    /// Stacked vectors spanning the homogeneous solutions.
    pub nullspace_basis: Vec<Vec<Rational>>,
    /// Content-normalized p_0..p_T.
    pub coeffs: Vec<Poly>,
    /// Factor applied by the normalization.
    pub scale: Rational,
}

impl ControlSolution {
    pub fn operator(&self, target: &TargetSpec) -> SteinOperator {
        SteinOperator::new(target.clone(), self.coeffs.clone(), Provenance::Solver)
    }

    /// p_1..p_T from a stacked vector.
    pub fn unstack(&self, v: &[Rational]) -> Vec<Poly> {
        unstack(v, self.t, self.m)
    }
}

pub fn unstack(v: &[Rational], t: usize, m: usize) -> Vec<Poly> {
    (0..t).map(|s| Poly::from_coeffs(&v[s * (m + 1)..(s + 1) * (m + 1)])).collect()
}

/// Search options shared by the entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchOptions {
    pub variant: GammaVariant,
    /// Keep going past the first feasible horizon.
    pub all: bool,
    /// Checked before each new horizon.
    pub deadline: Option<Instant>,
    /// Bound on the estimated elimination footprint in bytes.
    pub memory_cap: Option<u64>,
}

impl SearchOptions {
    pub fn with_variant(variant: GammaVariant) -> Self {
        SearchOptions { variant, ..Default::default() }
    }

    fn check(&self, t: usize, engine: &Engine) -> Result<(), ControlError> {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(ControlError::Timeout { t });
        }
        if let Some(cap) = self.memory_cap {
            let needed = memory_estimate(engine.rows.len(), engine.cols.len());
            if needed > cap {
                return Err(ControlError::MemoryCap { needed, cap });
            }
        }
        Ok(())
    }
}

/// Rough footprint of the elimination: a residue word per entry of the
/// modular basis plus the exact integer columns.
pub fn memory_estimate(rows: usize, cols: usize) -> u64 {
    rows as u64 * cols as u64 * 64
}

/// Interning of monomials to row indices.
#[derive(Default)]
struct Rows {
    index: HashMap<MultiIndex, usize>,
}

impl Rows {
    fn column(&mut self, p: &Poly) -> IntColumn {
        let entries: Vec<(usize, Rational)> = p
            .terms()
            .map(|(a, c)| {
                let n = self.index.len();
                (*self.index.entry(a.clone()).or_insert(n), c.clone())
            })
            .collect();
        IntColumn::from_rational(&entries)
    }

    fn len(&self) -> usize {
        self.index.len()
    }
}

/// Outcome of one horizon in the elimination engine.
enum Horizon {
    Infeasible,
    /// Exact solution in unscaled column coordinates.
    Feasible { u: Vec<Rational>, null: Vec<Vec<Rational>> },
}

/// Incremental engine over stacked blocks of Γ^j Θ columns.
struct Engine<'a> {
    target: &'a TargetSpec,
    variant: GammaVariant,
    m: usize,
    rows: Rows,
    blocks: Vec<Vec<Poly>>,
    cols: Vec<IntColumn>,
    basis: ModBasis,
    /// Certified representation of each nonzero non-pivot column, in scaled coordinates.
    certs: HashMap<usize, Vec<Rational>>,
    /// Non-pivot columns (zero or certified dependent).
    nonpivots: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(target: &'a TargetSpec, m: usize, variant: GammaVariant) -> Self {
        Engine {
            target,
            variant,
            m,
            rows: Rows::default(),
            blocks: Vec::new(),
            cols: Vec::new(),
            basis: ModBasis::new(prime(0)),
            certs: HashMap::new(),
            nonpivots: Vec::new(),
        }
    }

    fn gamma(&self, f: &Poly) -> Poly {
        gamma(self.target, f, self.variant).expect("target arity")
    }

    /// Append block T−1 = Γ^{T−1}Θ.
    fn push_block(&mut self) {
        let block: Vec<Poly> = match self.blocks.last() {
            None => {
                let h = self.target.h();
                let mut v = vec![Poly::one(h.nvars())];
                for _ in 0..self.m {
                    let next = v.last().expect("nonempty") * h;
                    v.push(next);
                }
                v
            }
            Some(prev) => prev.iter().map(|c| self.gamma(c)).collect(),
        };
        for c in &block {
            let ic = self.rows.column(c);
            let idx = self.cols.len();
            let rows = self.rows.len();
            if ic.is_zero() || !self.basis.insert(idx, ic.reduce(self.basis.prime(), rows)) {
                self.nonpivots.push(idx);
            }
            self.cols.push(ic);
        }
        self.blocks.push(block);
    }

    fn pivot_data(&self, basis: &ModBasis) -> (Vec<usize>, Vec<usize>) {
        (basis.pivot_cols().to_vec(), basis.pivot_rows())
    }

    /// Certify every nonzero non-pivot column as a combination of pivots to its left.
    fn certify_nonpivots(&mut self) -> bool {
        let todo: Vec<usize> =
            self.nonpivots.iter().copied().filter(|j| !self.cols[*j].is_zero() && !self.certs.contains_key(j)).collect();
        if todo.is_empty() {
            return true;
        }
        let (pc, pr) = self.pivot_data(&self.basis);
        let cols: Vec<&IntColumn> = pc.iter().map(|&j| &self.cols[j]).collect();
        let rhs: Vec<&IntColumn> = todo.iter().map(|&j| &self.cols[j]).collect();
        let sols = certified_solve(&cols, &pr, &rhs, self.rows.len());
        for (j, s) in todo.into_iter().zip(sols) {
            let Some(w) = s else { return false };
            if pc.iter().zip(&w).any(|(&c, x)| c > j && !x.is_zero()) {
                return false;
            }
            let mut full = vec![Rational::zero(); self.cols.len()];
            for (&c, x) in pc.iter().zip(w) {
                full[c] = x;
            }
            self.certs.insert(j, full);
        }
        true
    }

    /// Convert a scaled-coordinate vector into true column coordinates.
    fn unscale(&self, w: &[Rational], rhs_scale: &num_bigint::BigInt) -> Vec<Rational> {
        w.iter()
            .zip(&self.cols)
            .map(|(x, c)| {
                if x.is_zero() {
                    Rational::zero()
                } else {
                    x * Rational::new(c.scale.clone(), rhs_scale.clone())
                }
            })
            .collect()
    }

    /// Homogeneous basis: one vector per non-pivot column.
    fn null_basis(&self) -> Vec<Vec<Rational>> {
        let n = self.cols.len();
        let mut out = Vec::new();
        for &j in &self.nonpivots {
            let mut v = match self.certs.get(&j) {
                Some(w) => {
                    let mut w = w.clone();
                    w.resize(n, Rational::zero());
                    self.unscale(&w, &self.cols[j].scale).into_iter().map(|x| -x).collect()
                }
                None => vec![Rational::zero(); n],
            };
            v[j] = Rational::one();
            out.push(v);
        }
        out
    }

    /// Decide A·u = rhs at the current horizon.
    fn solve(&mut self, rhs: &Poly) -> Horizon {
        let b = self.rows.column(rhs);
        let rows = self.rows.len();
        let in_span = self.basis.contains(&b.reduce(self.basis.prime(), rows));
        if !self.certify_nonpivots() {
            return self.solve_reference(rhs);
        }
        if !in_span {
            return Horizon::Infeasible;
        }
        let (pc, pr) = self.pivot_data(&self.basis);
        let cols: Vec<&IntColumn> = pc.iter().map(|&j| &self.cols[j]).collect();
        match certified_solve(&cols, &pr, &[&b], rows).pop().flatten() {
            Some(w) => {
                let mut full = vec![Rational::zero(); self.cols.len()];
                for (&c, x) in pc.iter().zip(w) {
                    full[c] = x;
                }
                Horizon::Feasible { u: self.unscale(&full, &b.scale), null: self.null_basis() }
            }
            None => self.solve_reference(rhs),
        }
    }

    /// Fallback through the fraction-free reference solver.
    fn solve_reference(&mut self, rhs: &Poly) -> Horizon {
        let b = self.rows.column(rhs);
        let n = self.rows.len();
        let dense = |c: &IntColumn| {
            let mut v = vec![Rational::zero(); n];
            for (r, x) in &c.entries {
                v[*r] = Rational::new(x.clone(), c.scale.clone());
            }
            v
        };
        let a = RationalMatrix::from_columns(n, &self.cols.iter().map(dense).collect::<Vec<_>>());
        match solve_exact(&a, &dense(&b)) {
            Ok(s) => Horizon::Feasible { u: s.particular, null: s.nullspace_basis },
            Err(_) => Horizon::Infeasible,
        }
    }
}

/// Reorder block-major coordinates (p_T first) into p_1..p_T order.
fn to_forward_order(u: &[Rational], t: usize, m: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); t * (m + 1)];
    for j in 0..t {
        let s = t - j;
        for k in 0..=m {
            out[(s - 1) * (m + 1) + k] = u[j * (m + 1) + k].clone();
        }
    }
    out
}

/// Adjust constants of p_1..p_{T−1} so that E[g_t + p_t(Y)] = 0 along the chain.
pub fn moment_correct(target: &TargetSpec, coeffs: &mut [Poly], variant: GammaVariant) -> Result<(), PolyError> {
    let h = target.h();
    let t_max = coeffs.len() - 1;
    let mut g = Poly::zero(h.nvars());
    for t in 1..t_max {
        g = gamma(target, &g.checked_add(&compose_target(&coeffs[t - 1], h))?, variant)?;
        let e = expect(&g) + expect(&compose_target(&coeffs[t], h));
        if !e.is_zero() {
            coeffs[t].add_term(MultiIndex::zero(1), -e);
        }
    }
    Ok(())
}

/// Center p₀ so that E[p₀(h(X))] = 0.
fn center_zero_order(target: &TargetSpec, p0: &Poly) -> Poly {
    let e = expect(&compose_target(p0, target.h()));
    let mut p = p0.clone();
    p.add_term(MultiIndex::zero(1), -e);
    p
}

fn zero_order_poly(target: &TargetSpec, zero: &ZeroOrder) -> Result<Poly, ControlError> {
    let p0 = match zero {
        ZeroOrder::Cy => Poly::var(1, 0),
        ZeroOrder::Monomial(k) => Poly::monomial(MultiIndex::univariate(*k), Rational::one()),
        ZeroOrder::Explicit(p) => p.clone(),
        ZeroOrder::Generic => unreachable!("generic mode has no fixed zero-order term"),
    };
    let p0 = center_zero_order(target, &p0);
    if p0.is_zero() {
        return Err(ControlError::ZeroOrderZero);
    }
    Ok(p0)
}

fn finish(
    target: &TargetSpec,
    t: usize,
    m: usize,
    p0: Poly,
    forward: Vec<Rational>,
    null: Vec<Vec<Rational>>,
    variant: GammaVariant,
) -> Result<ControlSolution, ControlError> {
    let mut coeffs = vec![p0.clone()];
    coeffs.extend(unstack(&forward, t, m));
    moment_correct(target, &mut coeffs, variant)?;
    let mut particular = Vec::with_capacity(t * (m + 1));
    for p in &coeffs[1..] {
        for k in 0..=m {
            particular.push(p.coeff_n(k as u32));
        }
    }
    let zero_order = coeffs[0].clone();
    let (normalized, scale) = content_normalize(&coeffs)?;
    Ok(ControlSolution { t, m, zero_order, particular, nullspace_basis: null, coeffs: normalized, scale })
}

/// Shortest null control with fixed zero-order term and coefficient degree ≤ m.
pub fn find_null_control(
    target: &TargetSpec,
    t_max: usize,
    m: usize,
    zero: &ZeroOrder,
    variant: GammaVariant,
) -> Result<ControlSolution, ControlError> {
    find_null_control_with(target, t_max, m, zero, SearchOptions::with_variant(variant))
}

/// `find_null_control` with a deadline or memory cap; `opts.all` is ignored.
pub fn find_null_control_with(
    target: &TargetSpec,
    t_max: usize,
    m: usize,
    zero: &ZeroOrder,
    opts: SearchOptions,
) -> Result<ControlSolution, ControlError> {
    let opts = SearchOptions { all: false, ..opts };
    search(target, t_max, m, zero, opts)?.into_iter().next().ok_or(ControlError::NotReachable { t_max, m })
}

/// Every feasible horizon up to t_max when `opts.all`, otherwise the first.
pub fn search(
    target: &TargetSpec,
    t_max: usize,
    m: usize,
    zero: &ZeroOrder,
    opts: SearchOptions,
) -> Result<Vec<ControlSolution>, ControlError> {
    if *zero == ZeroOrder::Generic {
        return search_generic(target, m, t_max, m, opts);
    }
    let p0 = zero_order_poly(target, zero)?;
    let mut v = compose_target(&p0, target.h());
    let mut engine = Engine::new(target, m, opts.variant);
    let mut out = Vec::new();
    for t in 1..=t_max {
        engine.push_block();
        opts.check(t, &engine)?;
        v = engine.gamma(&v);
        if let Horizon::Feasible { u, null } = engine.solve(&-&v) {
            let forward = to_forward_order(&u, t, m);
            let null = null.iter().map(|n| to_forward_order(n, t, m)).collect();
            out.push(finish(target, t, m, p0.clone(), forward, null, opts.variant)?);
            if !opts.all {
                break;
            }
        }
    }
    if out.is_empty() {
        return Err(ControlError::NotReachable { t_max, m });
    }
    Ok(out)
}

/// Stein operator whose zero-order term is the reducing combination of
/// y^k − E[h^k], k = 1..m0, found as a kernel vector of the stacked matrix.
pub fn combine_generic_zero_order(
    target: &TargetSpec,
    m0: usize,
    t_max: usize,
    m: usize,
) -> Result<ControlSolution, ControlError> {
    search_generic(target, m0, t_max, m, SearchOptions::default())?
        .into_iter()
        .next()
        .ok_or(ControlError::NotReachable { t_max, m })
}

fn search_generic(
    target: &TargetSpec,
    m0: usize,
    t_max: usize,
    m: usize,
    opts: SearchOptions,
) -> Result<Vec<ControlSolution>, ControlError> {
    let h = target.h();
    let mut zs: Vec<Poly> = Vec::with_capacity(m0);
    let mut pw = Poly::one(h.nvars());
    for _ in 0..m0 {
        pw = &pw * h;
        let mut z = pw.clone();
        z.add_term(MultiIndex::zero(h.nvars()), -expect(&pw));
        zs.push(z);
    }
    let mut engine = Engine::new(target, m, opts.variant);
    let mut out = Vec::new();
    for t in 1..=t_max {
        engine.push_block();
        opts.check(t, &engine)?;
        zs = zs.iter().map(|z| engine.gamma(z)).collect();
        if let Some((f, u)) = generic_kernel(&mut engine, &zs) {
            let nblock = t * (m + 1);
            let forward = to_forward_order(&u[..nblock], t, m);
            let mut p0 = Poly::zero(1);
            for k in 0..f {
                p0.add_term(MultiIndex::univariate(k as u32 + 1), u[nblock + k].clone());
            }
            p0.add_term(MultiIndex::univariate(f as u32 + 1), Rational::one());
            let p0 = center_zero_order(target, &p0);
            out.push(finish(target, t, m, p0, forward, Vec::new(), opts.variant)?);
            if !opts.all {
                break;
            }
        }
    }
    if out.is_empty() {
        return Err(ControlError::NotReachable { t_max, m });
    }
    Ok(out)
}

/// First dependent zero-order column f and the kernel vector with c_f = 1,
/// returned as block coordinates followed by c_1..c_{f}.
fn generic_kernel(engine: &mut Engine, zs: &[Poly]) -> Option<(usize, Vec<Rational>)> {
    let zcols: Vec<IntColumn> = zs.iter().map(|z| engine.rows.column(z)).collect();
    let rows = engine.rows.len();
    let nblock = engine.cols.len();
    let mut basis = engine.basis.clone();
    let mut free = None;
    for (k, c) in zcols.iter().enumerate() {
        if c.is_zero() || !basis.insert(nblock + k, c.reduce(basis.prime(), rows)) {
            free = Some(k);
            break;
        }
    }
    let certified = engine.certify_nonpivots();
    let Some(f) = free else {
        if certified {
            return None;
        }
        return generic_reference(engine, &zcols);
    };
    if !certified {
        return generic_reference(engine, &zcols);
    }
    let pc = basis.pivot_cols().to_vec();
    let pr = basis.pivot_rows();
    let lookup = |j: usize| if j < nblock { &engine.cols[j] } else { &zcols[j - nblock] };
    let cols: Vec<&IntColumn> = pc.iter().map(|&j| lookup(j)).collect();
    let Some(w) = certified_solve(&cols, &pr, &[&zcols[f]], rows).pop().flatten() else {
        return generic_reference(engine, &zcols);
    };
    let mut u = vec![Rational::zero(); nblock + f];
    for (&j, x) in pc.iter().zip(w) {
        if x.is_zero() {
            continue;
        }
        let scale = Rational::new(lookup(j).scale.clone(), zcols[f].scale.clone());
        u[j] = -(x * scale);
    }
    Some((f, u))
}

/// Reference path for the generic kernel through exact elimination.
fn generic_reference(engine: &Engine, zcols: &[IntColumn]) -> Option<(usize, Vec<Rational>)> {
    let n = engine.rows.len();
    let dense = |c: &IntColumn| {
        let mut v = vec![Rational::zero(); n];
        for (r, x) in &c.entries {
            v[*r] = Rational::new(x.clone(), c.scale.clone());
        }
        v
    };
    let nblock = engine.cols.len();
    let mut all: Vec<Vec<Rational>> = engine.cols.iter().map(dense).collect();
    all.extend(zcols.iter().map(dense));
    let a = RationalMatrix::from_columns(n, &all);
    let s = solve_exact(&a, &vec![Rational::zero(); n]).ok()?;
    let f = (nblock..all.len()).find(|c| !s.pivots.contains(c))?;
    let idx = s.nullspace_basis.iter().position(|v| !v[f].is_zero() && v[f + 1..].iter().all(Zero::is_zero))?;
    let v = &s.nullspace_basis[idx];
    Some((f - nblock, v[..f].to_vec()))
}

/// Result of one table cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub t: usize,
    pub m: usize,
    pub solution: ControlSolution,
}

/// Smallest T over degrees ≤ m_cap, then the smallest m attaining it.
pub fn min_order_search(
    target: &TargetSpec,
    zero: &ZeroOrder,
    m_cap: usize,
    t_cap: usize,
    variant: GammaVariant,
) -> Result<Cell, ControlError> {
    min_order_search_with(target, zero, m_cap, t_cap, SearchOptions::with_variant(variant))
}

pub fn min_order_search_with(
    target: &TargetSpec,
    zero: &ZeroOrder,
    m_cap: usize,
    t_cap: usize,
    opts: SearchOptions,
) -> Result<Cell, ControlError> {
    let at_cap = find_null_control_with(target, t_cap, m_cap, zero, opts)?;
    let t_star = at_cap.t;
    let (mut lo, mut hi) = (1usize, m_cap);
    let mut best = at_cap;
    while lo < hi {
        let mid = (lo + hi) / 2;
        match find_null_control_with(target, t_star, mid, zero, opts) {
            Ok(s) => {
                hi = mid;
                best = s;
            }
            Err(ControlError::NotReachable { .. }) => lo = mid + 1,
            Err(e) => return Err(e),
        }
    }
    if best.m != lo {
        best = find_null_control_with(target, t_star, lo, zero, opts)?;
    }
    Ok(Cell { t: best.t, m: lo, solution: best })
}

/// Smallest m admitting an operator with T ≤ t_cap, and its first horizon.
pub fn min_degree_search(
    target: &TargetSpec,
    zero: &ZeroOrder,
    t_cap: usize,
    m_max: usize,
    variant: GammaVariant,
) -> Result<Cell, ControlError> {
    min_degree_search_with(target, zero, t_cap, m_max, SearchOptions::with_variant(variant))
}

pub fn min_degree_search_with(
    target: &TargetSpec,
    zero: &ZeroOrder,
    t_cap: usize,
    m_max: usize,
    opts: SearchOptions,
) -> Result<Cell, ControlError> {
    for m in 1..=m_max {
        match find_null_control_with(target, t_cap, m, zero, opts) {
            Ok(s) => return Ok(Cell { t: s.t, m, solution: s }),
            Err(ControlError::NotReachable { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(ControlError::NotReachable { t_max: t_cap, m: m_max })
}
