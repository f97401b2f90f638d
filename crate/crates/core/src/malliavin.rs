//! Divergence, pseudo-inverses, the Ornstein–Uhlenbeck inverse and the Gamma operators.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hermite::{expect, from_hermite, gaussian_moment, to_hermite, HermiteExpansion};
use crate::poly::{rat, Degree, MultiIndex, Poly, PolyError, PolyVector, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MalliavinError {
    #[error("degenerate target: deg h = {0}")]
    Degenerate(Degree),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Which pseudo-inverse feeds the Gamma operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GammaVariant {
    #[default]
    Standard,
    Modified,
}

/// A centered Gaussian polynomial target Y = h(X).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec {
    h: Poly,
    centered_shift: Rational,
    grad: PolyVector,
}

impl TargetSpec {
    /// Centers `h` by subtracting E[h(X)] and caches the gradient.
    pub fn new(h: Poly) -> Result<Self, MalliavinError> {
        let deg = h.degree();
        if deg <= Degree::Finite(0) {
            return Err(MalliavinError::Degenerate(deg));
        }
        let shift = expect(&h);
        let mut hc = h;
        hc.add_term(MultiIndex::zero(hc.nvars()), -shift.clone());
        let grad = PolyVector {
            components: (0..hc.nvars()).map(|k| hc.partial(k)).collect::<Result<_, _>>()?,
        };
        Ok(TargetSpec { h: hc, centered_shift: shift, grad })
    }

    pub fn parse(s: &str) -> Result<Self, MalliavinError> {
        TargetSpec::new(Poly::parse_x(s)?)
    }

    /// The centered polynomial h − E[h].
    pub fn h(&self) -> &Poly {
        &self.h
    }

    pub fn d(&self) -> usize {
        self.h.nvars()
    }

    pub fn centered_shift(&self) -> &Rational {
        &self.centered_shift
    }

    pub fn grad(&self) -> &PolyVector {
        &self.grad
    }

    pub fn degree(&self) -> u32 {
        self.h.degree().finite().expect("target is nonconstant")
    }
}

/// δf = Σ_k (x_k f_k − ∂_k f_k).
pub fn delta(f: &PolyVector) -> Result<Poly, PolyError> {
    let nvars = f.components.first().map_or(1, Poly::nvars);
    let mut r = Poly::zero(nvars);
    for (k, fk) in f.components.iter().enumerate() {
        r = r.checked_add(&fk.mul_var(k))?;
        r = r.checked_sub(&fk.partial(k)?)?;
    }
    Ok(r)
}

/// Univariate δ⁻¹ on ascending dense coefficients.
///
/// Solves x·g − g′ = f − E[f] from the top degree down:
/// g_{k−1} = f_k + (k+1)·g_{k+1}.
pub fn pseudo_inverse_dense(f: &[Rational]) -> Vec<Rational> {
    let n = f.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut g = vec![Rational::zero(); n - 1];
    for k in (1..n).rev() {
        let mut v = f[k].clone();
        if k + 1 < n - 1 {
            v += &g[k + 1] * rat((k + 1) as i64);
        }
        g[k - 1] = v;
    }
    while g.last().is_some_and(|c| c.is_zero()) {
        g.pop();
    }
    g
}

/// δ⁻¹x^n by the recursion δ⁻¹x^n = x^{n−1} + (n−1)·δ⁻¹x^{n−2}, δ⁻¹1 = 0.
pub fn pseudo_inverse_monomial(n: u32) -> Poly {
    let mut prev2 = Poly::zero(1);
    let mut prev1 = Poly::one(1);
    match n {
        0 => return prev2,
        1 => return prev1,
        _ => {}
    }
    for k in 2..=n {
        let mut next = prev2.scale(&rat((k - 1) as i64));
        next.add_term(MultiIndex::univariate(k - 1), Rational::one());
        prev2 = prev1;
        prev1 = next;
    }
    prev1
}

fn pseudo_inverse_univariate(p: &Poly) -> Poly {
    Poly::from_coeffs(&pseudo_inverse_dense(&p.dense_coeffs()))
}

/// δ⁻¹ = −D L⁻¹: componentwise H_α ↦ (α_k/|α|)·H_{α−e_k}.
pub fn pseudo_inverse(p: &Poly) -> PolyVector {
    let d = p.nvars();
    if d == 1 {
        return PolyVector { components: vec![pseudo_inverse_univariate(p)] };
    }
    let e = to_hermite(p);
    let mut comps = vec![HermiteExpansion::zero(d); d];
    for (alpha, c) in e.terms() {
        let total = alpha.degree();
        if total == 0 {
            continue;
        }
        for (k, comp) in comps.iter_mut().enumerate() {
            if let Some(b) = alpha.minus_unit(k) {
                comp.add_term(b, c * Rational::new(alpha.get(k).into(), total.into()));
            }
        }
    }
    PolyVector { components: comps.iter().map(from_hermite).collect() }
}

/// δ̃⁻¹ by inclusion–exclusion over nonempty coordinate subsets of each monomial.
pub fn modified_pseudo_inverse(p: &Poly) -> PolyVector {
    let d = p.nvars();
    if d == 1 {
        return pseudo_inverse(p);
    }
    let mut out = PolyVector::zero(d, d);
    for (alpha, c) in p.terms() {
        let support: Vec<usize> = (0..d).filter(|&k| alpha.get(k) > 0).collect();
        let s = support.len();
        for mask in 1u32..(1u32 << s) {
            let in_a: Vec<usize> = (0..s).filter(|i| mask & (1 << i) != 0).map(|i| support[i]).collect();
            let mut weight = c.clone();
            for (i, &k) in support.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    weight *= gaussian_moment(alpha.get(k) as usize);
                }
            }
            if weight.is_zero() {
                continue;
            }
            let deg_a: u32 = in_a.iter().map(|&k| alpha.get(k)).sum();
            for &k in &in_a {
                let mut term = pseudo_inverse_monomial(alpha.get(k)).embed(d, k);
                for &j in &in_a {
                    if j == k {
                        continue;
                    }
                    let mut centered = Poly::monomial(MultiIndex::zero(d).with(j, alpha.get(j)), Rational::one());
                    centered.add_term(MultiIndex::zero(d), -gaussian_moment(alpha.get(j) as usize));
                    term = &term * &centered;
                }
                let coef = &weight * Rational::new(alpha.get(k).into(), deg_a.into());
                out.components[k].add_scaled(&term, &coef);
            }
        }
    }
    out
}

/// L⁻¹H_α = −H_α/|α|, zero on constants.
pub fn ou_inverse(p: &Poly) -> Poly {
    let e = to_hermite(p).map_coeffs(|a, c| {
        let n = a.degree();
        if n == 0 {
            Rational::zero()
        } else {
            -c / Rational::from_integer(n.into())
        }
    });
    from_hermite(&e)
}

/// Γ(f) = ⟨∇h, δ⁻¹f⟩ with the chosen pseudo-inverse.
pub fn gamma(target: &TargetSpec, f: &Poly, variant: GammaVariant) -> Result<Poly, PolyError> {
    if f.nvars() != target.d() {
        return Err(PolyError::VarMismatch { left: target.d(), right: f.nvars() });
    }
    let v = match variant {
        GammaVariant::Standard => pseudo_inverse(f),
        GammaVariant::Modified => modified_pseudo_inverse(f),
    };
    Ok(target.grad().dot(&v))
}

/// Γ applied t times to f.
pub fn gamma_power(target: &TargetSpec, f: &Poly, t: usize, variant: GammaVariant) -> Result<Poly, PolyError> {
    let mut g = f.clone();
    for _ in 0..t {
        g = gamma(target, &g, variant)?;
    }
    Ok(g)
}

/// Γ_0 = h, Γ_r = Σ_k ∂_k h · ∂_k(−L⁻¹Γ_{r−1}).
pub fn gamma_malliavin_iter(target: &TargetSpec, r: usize) -> Poly {
    let mut g = target.h().clone();
    for _ in 0..r {
        let w = -ou_inverse(&g);
        let mut next = Poly::zero(target.d());
        for (k, dh) in target.grad().components.iter().enumerate() {
            next = &next + &(dh * &w.partial(k).expect("index in range"));
        }
        g = next;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{cumulant, hermite};
    use crate::poly::ratio;

    fn x(s: &str) -> Poly {
        Poly::parse_x(s).unwrap()
    }

    fn h_embed(n: usize, d: usize, k: usize) -> Poly {
        hermite(n).embed(d, k)
    }

    #[test]
    fn delta_examples() {
        let v = |p: Poly| PolyVector { components: vec![p] };
        assert_eq!(delta(&v(x("x^4"))).unwrap(), x("x^5-4*x^3"));
        assert_eq!(delta(&v(x("1"))).unwrap(), x("x"));
        assert_eq!(delta(&v(hermite(4))).unwrap(), hermite(5));
    }

    #[test]
    fn univariate_pseudo_inverse() {
        assert_eq!(pseudo_inverse(&x("x^2")).components[0], x("x"));
        assert_eq!(pseudo_inverse(&x("x^3")).components[0], x("x^2+2"));
        assert!(pseudo_inverse(&x("7")).is_zero());
        for n in 0..=14 {
            let m = x("x").pow(n);
            assert_eq!(pseudo_inverse(&m).components[0], pseudo_inverse_monomial(n), "n = {n}");
        }
        for n in 0..=12 {
            let m = x("x").pow(n);
            let back = pseudo_inverse(&delta(&PolyVector { components: vec![m.clone()] }).unwrap());
            assert_eq!(back.components[0], m);
        }
    }

    #[test]
    fn multivariate_pseudo_inverse_example() {
        let p = x("x1^3*x2^2");
        let v = pseudo_inverse(&p);
        let h2h2 = &h_embed(2, 2, 0) * &h_embed(2, 2, 1);
        let mut c0 = h2h2.scale(&ratio(3, 5));
        c0 = &c0 + &h_embed(2, 2, 0);
        c0 = &c0 + &h_embed(2, 2, 1);
        c0.add_term(MultiIndex::zero(2), rat(3));
        let h3h1 = &h_embed(3, 2, 0) * &h_embed(1, 2, 1);
        let h1h1 = &h_embed(1, 2, 0) * &h_embed(1, 2, 1);
        let c1 = &h3h1.scale(&ratio(2, 5)) + &h1h1.scale(&rat(2));
        assert_eq!(v.components, vec![c0, c1]);
        assert_eq!(delta(&v).unwrap(), &p - &Poly::constant(2, expect(&p)));
    }

    #[test]
    fn modified_pseudo_inverse_contract() {
        let p = x("x1^3*x2^2");
        let v = modified_pseudo_inverse(&p);
        assert_eq!(delta(&v).unwrap(), &p - &Poly::constant(2, expect(&p)));
        let h3h1 = &h_embed(3, 2, 0) * &h_embed(1, 2, 1);
        let h1h1 = &h_embed(1, 2, 0) * &h_embed(1, 2, 1);
        let c1 = &h3h1.scale(&ratio(2, 5)) + &h1h1.scale(&ratio(6, 5));
        assert_eq!(v.components[1], c1);
        assert!(modified_pseudo_inverse(&Poly::constant(3, rat(4))).is_zero());
    }

    #[test]
    fn ou_inverse_examples() {
        assert_eq!(ou_inverse(&hermite(4)), hermite(4).scale(&ratio(-1, 4)));
        assert!(ou_inverse(&x("1")).is_zero());
        assert_eq!(ou_inverse(&x("x^2")), hermite(2).scale(&ratio(-1, 2)));
    }

    #[test]
    fn gamma_examples() {
        let t2 = TargetSpec::new(hermite(2)).unwrap();
        assert_eq!(gamma(&t2, &hermite(2), GammaVariant::Standard).unwrap(), x("2*x^2"));
        let t3 = TargetSpec::new(hermite(3)).unwrap();
        assert_eq!(gamma(&t3, &hermite(3), GammaVariant::Standard).unwrap(), x("3*(x^2-1)^2"));
        assert!(gamma(&t3, &x("1"), GammaVariant::Standard).unwrap().is_zero());
        assert_eq!(gamma(&t3, &x("x"), GammaVariant::Standard).unwrap(), x("3*x^2-3"));
    }

    #[test]
    fn malliavin_gamma_iterates() {
        let t3 = TargetSpec::new(hermite(3)).unwrap();
        assert_eq!(gamma_malliavin_iter(&t3, 1), x("3*(x^2-1)^2"));
        assert_eq!(gamma_malliavin_iter(&t3, 2), x("9*x^5-9*x"));
        let t2 = TargetSpec::new(hermite(2)).unwrap();
        assert_eq!(gamma_malliavin_iter(&t2, 2), x("4*x^2"));
    }

    #[test]
    fn cumulant_bridge() {
        for p in [2usize, 3] {
            let t = TargetSpec::new(hermite(p)).unwrap();
            let mut fact = rat(1);
            for r in 1..=4usize {
                fact *= rat(r as i64);
                let k = cumulant(t.h(), r + 1);
                assert_eq!(&fact * expect(&gamma_malliavin_iter(&t, r)), k, "Malliavin Γ_{r}, H{p}");
                let g = gamma_power(&t, t.h(), r, GammaVariant::Standard).unwrap();
                assert_eq!(&fact * expect(&g), k, "Γ^{r}, H{p}");
            }
        }
    }

    #[test]
    fn centering() {
        let t = TargetSpec::parse("x1^2*x2^2").unwrap();
        assert_eq!(t.centered_shift(), &rat(1));
        assert_eq!(expect(t.h()), rat(0));
        assert!(TargetSpec::parse("5").is_err());
    }
}
