//! Finite-dimensional matrix models of Γ and Λ = ΓΘ.

use std::collections::HashMap;

use num_traits::Zero;

use crate::malliavin::{gamma, GammaVariant, TargetSpec};
use crate::poly::{MultiIndex, Poly, Rational};

use super::matrix::RationalMatrix;
use super::ControlError;

/// Degree bound holding every state up to stage t: deg(h)·m + (deg(h)−2)·t
/// for one variable, deg(h)·(m+t) otherwise.
pub fn state_bound(h: &TargetSpec, m: usize, t: usize) -> usize {
    let dh = h.degree() as i64;
    let (m, t) = (m as i64, t as i64);
    let n = if h.d() == 1 { dh * m + (dh - 2) * t } else { dh * (m + t) };
    n.max(0) as usize
}

/// Monomials of total degree ≤ n in d variables, graded, then lexicographic
/// with x1 dominant.
pub fn monomial_basis(d: usize, n: usize) -> Vec<MultiIndex> {
    fn fill(d: usize, k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if k == d - 1 {
            cur[k] = left;
            out.push(MultiIndex::new(cur.clone()));
            return;
        }
        for e in (0..=left).rev() {
            cur[k] = e;
            fill(d, k + 1, left - e, cur, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    for deg in 0..=n as u32 {
        fill(d, 0, deg, &mut cur, &mut out);
    }
    out
}

/// Coefficients of a polynomial over the basis of K_N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVector {
    pub nvars: usize,
    pub n: usize,
    pub coeffs: Vec<Rational>,
}

impl StateVector {
    pub fn from_poly(p: &Poly, n: usize) -> Result<Self, ControlError> {
        let basis = monomial_basis(p.nvars(), n);
        let index: HashMap<&MultiIndex, usize> = basis.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut coeffs = vec![Rational::zero(); basis.len()];
        for (a, c) in p.terms() {
            match index.get(a) {
                Some(&i) => coeffs[i] = c.clone(),
                None => return Err(ControlError::DimensionAudit { degree: a.degree(), bound: n }),
            }
        }
        Ok(StateVector { nvars: p.nvars(), n, coeffs })
    }

    pub fn to_poly(&self) -> Poly {
        Poly::from_terms(self.nvars, monomial_basis(self.nvars, self.n).into_iter().zip(self.coeffs.iter().cloned()))
    }
}

fn image_bound(h: &TargetSpec, n: usize) -> Option<usize> {
    let v = n as i64 + h.degree() as i64 - 2;
    (v >= 0).then_some(v as usize)
}

fn columns_to_matrix(d: usize, rows_n: Option<usize>, cols: &[Poly]) -> Result<RationalMatrix, ControlError> {
    let Some(rn) = rows_n else {
        if let Some(c) = cols.iter().find(|c| !c.is_zero()) {
            let degree = c.degree().finite().unwrap_or(0);
            return Err(ControlError::DimensionAudit { degree, bound: 0 });
        }
        return Ok(RationalMatrix::zeros(0, cols.len()));
    };
    let vecs: Vec<Vec<Rational>> =
        cols.iter().map(|c| StateVector::from_poly(c, rn).map(|s| s.coeffs)).collect::<Result<_, _>>()?;
    Ok(RationalMatrix::from_columns(monomial_basis(d, rn).len(), &vecs))
}

/// Column j holds Γ of the j-th basis monomial of K_N, over the basis of
/// K_{N+deg h−2}.
pub fn gamma_matrix(h: &TargetSpec, n: usize, variant: GammaVariant) -> Result<RationalMatrix, ControlError> {
    let cols: Vec<Poly> = monomial_basis(h.d(), n)
        .into_iter()
        .map(|a| gamma(h, &Poly::monomial(a, Rational::from_integer(1.into())), variant))
        .collect::<Result<_, _>>()?;
    columns_to_matrix(h.d(), image_bound(h, n), &cols)
}

/// Column k (k = 0..m) holds Γ(h^k) over the basis of K_N.
pub fn lambda_matrix(h: &TargetSpec, m: usize, n: usize, variant: GammaVariant) -> Result<RationalMatrix, ControlError> {
    let mut cols = Vec::with_capacity(m + 1);
    let mut pw = Poly::one(h.d());
    for k in 0..=m {
        if k > 0 {
            pw = &pw * h.h();
        }
        cols.push(gamma(h, &pw, variant)?);
    }
    columns_to_matrix(h.d(), Some(n), &cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite;
    use crate::poly::rat;

    #[test]
    fn bounds() {
        let h4 = TargetSpec::new(hermite(4)).unwrap();
        assert_eq!(state_bound(&h4, 2, 3), 14);
        let h3 = TargetSpec::new(hermite(3)).unwrap();
        assert_eq!(state_bound(&h3, 4, 4), 16);
        let two = TargetSpec::parse("x1*x2").unwrap();
        assert_eq!(state_bound(&two, 1, 2), 6);
    }

    #[test]
    fn basis_order() {
        let b = monomial_basis(2, 2);
        let v: Vec<Vec<u32>> = b.iter().map(|a| a.exps().to_vec()).collect();
        assert_eq!(v, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn gamma_matrix_h2() {
        let h2 = TargetSpec::new(hermite(2)).unwrap();
        let g = gamma_matrix(&h2, 2, GammaVariant::Standard).unwrap();
        assert_eq!(g.rows(), 3);
        assert_eq!(g.column(0), vec![rat(0), rat(0), rat(0)]);
        // Γ(x) = 2x·δ⁻¹x = 2x
        assert_eq!(g.column(1), vec![rat(0), rat(2), rat(0)]);
        assert_eq!(g.column(2), vec![rat(0), rat(0), rat(2)]);
        let h3 = TargetSpec::new(hermite(3)).unwrap();
        let g = gamma_matrix(&h3, 1, GammaVariant::Standard).unwrap();
        assert_eq!(g.column(1), vec![rat(-3), rat(0), rat(3)]);
    }

    #[test]
    fn lambda_matrix_columns() {
        let h2 = TargetSpec::new(hermite(2)).unwrap();
        let l = lambda_matrix(&h2, 1, 2, GammaVariant::Standard).unwrap();
        assert_eq!(l.column(0), vec![rat(0), rat(0), rat(0)]);
        assert_eq!(l.column(1), vec![rat(0), rat(0), rat(2)]);
        let h3 = TargetSpec::new(hermite(3)).unwrap();
        let l = lambda_matrix(&h3, 1, 4, GammaVariant::Standard).unwrap();
        assert_eq!(l.column(1), vec![rat(3), rat(0), rat(-6), rat(0), rat(3)]);
        assert!(lambda_matrix(&h3, 2, 4, GammaVariant::Standard).is_err());
    }

    #[test]
    fn matrix_matches_operator() {
        let h = TargetSpec::new(hermite(3)).unwrap();
        let n = 6;
        let g = gamma_matrix(&h, n, GammaVariant::Standard).unwrap();
        let p = Poly::parse_x("x^6-2/3*x^5+x^2-7").unwrap();
        let s = StateVector::from_poly(&p, n).unwrap();
        let image = StateVector { nvars: 1, n: n + 1, coeffs: g.mul_vec(&s.coeffs) };
        assert_eq!(image.to_poly(), gamma(&h, &p, GammaVariant::Standard).unwrap());
    }
}
