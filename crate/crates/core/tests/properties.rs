use proptest::prelude::*;

use stein_control::chain::{forward_replay, Provenance, SteinOperator};
use stein_control::control::{find_null_control, ZeroOrder};
use stein_control::document::OperatorDocument;
use stein_control::hermite::{expect, from_hermite, to_hermite};
use stein_control::malliavin::{delta, gamma, modified_pseudo_inverse, pseudo_inverse, GammaVariant, TargetSpec};
use stein_control::poly::{compose_target, content_normalize, ratio, MultiIndex, Poly, Rational};

fn rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=4).prop_map(|(n, d)| ratio(n, d))
}

/// Sparse polynomial in d variables, total degree ≤ max_deg.
fn poly(d: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((prop::collection::vec(0..=max_deg, d), rational()), 1..=max_terms).prop_map(move |terms| {
        let mut p = Poly::zero(d);
        for (mut e, c) in terms {
            while e.iter().sum::<u32>() > max_deg {
                let k = e.iter().position(|&x| x > 0).expect("positive degree");
                e[k] -= 1;
            }
            p.add_term(MultiIndex::new(e), c);
        }
        p
    })
}

fn poly_any_d(max_deg: u32, max_terms: usize) -> impl Strategy<Value = Poly> {
    (1usize..=3).prop_flat_map(move |d| poly(d, max_deg, max_terms))
}

fn centered(p: &Poly) -> Poly {
    p - &Poly::constant(p.nvars(), expect(p))
}

/// Target, f and g for the integration-by-parts identity.
fn ibp_triple() -> impl Strategy<Value = (Poly, Poly, Poly)> {
    (1usize..=2).prop_flat_map(|d| {
        (
            poly(d, 3, 4).prop_filter("nonconstant", |h| h.degree().finite().is_some_and(|n| n > 0)),
            poly(d, 4, 5),
            poly(1, 3, 4),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pseudo_inverse_contract(p in poly_any_d(8, 6)) {
        prop_assert_eq!(delta(&pseudo_inverse(&p)).unwrap(), centered(&p));
    }

    #[test]
    fn modified_pseudo_inverse_contract(p in poly_any_d(8, 6)) {
        prop_assert_eq!(delta(&modified_pseudo_inverse(&p)).unwrap(), centered(&p));
    }

    #[test]
    fn hermite_round_trip(p in poly_any_d(8, 6)) {
        prop_assert_eq!(from_hermite(&to_hermite(&p)), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// E[g(Y) f(X)] = E[g(Y)]·E[f(X)] + E[g'(Y)·Γ(f)] for both pseudo-inverses.
    #[test]
    fn integration_by_parts((h, f, g) in ibp_triple()) {
        let t = TargetSpec::new(h).unwrap();
        let gy = compose_target(&g, t.h());
        let dgy = compose_target(&g.derivative(), t.h());
        let lhs = expect(&(&gy * &f));
        for variant in [GammaVariant::Standard, GammaVariant::Modified] {
            let rhs = expect(&gy) * expect(&f) + expect(&(&dgy * &gamma(&t, &f, variant).unwrap()));
            prop_assert_eq!(&lhs, &rhs);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn normalization_is_scale_invariant(
        ps in prop::collection::vec(poly(1, 4, 3), 1..=4),
        c in rational().prop_filter("nonzero", |c| *c != ratio(0, 1)),
    ) {
        prop_assume!(ps.iter().any(|p| !p.is_zero()));
        let (a, _) = content_normalize(&ps).unwrap();
        let scaled: Vec<Poly> = ps.iter().map(|p| p.scale(&c)).collect();
        let (b, _) = content_normalize(&scaled).unwrap();
        prop_assert_eq!(&a, &b);
        let (again, s) = content_normalize(&a).unwrap();
        prop_assert_eq!(&again, &a);
        prop_assert_eq!(s, ratio(1, 1));
        prop_assert!(a.iter().all(Poly::is_integral));
    }

    #[test]
    fn json_round_trip(
        h in poly(1, 4, 3).prop_filter("nonconstant", |h| h.degree().finite().is_some_and(|n| n > 0)),
        coeffs in prop::collection::vec(poly(1, 3, 3), 1..=4),
    ) {
        prop_assume!(!coeffs.last().unwrap().is_zero());
        let op = SteinOperator::new(TargetSpec::new(h).unwrap(), coeffs, Provenance::User);
        let doc = OperatorDocument::from_operator(&op, "cy", GammaVariant::Standard);
        let text = doc.to_json();
        let back = OperatorDocument::from_json(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(back.to_operator().unwrap(), op);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Whatever the solver returns for a small univariate target replays to zero.
    #[test]
    fn solver_output_is_algebraic(
        h in poly(1, 3, 3).prop_filter("degree ≥ 2", |h| h.degree().finite().is_some_and(|n| n >= 2)),
        m in 1usize..=3,
    ) {
        let t = TargetSpec::new(h).unwrap();
        if let Ok(s) = find_null_control(&t, 6, m, &ZeroOrder::Cy, GammaVariant::Standard) {
            let trace = forward_replay(&s.operator(&t), GammaVariant::Standard).unwrap();
            prop_assert!(trace.is_algebraic());
            prop_assert!(s.t <= 6);
            prop_assert!(s.coeffs.iter().skip(1).all(|p| p.degree().finite().unwrap_or(0) as usize <= m));
        }
    }
}
