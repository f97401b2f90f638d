use stein_control::chain::forward_replay;
use stein_control::control::matrix::{solve_exact, RationalMatrix};
use stein_control::control::{
    find_null_control, search, state_bound, ControlError, SearchOptions, StateVector, ZeroOrder,
};
use stein_control::fixtures::by_name;
use stein_control::hermite::hermite;
use stein_control::malliavin::{gamma_power, GammaVariant, TargetSpec};
use stein_control::poly::{compose_target, Poly, Rational};

const STD: GammaVariant = GammaVariant::Standard;

fn herm(p: usize) -> TargetSpec {
    TargetSpec::new(hermite(p)).unwrap()
}

/// Dense system for horizon t: column (s, k) is Γ^{t−s}(h^k), s = 1..t, and the
/// right-hand side is −Γ^t(p₀(h)).
fn dense_system(target: &TargetSpec, p0: &Poly, t: usize, m: usize) -> (RationalMatrix, Vec<Rational>) {
    let n = state_bound(target, m, t).max(target.degree() as usize * m.max(1));
    let h = target.h();
    let mut cols = Vec::new();
    for s in 1..=t {
        for k in 0..=m {
            let c = gamma_power(target, &h.pow(k as u32), t - s, STD).unwrap();
            cols.push(StateVector::from_poly(&c, n).unwrap().coeffs);
        }
    }
    let rows = cols[0].len();
    let rhs = -gamma_power(target, &compose_target(p0, h), t, STD).unwrap();
    (RationalMatrix::from_columns(rows, &cols), StateVector::from_poly(&rhs, n).unwrap().coeffs)
}

#[test]
fn feasibility_matches_reference_elimination() {
    for (p, m, t_max) in [(2, 1, 3), (3, 2, 5), (3, 3, 4), (4, 2, 4), (4, 1, 3), (5, 4, 6), (6, 3, 6)] {
        let target = herm(p);
        let p0 = Poly::parse_y("y").unwrap();
        let first = (1..=t_max).find(|&t| {
            let (a, b) = dense_system(&target, &p0, t, m);
            solve_exact(&a, &b).is_ok()
        });
        match find_null_control(&target, t_max, m, &ZeroOrder::Cy, STD) {
            Ok(s) => {
                assert_eq!(Some(s.t), first, "H{p}, m = {m}");
                let (a, b) = dense_system(&target, &s.zero_order, s.t, m);
                assert_eq!(a.mul_vec(&s.particular), b, "H{p}, m = {m}");
            }
            Err(ControlError::NotReachable { .. }) => assert_eq!(first, None, "H{p}, m = {m}"),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn order_is_monotone_in_degree_and_horizon() {
    for p in 3..=5 {
        let target = herm(p);
        let mut last = usize::MAX;
        for m in 1..=p + 1 {
            if let Ok(s) = find_null_control(&target, 16, m, &ZeroOrder::Cy, STD) {
                assert!(s.t <= last, "H{p}: T grew from {last} to {} at m = {m}", s.t);
                last = s.t;
                let wider = find_null_control(&target, 20, m, &ZeroOrder::Cy, STD).unwrap();
                assert_eq!(wider.coeffs, s.coeffs);
            }
        }
        assert!(last < usize::MAX, "H{p} never reached");
    }
}

#[test]
fn printed_operator_lies_in_affine_solution_set() {
    for name in ["h3-cy-order4", "h4-cy", "h5-cy-degree4", "h6-cy-order4"] {
        let fx = by_name(name).unwrap();
        let target = fx.target_spec();
        let sol = find_null_control(&target, fx.order(), fx.degree(), &ZeroOrder::Cy, STD).unwrap();
        assert_eq!(sol.t, fx.order(), "{name}");
        // scale the printed operator so that p₀ = y, then stack p_1..p_T
        let printed = fx.coefficient_polys();
        let lead = printed[0].coeff_n(1);
        let mut stacked = Vec::new();
        for p in &printed[1..] {
            for k in 0..=sol.m {
                stacked.push(p.coeff_n(k as u32) / &lead);
            }
        }
        let diff: Vec<Rational> = stacked.iter().zip(&sol.particular).map(|(a, b)| a - b).collect();
        let basis = RationalMatrix::from_columns(diff.len(), &sol.nullspace_basis);
        assert!(solve_exact(&basis, &diff).is_ok(), "{name}: printed operator outside the solution set");
    }
}

#[test]
fn all_horizons_are_algebraic() {
    let target = herm(4);
    let opts = SearchOptions { all: true, ..SearchOptions::default() };
    let sols = search(&target, 6, 2, &ZeroOrder::Cy, opts).unwrap();
    let ts: Vec<usize> = sols.iter().map(|s| s.t).collect();
    assert_eq!(ts[0], 3);
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
    for s in &sols {
        assert!(forward_replay(&s.operator(&target), STD).unwrap().is_algebraic(), "T = {}", s.t);
    }
}

#[test]
fn infeasibility_probes() {
    let r = find_null_control(&herm(4), 2, 60, &ZeroOrder::Cy, STD);
    assert_eq!(r.unwrap_err(), ControlError::NotReachable { t_max: 2, m: 60 });
    let r = find_null_control(&herm(5), 5, 80, &ZeroOrder::Cy, STD);
    assert_eq!(r.unwrap_err(), ControlError::NotReachable { t_max: 5, m: 80 });
}

#[test]
fn zero_order_variants() {
    let target = herm(4);
    let explicit = ZeroOrder::Explicit(Poly::parse_y("3*y").unwrap());
    let a = find_null_control(&target, 5, 2, &explicit, STD).unwrap();
    let b = find_null_control(&target, 5, 2, &ZeroOrder::Cy, STD).unwrap();
    assert_eq!(a.coeffs, b.coeffs);
    let zero = ZeroOrder::Explicit(Poly::parse_y("0").unwrap());
    assert_eq!(find_null_control(&target, 5, 2, &zero, STD).unwrap_err(), ControlError::ZeroOrderZero);
    let sq = find_null_control(&target, 8, 3, &ZeroOrder::Monomial(2), STD).unwrap();
    assert!(forward_replay(&sq.operator(&target), STD).unwrap().is_algebraic());
}
