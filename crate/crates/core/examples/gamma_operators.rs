//! Divergence, pseudo-inverses and the Gamma operator of a target.

use stein_control::hermite::{cumulant, expect};
use stein_control::malliavin::{
    delta, gamma, gamma_malliavin_iter, gamma_power, modified_pseudo_inverse, pseudo_inverse, GammaVariant, TargetSpec,
};
use stein_control::poly::{rat, Poly};

fn main() {
    let p = Poly::parse_x("x1^3*x2^2").unwrap();
    let v = pseudo_inverse(&p);
    let w = modified_pseudo_inverse(&p);
    println!("pseudo-inverse of {p}: ({}, {})", v.components[0], v.components[1]);
    println!("modified:               ({}, {})", w.components[0], w.components[1]);
    println!("delta of either: {} and {}", delta(&v).unwrap(), delta(&w).unwrap());

    let t = TargetSpec::parse("x^3-3*x").unwrap();
    println!("Gamma(x) = {}", gamma(&t, &Poly::parse_x("x").unwrap(), GammaVariant::Standard).unwrap());
    let mut fact = 1i64;
    for r in 1..=4 {
        fact *= r;
        let g = gamma_power(&t, t.h(), r as usize, GammaVariant::Standard).unwrap();
        println!(
            "r = {r}: {r}! E[Gamma^r(Y)] = {}, with the Malliavin iterate {}, kappa_{} = {}",
            expect(&g) * rat(fact),
            expect(&gamma_malliavin_iter(&t, r as usize)) * rat(fact),
            r + 1,
            cumulant(t.h(), r as usize + 1),
        );
    }
}
