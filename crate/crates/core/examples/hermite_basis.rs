//! Hermite polynomials, basis conversion and Gaussian moments.

use stein_control::hermite::{cumulant, expect, from_hermite, gaussian_moment, hermite, to_hermite};
use stein_control::poly::Poly;

fn main() {
    for n in 0..=6 {
        println!("H{n} = {}", hermite(n));
    }
    let p = Poly::parse_x("x^5+2*x^2").unwrap();
    let e = to_hermite(&p);
    let parts: Vec<String> = e.terms().map(|(a, c)| format!("{c}*H{}", a.get(0))).collect();
    println!("{p} = {}", parts.join(" + "));
    assert_eq!(from_hermite(&e), p);
    println!("E[X^8] = {}, E[H3(X)^2] = {}", gaussian_moment(8), expect(&(&hermite(3) * &hermite(3))));
    for k in 1..=5 {
        println!("kappa_{k}(H3(X)) = {}", cumulant(&hermite(3), k));
    }
}
