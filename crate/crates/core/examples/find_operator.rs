//! Find the order-3 operator for H4 and print it in every output format.

use stein_control::control::{find_null_control, ZeroOrder};
use stein_control::document::{emit_latex, emit_symbolic, OperatorDocument};
use stein_control::hermite::hermite;
use stein_control::malliavin::{GammaVariant, TargetSpec};

fn main() {
    let target = TargetSpec::new(hermite(4)).expect("H4 is nonconstant");
    let sol = find_null_control(&target, 5, 2, &ZeroOrder::Cy, GammaVariant::Standard).expect("reachable at T = 3");
    let op = sol.operator(&target);
    println!("T = {}, m = {}, homogeneous directions: {}", sol.t, sol.m, sol.nullspace_basis.len());
    println!("symbolic: {}", emit_symbolic(&op));
    println!("latex:    {}", emit_latex(&op));
    let doc = OperatorDocument::from_solution(&target, &sol, "cy", GammaVariant::Standard);
    assert!(doc.verification.ok());
    println!("{}", doc.to_json());
}
