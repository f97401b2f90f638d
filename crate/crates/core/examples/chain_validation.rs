//! Forward and backward Stein chains for printed operators.

use stein_control::chain::{backward_validate, forward_replay, moment_conditions};
use stein_control::fixtures::{by_name, non_algebraic_examples};
use stein_control::malliavin::GammaVariant;

fn main() {
    let op = by_name("h3-cy-order4").unwrap().operator();
    let trace = forward_replay(&op, GammaVariant::Standard).unwrap();
    for (t, g) in trace.g.iter().enumerate() {
        println!("g_{t} = {g}");
    }
    println!("residual = {}, algebraic = {}", trace.residual, trace.is_algebraic());
    println!("moment defects: {:?}", moment_conditions(&op, op.order() + 4).iter().map(|d| d.to_string()).collect::<Vec<_>>());
    let back = backward_validate(&op);
    println!("backward: ok = {}, {}", back.ok, back.message);

    for (name, op) in non_algebraic_examples() {
        let trace = forward_replay(&op, GammaVariant::Standard).unwrap();
        println!("{name}: residual {} (Stein identity still holds)", trace.residual);
    }
}
