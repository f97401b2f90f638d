//! Second-chaos targets in two variables, solved with both pseudo-inverses.

use stein_control::chain::forward_replay;
use stein_control::control::{find_null_control, ZeroOrder};
use stein_control::document::emit_latex;
use stein_control::fixtures::second_chaos_example;
use stein_control::malliavin::{GammaVariant, TargetSpec};

fn main() {
    let known = second_chaos_example();
    println!("x1^2-x2^2: {} algebraic = {}", emit_latex(&known), forward_replay(&known, GammaVariant::Standard).unwrap().is_algebraic());
    for expr in ["x1^2-x2^2", "x1^2-2*x2^2", "x1*x2+x3^2"] {
        let t = TargetSpec::parse(expr).unwrap();
        for v in [GammaVariant::Standard, GammaVariant::Modified] {
            match find_null_control(&t, 4, 2, &ZeroOrder::Cy, v) {
                Ok(s) => println!("{expr} {v:?}: {}", emit_latex(&s.operator(&t))),
                Err(e) => println!("{expr} {v:?}: {e}"),
            }
        }
    }
}
