//! Minimal (T, m) pairs for small Hermite targets in both zero-order modes.

use stein_control::control::{min_degree_search, min_order_search, ZeroOrder};
use stein_control::hermite::hermite;
use stein_control::malliavin::{GammaVariant, TargetSpec};

fn main() {
    let v = GammaVariant::Standard;
    for p in 1..=6 {
        let t = TargetSpec::new(hermite(p)).unwrap();
        let t_cap = p * (p + 1) / 2 + 2;
        let mut row = format!("H{p}:");
        for zero in [ZeroOrder::Generic, ZeroOrder::Cy] {
            let a = min_order_search(&t, &zero, p * p, t_cap, v).unwrap();
            let b = min_degree_search(&t, &zero, t_cap, p, v).unwrap();
            row += &format!("  {} minT ({},{}) minm ({},{})", zero.label(), a.t, a.m, b.t, b.m);
        }
        println!("{row}");
    }
}
