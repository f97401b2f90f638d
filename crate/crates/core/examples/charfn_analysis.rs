//! Characteristic-function ODEs, pole classification and a numeric residual check.

use stein_control::analytics::{charfn_ode, charfn_pole_classify, charfn_residual, linspace, DEFAULT_NODES};
use stein_control::fixtures::by_name;

fn main() {
    for name in ["h3-cy-order4", "h3-cy-degree2", "h4-cy", "h2+h4"] {
        let op = by_name(name).unwrap().operator();
        let ode = charfn_ode(&op).normalized();
        println!("{name}: {}", ode.to_latex());
        match charfn_pole_classify(&ode) {
            Ok(c) => println!("  alpha = {}, {}", c.alpha, serde_json::to_string(&c.condition).unwrap()),
            Err(e) => println!("  {e}"),
        }
        let r = charfn_residual(&op, &linspace(0.1, 2.0, 10), DEFAULT_NODES).unwrap();
        println!("  numeric residual {:.2e}, converged {}", r.max_residual, r.converged);
    }
}
