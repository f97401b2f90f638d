//! Polynomial relations among the Gamma operators of H3 and H4.

use stein_control::analytics::{gamma_characterization_check, GammaIdentity};

fn main() {
    for id in GammaIdentity::ALL {
        let c = id.combination();
        println!("{id}: {} = {}", c.to_y_string(), gamma_characterization_check(id));
    }
}
