//! Exact Stein-identity checks, characteristic-function ODEs and Gamma relations.

pub mod charfn;
pub mod gamma_char;
pub mod quadrature;

use thiserror::Error;

use crate::chain::{defects_from_moments, SteinOperator};
use crate::hermite::moments_of;
use crate::poly::Rational;

pub use charfn::{charfn_ode, charfn_pole_classify, CharFnODE, Classification, GaussianRational, PoleCondition};
pub use gamma_char::{gamma_characterization_check, GammaCombination, GammaIdentity};
pub use quadrature::{charfn_residual, linspace, ResidualReport, DEFAULT_NODES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("pole classification needs a second-order ODE, got order {0}")]
    Order(usize),
    #[error("the phi'' coefficient is identically zero")]
    ZeroLeadingCoefficient,
    #[error("numeric residuals need a univariate target")]
    Multivariate,
    #[error("at least 50 quadrature nodes are required, got {0}")]
    TooFewNodes(usize),
}

/// E[S f(Y)] for f(y) = y^k, k = 0..=k_max, computed exactly.
pub fn stein_identity_check(op: &SteinOperator, k_max: usize) -> Vec<Rational> {
    let moments = moments_of(op.target.h(), k_max + op.max_degree());
    defects_from_moments(&op.coeffs, &moments, k_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Provenance;
    use crate::hermite::hermite;
    use crate::malliavin::TargetSpec;
    use crate::poly::Poly;
    use num_traits::Zero;

    fn op(p: usize, coeffs: &[&str]) -> SteinOperator {
        SteinOperator::new(
            TargetSpec::new(hermite(p)).unwrap(),
            coeffs.iter().map(|s| Poly::parse_y(s).unwrap()).collect(),
            Provenance::Fixture,
        )
    }

    #[test]
    fn identity_defects() {
        assert!(stein_identity_check(&op(1, &["y", "-1"]), 6).iter().all(Zero::is_zero));
        assert!(stein_identity_check(&op(2, &["y", "-2*y-2"]), 6).iter().all(Zero::is_zero));
        let h4 = op(4, &["y", "-44*y-24", "-16*y^2+144*y+576", "192*y^2+576*y-3456"]);
        assert!(stein_identity_check(&h4, 20).iter().all(Zero::is_zero));
        let bad = op(2, &["y", "-2*y-1"]);
        assert!(!stein_identity_check(&bad, 1)[1].is_zero());
    }
}
