//! Polynomial relations among the Malliavin Gamma operators Γ_r(Y).

use std::fmt;
use std::str::FromStr;

use crate::hermite::hermite;
use crate::malliavin::{gamma_malliavin_iter, TargetSpec};
use crate::poly::{compose_target, rat, Poly};

/// Σ_r c_r(Y)·Γ_r(Y) + q(Y), coefficients written in y.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaCombination {
    pub target: TargetSpec,
    pub terms: Vec<(usize, Poly)>,
    pub free: Poly,
}

/// The relations checked by `gamma_characterization_check`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaIdentity {
    /// Γ5 − 153Γ3 − 27YΓ2 + 324Γ1 − 486(4 − Y²) for H3.
    H3Gamma5,
    /// 4Γ4 + 3YΓ3 − 540Γ2 − 351YΓ1 + 81Y(4 − Y²) for H3.
    H3Gamma4,
    /// The same relation with leading coefficient 1 in front of Γ4.
    H3Gamma4UnitLead,
    /// Γ3 − 60Γ2 + 16(9 − Y)Γ1 − 192(Y + 6)(3 − Y) for H4.
    H4Gamma3,
}

impl GammaIdentity {
    pub const ALL: [GammaIdentity; 4] =
        [GammaIdentity::H3Gamma5, GammaIdentity::H3Gamma4, GammaIdentity::H3Gamma4UnitLead, GammaIdentity::H4Gamma3];

    pub fn name(self) -> &'static str {
        match self {
            GammaIdentity::H3Gamma5 => "h3-gamma5",
            GammaIdentity::H3Gamma4 => "h3-gamma4",
            GammaIdentity::H3Gamma4UnitLead => "h3-gamma4-unit",
            GammaIdentity::H4Gamma3 => "h4-gamma3",
        }
    }

    pub fn combination(self) -> GammaCombination {
        let y = |s: &str| Poly::parse_y(s).expect("static coefficient");
        let (p, terms, free) = match self {
            GammaIdentity::H3Gamma5 => {
                (3, vec![(5, y("1")), (3, y("-153")), (2, y("-27*y")), (1, y("324"))], y("486*y^2-1944"))
            }
            GammaIdentity::H3Gamma4 => {
                (3, vec![(4, y("4")), (3, y("3*y")), (2, y("-540")), (1, y("-351*y"))], y("-81*y^3+324*y"))
            }
            GammaIdentity::H3Gamma4UnitLead => {
                (3, vec![(4, y("1")), (3, y("3*y")), (2, y("-540")), (1, y("-351*y"))], y("-81*y^3+324*y"))
            }
            GammaIdentity::H4Gamma3 => {
                (4, vec![(3, y("1")), (2, y("-60")), (1, y("144-16*y"))], y("192*y^2+576*y-3456"))
            }
        };
        GammaCombination { target: TargetSpec::new(hermite(p)).expect("nonconstant"), terms, free }
    }
}

impl fmt::Display for GammaIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GammaIdentity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GammaIdentity::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown identity '{s}'"))
    }
}

impl GammaCombination {
    /// The combination as a polynomial in x.
    pub fn residual(&self) -> Poly {
        let h = self.target.h();
        let mut out = compose_target(&self.free, h);
        for (r, c) in &self.terms {
            out = &out + &(&compose_target(c, h) * &gamma_malliavin_iter(&self.target, *r));
        }
        out
    }

    /// Every combination with exactly one nonzero constant lowered by 1.
    pub fn perturbations(&self) -> Vec<GammaCombination> {
        let mut out = Vec::new();
        for (i, (_, c)) in self.terms.iter().enumerate() {
            for (a, _) in c.terms() {
                let mut g = self.clone();
                g.terms[i].1.add_term(a.clone(), rat(-1));
                out.push(g);
            }
        }
        for (a, _) in self.free.terms() {
            let mut g = self.clone();
            g.free.add_term(a.clone(), rat(-1));
            out.push(g);
        }
        out
    }

    pub fn to_y_string(&self) -> String {
        let mut parts = Vec::new();
        for (r, c) in &self.terms {
            parts.push(format!("({})*G{r}", c.to_y_string()));
        }
        parts.push(format!("({})", self.free.to_y_string()));
        parts.join(" + ")
    }
}

/// Residual of a displayed Gamma relation as an exact polynomial in x.
pub fn gamma_characterization_check(which: GammaIdentity) -> Poly {
    which.combination().residual()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn displayed_relations_vanish() {
        assert!(gamma_characterization_check(GammaIdentity::H3Gamma5).is_zero());
        assert!(gamma_characterization_check(GammaIdentity::H3Gamma4).is_zero());
        assert!(gamma_characterization_check(GammaIdentity::H4Gamma3).is_zero());
    }

    #[test]
    fn unit_lead_relation_does_not_vanish() {
        let r = gamma_characterization_check(GammaIdentity::H3Gamma4UnitLead);
        assert_eq!(r, Poly::parse_x("-243*x^7-1701*x^5-4617*x^3+6561*x").unwrap());
    }

    #[test]
    fn perturbations_break_relations() {
        for id in [GammaIdentity::H3Gamma5, GammaIdentity::H3Gamma4, GammaIdentity::H4Gamma3] {
            let probes = id.combination().perturbations();
            assert!(!probes.is_empty());
            for p in probes {
                assert!(!p.residual().is_zero(), "{id}: {}", p.to_y_string());
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for id in GammaIdentity::ALL {
            assert_eq!(id.name().parse::<GammaIdentity>().unwrap(), id);
        }
    }
}
