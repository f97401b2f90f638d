//! Characteristic-function ODEs induced by Stein operators.

use std::fmt::Write as _;

use num_complex::Complex;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::chain::SteinOperator;
use crate::poly::{format_rational, Rational};

use super::AnalyticsError;

/// Gaussian rational a + b·i.
pub type GaussianRational = Complex<Rational>;

fn unit_power(k: i64) -> GaussianRational {
    let (zero, one) = (Rational::zero(), Rational::one());
    match k.rem_euclid(4) {
        0 => Complex::new(one, zero),
        1 => Complex::new(zero, one),
        2 => Complex::new(-one, zero),
        _ => Complex::new(zero, -one),
    }
}

/// Σ_i c_i(t) φ^{(i)}(t) = 0 with polynomial coefficients c_i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharFnODE {
    /// Highest derivative order, the y-degree m of the operator.
    pub order: usize,
    /// coefficients[i][j] is the t^j coefficient of c_i.
    pub coefficients: Vec<Vec<GaussianRational>>,
}

/// Read p_t(y) = Σ_i a_{i,t} y^i and set c_i(t) = Σ_t a_{i,t}·i^{t−i}·t^t.
pub fn charfn_ode(op: &SteinOperator) -> CharFnODE {
    let m = op.max_degree();
    let t_len = op.coeffs.len();
    let mut coefficients = vec![vec![GaussianRational::zero(); t_len]; m + 1];
    for (j, p) in op.coeffs.iter().enumerate() {
        for (a, c) in p.terms() {
            let i = a.get(0) as usize;
            let u = unit_power(j as i64 - i as i64);
            coefficients[i][j] = &coefficients[i][j] + &u.scale(c.clone());
        }
    }
    let mut ode = CharFnODE { order: m, coefficients };
    ode.trim();
    ode
}

impl CharFnODE {
    fn trim(&mut self) {
        for c in &mut self.coefficients {
            while c.last().is_some_and(Zero::is_zero) {
                c.pop();
            }
        }
    }

    pub fn coefficient(&self, i: usize) -> &[GaussianRational] {
        &self.coefficients[i]
    }

    /// Divide by the unit that makes the leading t-coefficient of the highest
    /// derivative real and positive.
    pub fn normalized(&self) -> CharFnODE {
        let lead = self.coefficients.iter().rev().find_map(|c| c.last()).cloned();
        let Some(lead) = lead else { return self.clone() };
        let unit = if lead.im.is_zero() {
            if lead.re.is_positive() {
                unit_power(0)
            } else {
                unit_power(2)
            }
        } else if lead.re.is_zero() {
            if lead.im.is_positive() {
                unit_power(1)
            } else {
                unit_power(3)
            }
        } else {
            unit_power(0)
        };
        // 1/u = conj(u) for a unit
        let inv = unit.conj();
        CharFnODE {
            order: self.order,
            coefficients: self.coefficients.iter().map(|c| c.iter().map(|z| z * &inv).collect()).collect(),
        }
    }

    /// c_i evaluated at a complex point.
    pub fn eval_coefficient(&self, i: usize, t: Complex<f64>) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for z in self.coefficients[i].iter().rev() {
            acc = acc * t + to_c64(z);
        }
        acc
    }

    /// LaTeX rendering, highest derivative first.
    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        for i in (0..self.coefficients.len()).rev() {
            let c = &self.coefficients[i];
            if c.iter().all(Zero::is_zero) {
                continue;
            }
            let body = poly_t_latex(c);
            let nterms = c.iter().filter(|z| !z.is_zero()).count();
            let single_complex = nterms == 1 && c.iter().any(|z| !z.re.is_zero() && !z.im.is_zero());
            let (negative, body) = match body.strip_prefix('-') {
                Some(rest) if nterms == 1 && !single_complex => (true, rest.to_string()),
                _ => (false, body),
            };
            let wrapped = if nterms > 1 || single_complex { format!("({body})") } else { body };
            let wrapped = if wrapped == "1" { String::new() } else { wrapped };
            if out.is_empty() {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let _ = write!(out, "{wrapped}{}", derivative_latex(i));
        }
        if out.is_empty() {
            out.push('0');
        }
        out.push_str(" = 0");
        out
    }
}

pub(crate) fn to_c64(z: &GaussianRational) -> Complex<f64> {
    use num_traits::ToPrimitive;
    Complex::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
}

fn derivative_latex(i: usize) -> String {
    match i {
        0 => "\\phi(t)".into(),
        1 => "\\phi'(t)".into(),
        2 => "\\phi''(t)".into(),
        _ => format!("\\phi^{{({i})}}(t)"),
    }
}

fn gaussian_latex(z: &GaussianRational) -> String {
    let im = |b: &Rational| {
        if b.is_one() {
            "\\mathrm{i}".to_string()
        } else if (-b).is_one() {
            "-\\mathrm{i}".to_string()
        } else {
            format!("{}\\mathrm{{i}}", format_rational(b))
        }
    };
    match (z.re.is_zero(), z.im.is_zero()) {
        (_, true) => format_rational(&z.re),
        (true, false) => im(&z.im),
        (false, false) => {
            let b = im(&z.im);
            if b.starts_with('-') {
                format!("({}{})", format_rational(&z.re), b)
            } else {
                format!("({}+{})", format_rational(&z.re), b)
            }
        }
    }
}

fn poly_t_latex(c: &[GaussianRational]) -> String {
    let mut out = String::new();
    for (j, z) in c.iter().enumerate().rev() {
        if z.is_zero() {
            continue;
        }
        let mut coef = gaussian_latex(z);
        if j > 0 {
            if coef == "1" {
                coef.clear();
            } else if coef == "-1" {
                coef = "-".into();
            } else if coef == "\\mathrm{i}" || coef == "-\\mathrm{i}" {
                coef.push(' ');
            }
        }
        let tpow = match j {
            0 => String::new(),
            1 => "t".into(),
            _ => format!("t^{{{j}}}"),
        };
        let term = format!("{coef}{tpow}");
        if out.is_empty() {
            out = term;
        } else if let Some(rest) = term.strip_prefix('-') {
            let _ = write!(out, "-{rest}");
        } else {
            let _ = write!(out, "+{term}");
        }
    }
    out
}

/// Which sufficient condition for characterization holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum PoleCondition {
    /// Odd pole order α ≥ 3 with lim t^α p(t) = p₀ > 0.
    OddPole {
        alpha: i64,
        #[serde(serialize_with = "ser_rational")]
        p0: Rational,
    },
    /// p(t) ∼ a·i/t² + b/t with a ≠ 0 real and b ≥ −2.
    DoublePole {
        #[serde(serialize_with = "ser_rational")]
        a: Rational,
        #[serde(serialize_with = "ser_rational")]
        b: Rational,
    },
    Neither,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

/// Laurent data of p(t) = c₁(t)/c₂(t) at t = 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    /// Pole order; zero or negative when p is regular at 0.
    pub alpha: i64,
    /// Coefficient of t^{−α}.
    pub leading: GaussianRational,
    /// Coefficient of t^{−α+1}.
    pub next: GaussianRational,
    pub condition: PoleCondition,
}

fn valuation(c: &[GaussianRational]) -> Option<usize> {
    c.iter().position(|z| !z.is_zero())
}

fn at(c: &[GaussianRational], k: usize) -> GaussianRational {
    c.get(k).cloned().unwrap_or_else(GaussianRational::zero)
}

/// Classify the pole of p(t) for a second-order ODE.
pub fn charfn_pole_classify(ode: &CharFnODE) -> Result<Classification, AnalyticsError> {
    if ode.order != 2 {
        return Err(AnalyticsError::Order(ode.order));
    }
    let den = ode.coefficient(2);
    let num = ode.coefficient(1);
    let Some(vd) = valuation(den) else { return Err(AnalyticsError::ZeroLeadingCoefficient) };
    let Some(vn) = valuation(num) else {
        return Ok(Classification {
            alpha: i64::MIN,
            leading: GaussianRational::zero(),
            next: GaussianRational::zero(),
            condition: PoleCondition::Neither,
        });
    };
    let alpha = vd as i64 - vn as i64;
    let (d0, d1) = (at(den, vd), at(den, vd + 1));
    let (n0, n1) = (at(num, vn), at(num, vn + 1));
    let c0 = &n0 / &d0;
    let c1 = (&n1 - &(&c0 * &d1)) / &d0;
    let condition = if alpha >= 3 && alpha % 2 == 1 && c0.im.is_zero() && c0.re.is_positive() {
        PoleCondition::OddPole { alpha, p0: c0.re.clone() }
    } else if alpha == 2
        && c0.re.is_zero()
        && !c0.im.is_zero()
        && c1.im.is_zero()
        && c1.re >= Rational::from_integer((-2).into())
    {
        PoleCondition::DoublePole { a: c0.im.clone(), b: c1.re.clone() }
    } else {
        PoleCondition::Neither
    };
    Ok(Classification { alpha, leading: c0, next: c1, condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Provenance;
    use crate::hermite::hermite;
    use crate::malliavin::TargetSpec;
    use crate::poly::{rat, ratio, Poly};

    fn op(h: Poly, coeffs: &[&str]) -> SteinOperator {
        SteinOperator::new(
            TargetSpec::new(h).unwrap(),
            coeffs.iter().map(|s| Poly::parse_y(s).unwrap()).collect(),
            Provenance::Fixture,
        )
    }

    fn re(c: &[i64]) -> Vec<GaussianRational> {
        c.iter().map(|&v| Complex::new(rat(v), rat(0))).collect()
    }

    #[test]
    fn gaussian_ode() {
        let ode = charfn_ode(&op(hermite(1), &["y", "-1"])).normalized();
        // i·(φ' + tφ) up to a unit
        assert_eq!(ode.coefficient(1), re(&[1]).as_slice());
        assert_eq!(ode.coefficient(0), re(&[0, 1]).as_slice());
    }

    #[test]
    fn h3_third_order_ode() {
        let o = op(hermite(3), &["5*y", "-3*y^2-12", "207*y", "351*y^2-1080", "81*y^3-324*y"]);
        let ode = charfn_ode(&o).normalized();
        assert_eq!(ode.order, 3);
        assert_eq!(ode.coefficient(3), re(&[0, 0, 0, 0, 81]).as_slice());
        assert_eq!(ode.coefficient(2), re(&[0, 3, 0, 351]).as_slice());
        assert_eq!(ode.coefficient(1), re(&[-5, 0, 207, 0, 324]).as_slice());
        assert_eq!(ode.coefficient(0), re(&[0, -12, 0, 1080]).as_slice());
        assert_eq!(
            ode.to_latex(),
            "81t^{4}\\phi^{(3)}(t) + (351t^{3}+3t)\\phi''(t) + (324t^{4}+207t^{2}-5)\\phi'(t) + (1080t^{3}-12t)\\phi(t) = 0"
        );
    }

    #[test]
    fn classifier_h4_double_pole() {
        let o = op(hermite(4), &["y", "-44*y-24", "-16*y^2+144*y+576", "192*y^2+576*y-3456"]);
        let c = charfn_pole_classify(&charfn_ode(&o)).unwrap();
        assert_eq!(c.condition, PoleCondition::DoublePole { a: ratio(1, 16), b: rat(2) });
    }

    #[test]
    fn classifier_h3_odd_pole() {
        let o = op(hermite(3), &["y", "-6", "-99*y", "216-27*y^2", "486*y", "486*y^2-1944"]);
        let c = charfn_pole_classify(&charfn_ode(&o)).unwrap();
        assert_eq!(c.condition, PoleCondition::OddPole { alpha: 3, p0: ratio(1, 27) });
    }

    #[test]
    fn classifier_rejects_wrong_order() {
        let o = op(hermite(2), &["y", "-2*y-2"]);
        assert_eq!(charfn_pole_classify(&charfn_ode(&o)), Err(AnalyticsError::Order(1)));
    }
}
