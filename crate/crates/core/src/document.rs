//! JSON documents for Stein operators, their verification block and text emitters.

use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::stein_identity_check;
use crate::chain::{backward_validate, forward_replay, moment_conditions, Provenance, SteinOperator};
use crate::control::ControlSolution;
use crate::malliavin::{GammaVariant, TargetSpec};
use crate::poly::{display_order, format_rational, MultiIndex, Poly, Rational};

pub const SCHEMA: &str = "stein-operator/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("unsupported schema '{0}'")]
    Schema(String),
    #[error("bad number '{0}'")]
    Number(String),
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] JsonError),
}

/// serde_json errors are not `Eq`; keep the message only.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct JsonError(pub String);

/// Terms of a polynomial as (exponents, coefficient).
pub type TermList = Vec<(Vec<u32>, String)>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDoc {
    pub d: usize,
    /// h before centering, in x1..xd.
    pub h: TermList,
    /// E[h(X)].
    pub centered_shift: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpace {
    pub nullspace_dimension: usize,
    /// Stacked p_1..p_T coefficient vectors spanning the homogeneous solutions.
    pub basis: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verification {
    pub replay_residual_zero: bool,
    pub moment_defects_zero: bool,
    pub stein_identity_k: usize,
    pub stein_identity_zero: bool,
    /// None for multivariate targets.
    pub backward_ok: Option<bool>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.replay_residual_zero && self.moment_defects_zero && self.stein_identity_zero && self.backward_ok != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub solve_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDocument {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub provenance: Provenance,
    pub target: TargetDoc,
    pub zero_order_mode: String,
    pub variant: GammaVariant,
    #[serde(rename = "T")]
    pub t: usize,
    pub m: usize,
    /// p_0..p_T in the centered variable y, as (exponent, coefficient).
    pub coefficients: Vec<Vec<(u32, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_space: Option<SolutionSpace>,
    pub verification: Verification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Full output of the validation suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub summary: Verification,
    /// Degree of g_T + p_T(h), None when it is zero.
    pub replay_residual_degree: Option<u32>,
    pub replay_residual: String,
    /// E[g_t] + E[p_t(Y)] along the forward chain.
    pub chain_defects: Vec<String>,
    /// Moment-condition defects D_s, s ≤ T + 4.
    pub moment_defects: Vec<String>,
    /// k with E[S y^k] ≠ 0, k ≤ stein_identity_k.
    pub stein_identity_failures: Vec<usize>,
    pub backward_failed_stage: Option<usize>,
    pub backward_message: String,
}

fn parse_rational(s: &str) -> Result<Rational, DocumentError> {
    Rational::from_str(s.trim()).map_err(|_| DocumentError::Number(s.to_string()))
}

fn terms_of(p: &Poly) -> TermList {
    display_order(p).into_iter().map(|(a, c)| (a.exps().to_vec(), format_rational(c))).collect()
}

fn poly_from_terms(nvars: usize, terms: &TermList) -> Result<Poly, DocumentError> {
    let mut p = Poly::zero(nvars);
    for (e, c) in terms {
        if e.len() != nvars {
            return Err(DocumentError::Malformed(format!("exponent vector {e:?} has {} entries, want {nvars}", e.len())));
        }
        p.add_term(MultiIndex::new(e.clone()), parse_rational(c)?);
    }
    Ok(p)
}

fn y_terms(p: &Poly) -> Vec<(u32, String)> {
    display_order(p).into_iter().map(|(a, c)| (a.get(0), format_rational(c))).collect()
}

/// Runs forward replay, moment conditions, the Stein identity and backward validation.
pub fn verify_operator(op: &SteinOperator, variant: GammaVariant) -> VerificationReport {
    let t = op.order();
    let k = 2 * t + op.max_degree() + 4;
    let (residual_zero, residual_degree, residual, chain_defects) = match forward_replay(op, variant) {
        Ok(tr) => (
            tr.residual.is_zero(),
            tr.residual.degree().finite(),
            tr.residual.to_string(),
            tr.moment_defects.iter().map(format_rational).collect(),
        ),
        Err(e) => (false, None, e.to_string(), Vec::new()),
    };
    let moments = moment_conditions(op, t + 4);
    let identity = stein_identity_check(op, k);
    let failures: Vec<usize> = identity.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, _)| i).collect();
    let (backward_ok, stage, message) = if op.target.d() == 1 {
        let r = backward_validate(op);
        (Some(r.ok), r.failed_stage, r.message)
    } else {
        (None, None, "skipped for a multivariate target".to_string())
    };
    VerificationReport {
        summary: Verification {
            replay_residual_zero: residual_zero,
            moment_defects_zero: moments.iter().all(Zero::is_zero),
            stein_identity_k: k,
            stein_identity_zero: failures.is_empty(),
            backward_ok,
        },
        replay_residual_degree: residual_degree,
        replay_residual: residual,
        chain_defects,
        moment_defects: moments.iter().map(format_rational).collect(),
        stein_identity_failures: failures,
        backward_failed_stage: stage,
        backward_message: message,
    }
}

impl OperatorDocument {
    /// Builds a document and fills the verification block.
    pub fn from_operator(op: &SteinOperator, zero_order_mode: &str, variant: GammaVariant) -> Self {
        let shift = op.target.centered_shift().clone();
        let mut h = op.target.h().clone();
        h.add_term(MultiIndex::zero(op.target.d()), shift.clone());
        OperatorDocument {
            schema: SCHEMA.to_string(),
            name: None,
            provenance: op.provenance,
            target: TargetDoc { d: op.target.d(), h: terms_of(&h), centered_shift: format_rational(&shift) },
            zero_order_mode: zero_order_mode.to_string(),
            variant,
            t: op.order(),
            m: op.max_degree(),
            coefficients: op.coeffs.iter().map(y_terms).collect(),
            solution_space: None,
            verification: verify_operator(op, variant).summary,
            timing: None,
        }
    }

    pub fn from_solution(target: &TargetSpec, sol: &ControlSolution, zero_order_mode: &str, variant: GammaVariant) -> Self {
        let mut doc = OperatorDocument::from_operator(&sol.operator(target), zero_order_mode, variant);
        doc.solution_space = Some(SolutionSpace {
            nullspace_dimension: sol.nullspace_basis.len(),
            basis: sol.nullspace_basis.iter().map(|v| v.iter().map(format_rational).collect()).collect(),
        });
        doc
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn target_spec(&self) -> Result<TargetSpec, DocumentError> {
        if self.target.d == 0 {
            return Err(DocumentError::Malformed("d must be positive".into()));
        }
        let h = poly_from_terms(self.target.d, &self.target.h)?;
        let spec = TargetSpec::new(h).map_err(|e| DocumentError::Malformed(e.to_string()))?;
        if *spec.centered_shift() != parse_rational(&self.target.centered_shift)? {
            return Err(DocumentError::Malformed(format!(
                "centered_shift {} differs from E[h] = {}",
                self.target.centered_shift,
                format_rational(spec.centered_shift())
            )));
        }
        Ok(spec)
    }

    pub fn to_operator(&self) -> Result<SteinOperator, DocumentError> {
        if self.schema != SCHEMA {
            return Err(DocumentError::Schema(self.schema.clone()));
        }
        let target = self.target_spec()?;
        if self.coefficients.len() != self.t + 1 {
            return Err(DocumentError::Malformed(format!(
                "{} coefficient lists for T = {}",
                self.coefficients.len(),
                self.t
            )));
        }
        let coeffs = self
            .coefficients
            .iter()
            .map(|c| poly_from_terms(1, &c.iter().map(|(e, v)| (vec![*e], v.clone())).collect()))
            .collect::<Result<Vec<_>, _>>()?;
        if coeffs.last().is_some_and(Poly::is_zero) {
            return Err(DocumentError::Malformed("p_T is zero".into()));
        }
        Ok(SteinOperator { target, coeffs, provenance: self.provenance })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(s).map_err(|e| JsonError(e.to_string()).into())
    }
}

fn partial_name(t: usize, d: &str, tex: bool) -> String {
    match (t, tex) {
        (1, _) => d.to_string(),
        (_, true) => format!("{d}^{{{t}}}"),
        (_, false) => format!("{d}^{t}"),
    }
}

/// MATLAB-style string, highest derivative first: "(…)*D^3+…+y".
pub fn emit_symbolic(op: &SteinOperator) -> String {
    let mut out = String::new();
    for (t, p) in op.coeffs.iter().enumerate().rev() {
        if p.is_zero() {
            continue;
        }
        let mut coeff = p.to_y_string();
        if p.num_terms() > 1 {
            coeff = format!("({coeff})");
        }
        let term = match t {
            0 => coeff,
            _ if *p == Poly::one(1) => partial_name(t, "D", false),
            _ if *p == -&Poly::one(1) => format!("-{}", partial_name(t, "D", false)),
            _ => format!("{coeff}*{}", partial_name(t, "D", false)),
        };
        if !out.is_empty() && !term.starts_with('-') {
            out.push('+');
        }
        out.push_str(&term);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn latex_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

/// |c|·y^k in LaTeX.
fn latex_monomial(k: u32, c: &Rational) -> String {
    let c = c.abs();
    let var = match k {
        0 => return latex_rational(&c),
        1 => "y".to_string(),
        _ => format!("y^{{{k}}}"),
    };
    if c.is_one() {
        var
    } else {
        format!("{}\\,{var}", latex_rational(&c))
    }
}

/// Appendix layout: ascending derivative order, "\," before y, and a multi-term
/// coefficient with a negative leading term shown as "- (…)".
pub fn emit_latex(op: &SteinOperator) -> String {
    let mut out = String::new();
    for (t, p) in op.coeffs.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let terms = display_order(p);
        let negative = terms[0].1.is_negative();
        let body = if terms.len() == 1 {
            let (a, c) = terms[0];
            if t > 0 && c.abs().is_one() && a.get(0) == 0 {
                String::new()
            } else {
                latex_monomial(a.get(0), c)
            }
        } else {
            let mut s = String::from("(");
            for (i, (a, c)) in terms.iter().enumerate() {
                if i > 0 {
                    s.push_str(if c.is_negative() != negative { " - " } else { " + " });
                }
                s.push_str(&latex_monomial(a.get(0), c));
            }
            s.push(')');
            s
        };
        let d = if t == 0 { String::new() } else { partial_name(t, "\\partial", true) };
        match (out.is_empty(), negative) {
            (true, true) => out.push('-'),
            (true, false) => {}
            (false, true) => out.push_str(" - "),
            (false, false) => out.push_str(" + "),
        }
        out.push_str(&body);
        out.push_str(&d);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite;

    fn op(h: Poly, coeffs: &[&str]) -> SteinOperator {
        SteinOperator::new(
            TargetSpec::new(h).unwrap(),
            coeffs.iter().map(|s| Poly::parse_y(s).unwrap()).collect(),
            Provenance::Fixture,
        )
    }

    fn h4() -> SteinOperator {
        op(hermite(4), &["y", "-44*y-24", "-16*y^2+144*y+576", "192*y^2+576*y-3456"])
    }

    #[test]
    fn symbolic_h4() {
        assert_eq!(
            emit_symbolic(&h4()),
            "(192*y^2+576*y-3456)*D^3+(-16*y^2+144*y+576)*D^2+(-44*y-24)*D+y"
        );
    }

    #[test]
    fn latex_layouts() {
        assert_eq!(emit_latex(&op(hermite(2), &["y", "-2*y-2"])), "y - (2\\,y + 2)\\partial");
        let x3 = op(Poly::parse_x("x^3").unwrap(), &["y", "-15", "-81*y", "-27*y^2"]);
        assert_eq!(emit_latex(&x3), "y - 15\\partial - 81\\,y\\partial^{2} - 27\\,y^{2}\\partial^{3}");
        let h1h2 = op(Poly::parse_x("x^2+x-1").unwrap(), &["y", "-4*y-3", "4*y+5"]);
        assert_eq!(emit_latex(&h1h2), "y - (4\\,y + 3)\\partial + (4\\,y + 5)\\partial^{2}");
        assert_eq!(emit_latex(&op(hermite(1), &["y", "-1"])), "y - \\partial");
        assert_eq!(emit_symbolic(&op(hermite(1), &["y", "-1"])), "-D+y");
    }

    #[test]
    fn json_round_trip() {
        let doc = OperatorDocument::from_operator(&h4(), "cy", GammaVariant::Standard).with_name("h4-cy");
        assert!(doc.verification.ok());
        let back = OperatorDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_operator().unwrap(), h4());
        assert_eq!(back.to_json(), doc.to_json());
    }

    #[test]
    fn altered_coefficient_fails() {
        let bad = op(hermite(4), &["y", "-43*y-24", "-16*y^2+144*y+576", "192*y^2+576*y-3456"]);
        let r = verify_operator(&bad, GammaVariant::Standard);
        assert!(!r.summary.replay_residual_zero);
        assert!(r.replay_residual_degree.is_some());
        assert!(!r.summary.ok());
        // Γ ignores constants, so a shifted constant term only shows in the moments
        let bad = op(hermite(4), &["y", "-44*y-23", "-16*y^2+144*y+576", "192*y^2+576*y-3456"]);
        let r = verify_operator(&bad, GammaVariant::Standard);
        assert!(r.summary.replay_residual_zero);
        assert!(!r.summary.moment_defects_zero);
        assert!(!r.summary.ok());
    }

    #[test]
    fn malformed_documents() {
        let mut doc = OperatorDocument::from_operator(&h4(), "cy", GammaVariant::Standard);
        doc.target.centered_shift = "1".into();
        assert!(matches!(doc.to_operator(), Err(DocumentError::Malformed(_))));
        let mut doc = OperatorDocument::from_operator(&h4(), "cy", GammaVariant::Standard);
        doc.schema = "stein-operator/0".into();
        assert!(matches!(doc.to_operator(), Err(DocumentError::Schema(_))));
        assert!(OperatorDocument::from_json("{\"schema\": 1}").is_err());
    }

    #[test]
    fn multivariate_target_skips_backward() {
        let o = SteinOperator::new(
            TargetSpec::parse("x1^2-x2^2").unwrap(),
            vec![Poly::parse_y("y").unwrap(), Poly::parse_y("-4").unwrap(), Poly::parse_y("-4*y").unwrap()],
            Provenance::Fixture,
        );
        let doc = OperatorDocument::from_operator(&o, "cy", GammaVariant::Standard);
        assert_eq!(doc.verification.backward_ok, None);
        assert_eq!(OperatorDocument::from_json(&doc.to_json()).unwrap().to_operator().unwrap(), o);
    }
}
