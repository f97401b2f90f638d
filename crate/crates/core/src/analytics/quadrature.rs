//! Numeric check that φ_Y solves its characteristic-function ODE.
//!
//! E[Y^k e^{itY}] is integrated along z = r + i·ε·tanh(h'(r)/s), which keeps
//! Im(t·h(z)) ≥ 0 and damps the oscillation of e^{ith(z)} away from the
//! critical points of h. The integrand is entire, so the shift leaves the value
//! unchanged.

use num_complex::Complex;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::chain::{real_roots, SteinOperator};

use super::charfn::{charfn_ode, CharFnODE};
use super::AnalyticsError;

type C64 = Complex<f64>;

const PANEL: usize = 16;
const SHIFT: f64 = 0.5;
const SPAN: f64 = 14.0;
const LOG_DROP: f64 = 40.0;

/// Default total node count.
pub const DEFAULT_NODES: usize = 1600;

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

struct Target {
    h: Vec<f64>,
    dh: Vec<f64>,
    ddh: Vec<f64>,
    scale: f64,
}

fn horner(c: &[f64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &v| acc * z + v)
}

fn horner_re(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect()
}

impl Target {
    fn new(op: &SteinOperator) -> Self {
        let hp = op.target.h();
        let h: Vec<f64> = hp.dense_coeffs().iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        let dh = deriv(&h);
        let ddh = deriv(&dh);
        let crit = real_roots(&hp.derivative());
        let scale = crit.iter().map(|&z| horner_re(&ddh, z).abs()).fold(0.0, f64::max) * 0.25;
        Target { h, dh, ddh, scale: scale.max(1.0) }
    }

    /// Point on the contour and dz/dr.
    fn contour(&self, r: f64, t: f64) -> (C64, C64) {
        let eps = SHIFT * t.signum();
        if eps == 0.0 {
            return (C64::new(r, 0.0), C64::new(1.0, 0.0));
        }
        let u = horner_re(&self.dh, r) / self.scale;
        let th = u.tanh();
        let du = horner_re(&self.ddh, r) / self.scale;
        (C64::new(r, eps * th), C64::new(1.0, eps * (1.0 - th * th) * du))
    }

    /// log|Y^k e^{itY} φ(z) dz/dr| with φ the standard normal density.
    fn log_magnitude(&self, r: f64, t: f64, k: usize) -> f64 {
        let (z, dz) = self.contour(r, t);
        let y = horner(&self.h, z);
        let expo = C64::new(0.0, t) * y - z * z * 0.5;
        expo.re + k as f64 * y.norm().ln() + dz.norm().ln()
    }

    fn window(&self, t: f64, kmax: usize) -> (f64, f64) {
        let n = 2800;
        let grid: Vec<f64> = (0..=n).map(|i| -SPAN + 2.0 * SPAN * i as f64 / n as f64).collect();
        let logs: Vec<f64> = grid
            .iter()
            .map(|&r| {
                let a = self.log_magnitude(r, t, 0);
                let b = self.log_magnitude(r, t, kmax);
                if b.is_finite() {
                    a.max(b)
                } else {
                    a
                }
            })
            .collect();
        let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let keep: Vec<usize> = (0..=n).filter(|&i| logs[i] > peak - LOG_DROP).collect();
        let step = 2.0 * SPAN / n as f64;
        let lo = grid[*keep.first().unwrap_or(&0)] - step;
        let hi = grid[*keep.last().unwrap_or(&n)] + step;
        (lo.max(-SPAN), hi.min(SPAN))
    }

    /// E[Y^k e^{itY}] for k = 0..=kmax with `nodes` total nodes.
    fn moments(&self, t: f64, kmax: usize, nodes: usize, rule: &[(f64, f64)]) -> Vec<C64> {
        let (lo, hi) = self.window(t, kmax);
        let panels = nodes.div_ceil(PANEL).max(1);
        let width = (hi - lo) / panels as f64;
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = vec![C64::new(0.0, 0.0); kmax + 1];
        for p in 0..panels {
            let mid = lo + width * (p as f64 + 0.5);
            for &(x, w) in rule {
                let r = mid + 0.5 * width * x;
                let (z, dz) = self.contour(r, t);
                let y = horner(&self.h, z);
                let base = (C64::new(0.0, t) * y - z * z * 0.5).exp() * dz * (w * 0.5 * width * norm);
                let mut yk = C64::new(1.0, 0.0);
                for a in acc.iter_mut() {
                    *a += base * yk;
                    yk *= y;
                }
            }
        }
        acc
    }
}

/// Outcome of the numeric residual check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub samples: Vec<f64>,
    /// Residual per sample, normalized by the largest term magnitude.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Largest residual with twice as many nodes.
    pub max_residual_doubled: f64,
    /// False when doubling the nodes moved the residual by more than 10%.
    pub converged: bool,
}

fn residual_at(ode: &CharFnODE, target: &Target, t: f64, nodes: usize, rule: &[(f64, f64)]) -> f64 {
    let m = ode.coefficients.len() - 1;
    let mk = target.moments(t, m, nodes, rule);
    let tc = C64::new(t, 0.0);
    let mut total = C64::new(0.0, 0.0);
    let mut largest = 0.0f64;
    let mut ik = C64::new(1.0, 0.0);
    for (k, mom) in mk.iter().enumerate() {
        // φ^{(k)}(t) = i^k E[Y^k e^{itY}]
        let term = ode.eval_coefficient(k, tc) * ik * mom;
        total += term;
        largest = largest.max(term.norm());
        ik *= C64::new(0.0, 1.0);
    }
    if largest == 0.0 {
        0.0
    } else {
        total.norm() / largest
    }
}

/// Max normalized ODE residual of φ_Y over the samples.
pub fn charfn_residual(op: &SteinOperator, t_samples: &[f64], quad_nodes: usize) -> Result<ResidualReport, AnalyticsError> {
    if op.target.d() != 1 {
        return Err(AnalyticsError::Multivariate);
    }
    if quad_nodes < 50 {
        return Err(AnalyticsError::TooFewNodes(quad_nodes));
    }
    let ode = charfn_ode(op);
    let target = Target::new(op);
    let rule = gauss_legendre(PANEL);
    let residuals: Vec<f64> = t_samples.iter().map(|&t| residual_at(&ode, &target, t, quad_nodes, &rule)).collect();
    let doubled: Vec<f64> =
        t_samples.iter().map(|&t| residual_at(&ode, &target, t, 2 * quad_nodes, &rule)).collect();
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let max_residual_doubled = doubled.iter().cloned().fold(0.0, f64::max);
    // differences at rounding level are not a convergence signal
    let converged = residuals
        .iter()
        .zip(&doubled)
        .all(|(a, b)| (a - b).abs() <= 0.1 * b.max(*a) || (a - b).abs() <= 1e-10);
    Ok(ResidualReport { samples: t_samples.to_vec(), residuals, max_residual, max_residual_doubled, converged })
}

/// Evenly spaced samples on [a, b].
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Provenance;
    use crate::hermite::hermite;
    use crate::malliavin::TargetSpec;
    use crate::poly::Poly;

    fn op(p: usize, coeffs: &[&str]) -> SteinOperator {
        SteinOperator::new(
            TargetSpec::new(hermite(p)).unwrap(),
            coeffs.iter().map(|s| Poly::parse_y(s).unwrap()).collect(),
            Provenance::Fixture,
        )
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_legendre(16);
        let s: f64 = rule.iter().map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        let s: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_closed_form() {
        let o = op(1, &["y", "-1"]);
        let t = Target::new(&o);
        let rule = gauss_legendre(PANEL);
        for s in [0.5, 1.0, 2.0] {
            let m = t.moments(s, 0, DEFAULT_NODES, &rule);
            assert!((m[0].re - (-s * s / 2.0f64).exp()).abs() < 1e-13);
            assert!(m[0].im.abs() < 1e-13);
        }
        let r = charfn_residual(&o, &[0.5, 1.0, 2.0], DEFAULT_NODES).unwrap();
        assert!(r.max_residual < 1e-10);
    }

    #[test]
    fn h3_residual_and_corruption() {
        let o = op(3, &["5*y", "-3*y^2-12", "207*y", "351*y^2-1080", "81*y^3-324*y"]);
        let grid = linspace(0.1, 2.0, 20);
        let r = charfn_residual(&o, &grid, DEFAULT_NODES).unwrap();
        assert!(r.max_residual < 1e-6, "{}", r.max_residual);
        assert!(r.converged);
        let bad = op(3, &["6*y", "-3*y^2-12", "207*y", "351*y^2-1080", "81*y^3-324*y"]);
        let r = charfn_residual(&bad, &grid, DEFAULT_NODES).unwrap();
        assert!(r.max_residual > 1e-2, "{}", r.max_residual);
    }
}
