//! Tensorized polar integrals over `X` (outermost), `r1`, `r2`.
//!
//! Axis maps:
//! - `X = -1 + u^2`, `u in [0, sqrt 2]`, so `1 + X` is exact near `X = -1`
//!   and the `(1 + X)^{-1/2}` growth of the ridge contribution is smoothed;
//! - `r = kappa + (kappa + 2) expm1(t)`, `dr = (r + 2) dt`, which flattens the
//!   `2/(r + 2)` radial profile.
//!
//! The inner `r2` axis is split at `r2 = -r1 X - 1`, where the pair
//! denominator is smallest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{adaptive, IntegralResult, QuadratureSpec, Sample, Tolerance};
use crate::error::{Error, Result};
use crate::integrands::{b_kernel_fast, shell_weight, TermId};
use crate::kernels::{self, CutoffWindow};

#[inline]
fn r_of_t(t: f64, w: &CutoffWindow) -> f64 {
    w.kappa + (w.kappa + 2.0) * t.exp_m1()
}

#[inline]
fn t_of_r(r: f64, w: &CutoffWindow) -> f64 {
    ((r - w.kappa) / (w.kappa + 2.0)).ln_1p()
}

fn scaled(s: Sample, factor: f64) -> Sample {
    Sample {
        value: s.value * factor,
        error: s.error * factor.abs(),
        ..s
    }
}

fn angular_points(w: &CutoffWindow, spec: &QuadratureSpec) -> Vec<f64> {
    let mut pts = vec![0.0];
    if spec.split_edge_layer && w.lambda > 1.0 {
        pts.push(1.0 / w.lambda.sqrt());
    }
    pts.push(1.0);
    pts.push(2f64.sqrt());
    pts
}

/// Integral of `kernel(r1, r2, X, 1 + X)` over the cube
/// `[-1, 1] x [kappa, lambda]^2`.
pub(crate) fn integrate_polar<K>(kernel: &K, w: &CutoffWindow, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    K: Fn(f64, f64, f64, f64) -> f64 + Sync,
{
    w.validate()?;
    spec.validate()?;
    if w.is_empty() {
        return Ok(IntegralResult::zero());
    }
    let tol = spec.tolerance();
    let mid_tol = tol.inner();
    let in_tol = mid_tol.inner();
    let t_max = w.log_ratio();
    let max = spec.max_subdivisions;

    let inner = |x: f64, opx: f64, r1: f64| -> Result<Sample> {
        let ridge = -r1 * x - 1.0;
        let mut pts = vec![0.0];
        if ridge > w.kappa && ridge < w.lambda {
            let t = t_of_r(ridge, w);
            if t > 0.0 && t < t_max {
                pts.push(t);
            }
        }
        pts.push(t_max);
        let f = |t2: f64| {
            let r2 = r_of_t(t2, w);
            Ok(Sample::from(kernel(r1, r2, x, opx) * (r2 + 2.0)))
        };
        adaptive(&f, &pts, in_tol, max, false).map(Sample::from)
    };
    let middle = |x: f64, opx: f64| -> Result<Sample> {
        let f = |t1: f64| {
            let r1 = r_of_t(t1, w);
            inner(x, opx, r1).map(|s| scaled(s, r1 + 2.0))
        };
        adaptive(&f, &[0.0, t_max], mid_tol, max, false).map(Sample::from)
    };
    let outer = |u: f64| -> Result<Sample> {
        let opx = u * u;
        middle(opx - 1.0, opx).map(|s| scaled(s, 2.0 * u))
    };
    adaptive(&outer, &angular_points(w, spec), tol, max, true)
}

/// `b_j(lambda, kappa)` by tensorized adaptive quadrature.
pub fn integrate_b_term(term: TermId, w: &CutoffWindow, spec: &QuadratureSpec) -> Result<IntegralResult> {
    if !term.is_b() {
        return Err(Error::WrongTerm(term.name()));
    }
    integrate_polar(&|r1, r2, x, opx| b_kernel_fast(term, r1, r2, x, opx), w, spec)
}

/// Prefactor `(4 pi)^2 / (2 pi)^6 * 2/3` relating `sum b_j` to `a2`.
pub const A2_PREFACTOR: f64 = 16.0 * PI * PI / (64.0 * PI * PI * PI * PI * PI * PI) * 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarA2 {
    pub a2: IntegralResult,
    /// `b1..b6`
    pub terms: [IntegralResult; 6],
}

pub fn a2_from_terms(terms: &[IntegralResult; 6]) -> IntegralResult {
    let sum: f64 = terms.iter().map(|t| t.value).sum();
    let err = terms.iter().map(|t| t.error_estimate.powi(2)).sum::<f64>().sqrt();
    IntegralResult {
        value: A2_PREFACTOR * sum,
        error_estimate: A2_PREFACTOR * err,
        evaluations: terms.iter().map(|t| t.evaluations).sum(),
        converged: terms.iter().all(|t| t.converged),
    }
}

/// Second-order coefficient `a2 = (4 pi)^2/(2 pi)^6 (2/3) sum_j b_j`.
pub fn a2_polar(w: &CutoffWindow, spec: &QuadratureSpec) -> Result<PolarA2> {
    let mut terms = [IntegralResult::zero(); 6];
    for (slot, term) in terms.iter_mut().zip(TermId::B_TERMS) {
        *slot = integrate_b_term(term, w, spec)?;
    }
    Ok(PolarA2 {
        a2: a2_from_terms(&terms),
        terms,
    })
}

/// `a1` from the radial integral of its defining expression
/// `(2/3) (4 pi) 2 int d^3k phi^2/(2 omega) 1/(k^2/2 + k)`.
pub fn a1_quadrature(w: &CutoffWindow, spec: &QuadratureSpec) -> Result<IntegralResult> {
    w.validate()?;
    let pref = 2.0 / 3.0 * 4.0 * PI * 2.0 * 4.0 * PI;
    let f = |r: f64| pref * r * r * shell_weight(r) * kernels::single_denominator(r);
    super::integrate_1d(f, w.kappa, w.lambda, spec)
}

/// Scaled integrals of inverse powers of `rho` over `X in [-1, 1]`,
/// `r in [0, lambda]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseRhoIntegrals {
    pub lambda: f64,
    /// `lambda I1`, `lambda^{5/2} I2`, `lambda^2/log(lambda) I3`, `lambda^3 I4`
    pub scaled: [f64; 4],
    /// `I1..I4`
    pub integrals: [IntegralResult; 4],
}

fn integrate_rho_2d<G>(g: &G, lambda: f64, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    G: Fn(f64, f64, f64) -> f64 + Sync,
{
    let tol: Tolerance = spec.tolerance();
    let in_tol = tol.inner();
    let max = spec.max_subdivisions;
    let w = CutoffWindow { lambda, kappa: 0.0 };
    let outer = |u: f64| -> Result<Sample> {
        let opx = u * u;
        let x = opx - 1.0;
        let d = kernels::delta(x, lambda);
        let vertex = -lambda * x - 1.0;
        let mut pts = vec![0.0, lambda];
        if d > 0.0 {
            let s = d.sqrt();
            for p in [vertex - s, vertex, vertex + s] {
                if p > 0.0 && p < lambda {
                    pts.push(p);
                }
            }
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        let f = |r: f64| {
            let rho = kernels::rho_and_delta(r, x, lambda).0;
            Ok(Sample::from(g(r, x, rho)))
        };
        adaptive(&f, &pts, in_tol, max, false).map(|r| scaled(Sample::from(r), 2.0 * u))
    };
    adaptive(&outer, &angular_points(&w, spec), tol, max, true)
}

pub fn inverse_rho_integrals(lambda: f64, spec: &QuadratureSpec) -> Result<InverseRhoIntegrals> {
    if !(lambda >= 4.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("inverse-rho integrals need lambda >= 4, got {lambda}")));
    }
    spec.validate()?;
    let i1 = integrate_rho_2d(&|_, _, rho| 1.0 / rho, lambda, spec)?;
    let i2 = integrate_rho_2d(&|_, _, rho| 1.0 / (rho * rho), lambda, spec)?;
    let i3 = integrate_rho_2d(&|r, _, rho| 1.0 / (rho * (r + 2.0)), lambda, spec)?;
    let i4 = integrate_rho_2d(&|_, x: f64, rho| (1.0 - x) * (1.0 + x) / (rho * rho), lambda, spec)?;
    let scaled = [
        lambda * i1.value,
        lambda.powf(2.5) * i2.value,
        lambda * lambda / lambda.ln() * i3.value,
        lambda.powi(3) * i4.value,
    ];
    Ok(InverseRhoIntegrals {
        lambda,
        scaled,
        integrals: [i1, i2, i3, i4],
    })
}
