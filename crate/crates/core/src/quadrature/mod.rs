//! Deterministic adaptive quadrature.
//!
//! The one-dimensional engine is a globally adaptive 21-point
//! Gauss-Kronrod scheme (open rule, so integrable endpoint singularities
//! are never sampled). Nested integrals feed their inner error estimates
//! back into the outer panel errors, so a 3-D result reports the error of
//! every level. Panel nodes of the outermost level can be evaluated on the
//! rayon pool; values are collected in node order, which keeps results
//! bit-identical for any worker count.

mod polar;
mod qmc;

pub use polar::{
    a1_quadrature, a2_from_terms, a2_polar, inverse_rho_integrals, integrate_b_term,
    InverseRhoIntegrals, A2_PREFACTOR,
    PolarA2,
};
pub use qmc::{a2_cartesian_qmc, e_terms_qmc, QmcResult, QMC_REPLICATES};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Panel budget per axis.
    pub max_subdivisions: usize,
    /// Insert a breakpoint at `X = -1 + 1/lambda`.
    pub split_edge_layer: bool,
    pub qmc_samples: usize,
    pub qmc_seed: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_subdivisions: 2000,
            split_edge_layer: true,
            qmc_samples: 1 << 16,
            qmc_seed: 0,
        }
    }
}

impl QuadratureSpec {
    /// Defaults for the tensorized polar integrals.
    pub fn polar_default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-6,
            max_subdivisions: 400,
            ..Self::default()
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidSpec(format!("rel_tol = {} must be > 0", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidSpec(format!("abs_tol = {} must be >= 0", self.abs_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidSpec("max_subdivisions must be >= 1".into()));
        }
        if self.qmc_samples < 2 {
            return Err(Error::InvalidSpec("qmc_samples must be >= 2".into()));
        }
        Ok(())
    }

    pub(crate) fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: self.abs_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    pub converged: bool,
}

impl IntegralResult {
    pub fn zero() -> Self {
        IntegralResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    pub fn scale(self, factor: f64) -> Self {
        IntegralResult {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    fn target(&self, value: f64) -> f64 {
        (self.rel * value.abs()).max(self.abs)
    }

    /// Tolerance handed to the next integration level inwards.
    pub(crate) fn inner(&self) -> Tolerance {
        Tolerance {
            rel: self.rel / 4.0,
            abs: self.abs / 4.0,
        }
    }
}

/// Value of an integrand that may itself be an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Sample {
    pub value: f64,
    pub error: f64,
    pub evals: u64,
    pub converged: bool,
}

impl From<f64> for Sample {
    fn from(value: f64) -> Self {
        Sample {
            value,
            error: 0.0,
            evals: 1,
            converged: true,
        }
    }
}

impl From<IntegralResult> for Sample {
    fn from(r: IntegralResult) -> Self {
        Sample {
            value: r.value,
            error: r.error_estimate,
            evals: r.evaluations,
            converged: r.converged,
        }
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208745193930,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    evals: u64,
    converged: bool,
}

fn node_abscissae(a: f64, b: f64) -> [f64; 21] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [c; 21];
    for j in 0..10 {
        x[2 * j] = c - h * XGK[j];
        x[2 * j + 1] = c + h * XGK[j];
    }
    x
}

fn eval_panel<F>(f: &F, a: f64, b: f64, parallel: bool) -> Result<Panel>
where
    F: Fn(f64) -> Result<Sample> + Sync,
{
    let xs = node_abscissae(a, b);
    let samples: Vec<Sample> = if parallel {
        xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?
    } else {
        xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?
    };
    for (x, s) in xs.iter().zip(&samples) {
        if !s.value.is_finite() {
            return Err(Error::NonFinite { abscissa: *x });
        }
    }
    let h = 0.5 * (b - a);
    let fc = samples[20].value;
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut inner_err = samples[20].error * WGK[10];
    for j in 0..10 {
        let (f1, f2) = (samples[2 * j].value, samples[2 * j + 1].value);
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        inner_err += WGK[j] * (samples[2 * j].error + samples[2 * j + 1].error);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((samples[2 * j].value - mean).abs() + (samples[2 * j + 1].value - mean).abs());
    }
    let value = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel {
        a,
        b,
        value,
        error: err + inner_err * h.abs(),
        evals: samples.iter().map(|s| s.evals).sum(),
        converged: samples.iter().all(|s| s.converged),
    })
}

fn can_split(p: &Panel) -> bool {
    let mid = 0.5 * (p.a + p.b);
    let width = (p.b - p.a).abs();
    mid > p.a && mid < p.b && width > 64.0 * f64::EPSILON * p.a.abs().max(p.b.abs())
}

/// Globally adaptive integration over consecutive panels `points[i]..points[i+1]`.
pub(crate) fn adaptive<F>(
    f: &F,
    points: &[f64],
    tol: Tolerance,
    max_panels: usize,
    parallel: bool,
) -> Result<IntegralResult>
where
    F: Fn(f64) -> Result<Sample> + Sync,
{
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two integration points".into()));
    }
    for w in points.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "integration points must increase strictly: {} >= {}",
                w[0], w[1]
            )));
        }
    }
    let initial: Vec<(f64, f64)> = points.windows(2).map(|w| (w[0], w[1])).collect();
    let mut panels: Vec<Panel> = if parallel && initial.len() > 1 {
        initial
            .par_iter()
            .map(|&(a, b)| eval_panel(f, a, b, true))
            .collect::<Result<Vec<_>>>()?
    } else {
        initial
            .iter()
            .map(|&(a, b)| eval_panel(f, a, b, parallel))
            .collect::<Result<Vec<_>>>()?
    };
    let mut frozen = vec![false; panels.len()];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= tol.target(value) {
            break;
        }
        if panels.len() >= max_panels.max(points.len() - 1) {
            break;
        }
        // largest error first; ties resolved by position
        let mut worst: Option<usize> = None;
        for (i, p) in panels.iter().enumerate() {
            if frozen[i] {
                continue;
            }
            if worst.map_or(true, |w| p.error > panels[w].error) {
                worst = Some(i);
            }
        }
        let Some(i) = worst else { break };
        if !can_split(&panels[i]) {
            frozen[i] = true;
            continue;
        }
        let p = panels[i];
        let mid = 0.5 * (p.a + p.b);
        let (left, right) = if parallel {
            rayon::join(|| eval_panel(f, p.a, mid, true), || eval_panel(f, mid, p.b, true))
        } else {
            (eval_panel(f, p.a, mid, false), eval_panel(f, mid, p.b, false))
        };
        let (left, right) = (left?, right?);
        panels[i] = left;
        panels.insert(i + 1, right);
        frozen.insert(i + 1, false);
    }
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    let inner_ok = panels.iter().all(|p| p.converged);
    Ok(IntegralResult {
        value,
        error_estimate: error,
        evaluations: panels.iter().map(|p| p.evals).sum(),
        converged: inner_ok && error <= tol.target(value),
    })
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    if a == b {
        return Ok(IntegralResult::zero());
    }
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("need a < b, got a = {a}, b = {b}")));
    }
    integrate_1d_with_breaks(f, &[a, b], spec)
}

/// Adaptive integral over `points[0]..points[last]` with the interior points
/// as fixed panel boundaries. Repeated points are dropped.
pub fn integrate_1d_with_breaks<F>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let mut pts: Vec<f64> = points.to_vec();
    pts.dedup();
    if pts.len() < 2 {
        return Ok(IntegralResult::zero());
    }
    adaptive(&|x| Ok(Sample::from(f(x))), &pts, spec.tolerance(), spec.max_subdivisions, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact_on_one_panel() {
        let r = integrate_1d(|x| x * x, 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(r.evaluations, 21);
        assert!(r.converged);
    }

    #[test]
    fn inverse_sqrt_endpoint() {
        let spec = QuadratureSpec::default();
        let r = integrate_1d(|x| 1.0 / x.sqrt(), 0.0, 1.0, &spec).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0).abs() <= 1e-8 * 2.0);
        assert!((r.value - 2.0).abs() <= 3.0 * r.error_estimate);
    }

    #[test]
    fn radial_log_integral() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-12);
        for &(lam, kap) in &[(10.0, 0.0), (1e4, 3.0), (1e6, 0.0)] {
            let r = integrate_1d(|r| 2.0 / (r + 2.0), kap, lam, &spec).unwrap();
            let exact = 2.0 * ((lam + 2.0) / (kap + 2.0)).ln();
            assert!(((r.value - exact) / exact).abs() < 1e-10, "{lam}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn non_finite_sample_names_abscissa() {
        let e = integrate_1d(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, &QuadratureSpec::default())
            .unwrap_err();
        match e {
            Error::NonFinite { abscissa } => assert!(abscissa > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let spec = QuadratureSpec {
            rel_tol: 1e-14,
            max_subdivisions: 3,
            ..QuadratureSpec::default()
        };
        let r = integrate_1d(|x| (1.0 / x).sin() / x.sqrt(), 1e-3, 1.0, &spec).unwrap();
        assert!(!r.converged);
        assert!(r.value.is_finite());
    }

    #[test]
    fn empty_range_is_zero() {
        let r = integrate_1d(|x| x, 2.0, 2.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(r, IntegralResult::zero());
        assert!(integrate_1d(|x| x, 2.0, 1.0, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn spec_validation() {
        let bad = QuadratureSpec { rel_tol: 0.0, ..QuadratureSpec::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec { qmc_samples: 1, ..QuadratureSpec::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec { max_subdivisions: 0, ..QuadratureSpec::default() };
        assert!(bad.validate().is_err());
    }
}
