//! Integrands of the second-order coefficient: the six polar kernels
//! `b1..b6`, the five Cartesian matrix-element terms `E1..E5`, the
//! residuals `t1..t3` of the lower-bound argument for `b2`, and the
//! auxiliary functions `a_Lambda`, `b_Lambda`, `K`, `T_R`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernels::{
    self, projector_contractions_matrix, CartesianPair, Contractions, CutoffWindow, PolarPoint,
};
use crate::quadrature::{integrate_1d_with_breaks, IntegralResult, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermId {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    E1,
    E2,
    E3,
    E4,
    E5,
    T1res,
    T2res,
    T3res,
}

impl TermId {
    pub const B_TERMS: [TermId; 6] = [
        TermId::B1,
        TermId::B2,
        TermId::B3,
        TermId::B4,
        TermId::B5,
        TermId::B6,
    ];
    pub const E_TERMS: [TermId; 5] = [TermId::E1, TermId::E2, TermId::E3, TermId::E4, TermId::E5];
    pub const T_TERMS: [TermId; 3] = [TermId::T1res, TermId::T2res, TermId::T3res];

    pub fn name(self) -> &'static str {
        match self {
            TermId::B1 => "b1",
            TermId::B2 => "b2",
            TermId::B3 => "b3",
            TermId::B4 => "b4",
            TermId::B5 => "b5",
            TermId::B6 => "b6",
            TermId::E1 => "E1",
            TermId::E2 => "E2",
            TermId::E3 => "E3",
            TermId::E4 => "E4",
            TermId::E5 => "E5",
            TermId::T1res => "t1",
            TermId::T2res => "t2",
            TermId::T3res => "t3",
        }
    }

    /// `b1..b6` from an index in `1..=6`.
    pub fn b(index: usize) -> Option<TermId> {
        index.checked_sub(1).and_then(|i| Self::B_TERMS.get(i).copied())
    }

    pub fn is_b(self) -> bool {
        Self::B_TERMS.contains(&self)
    }

    pub fn is_e(self) -> bool {
        Self::E_TERMS.contains(&self)
    }

    pub fn is_t(self) -> bool {
        Self::T_TERMS.contains(&self)
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Polar kernel with the cosine supplied twice: as `x` and as `opx = 1 + x`.
/// Near `X = -1` the caller usually knows `1 + X` to full relative
/// precision, which the quadratic form `r1^2 + 2 r1 r2 X + r2^2` needs.
#[inline]
pub(crate) fn b_kernel_fast(term: TermId, r1: f64, r2: f64, x: f64, opx: f64) -> f64 {
    // r L(r) = 2 / (r + 2), finite at r = 0
    let rl1 = 2.0 / (r1 + 2.0);
    let rl2 = 2.0 / (r2 + 2.0);
    let diff = r1 - r2;
    let quad = diff * diff + 2.0 * r1 * r2 * opx;
    let f12 = 1.0 / (0.5 * quad + r1 + r2);
    let omx = 1.0 - x;
    let one_plus_x2 = 1.0 + x * x;
    let odd = -x * omx * opx; // X(-1 + X^2)
    match term {
        TermId::B1 => -PI * (r2 * rl1 + r1 * rl2) * f12 * one_plus_x2,
        TermId::B2 => PI * r1 * r2 * f12 * f12 * f12 * 0.5 * quad * one_plus_x2,
        TermId::B3 => PI * r1 * r2 * (r2 * rl1 + r1 * rl2) * f12 * f12 * odd,
        TermId::B4 => -PI * rl1 * rl2 * one_plus_x2,
        TermId::B5 => PI * r1 * r2 * (rl1 * rl1 + rl2 * rl2) * f12 * omx * opx,
        TermId::B6 => PI * r1 * r2 * rl1 * rl2 * f12 * odd,
        _ => 0.0,
    }
}

/// Full integrand of `b_j` at a polar point, measure weight included.
pub fn b_kernel(term: TermId, p: &PolarPoint) -> Result<f64> {
    if !term.is_b() {
        return Err(Error::WrongTerm(term.name()));
    }
    if !(p.r1 >= 0.0 && p.r2 >= 0.0 && (-1.0..=1.0).contains(&p.x)) {
        return Err(Error::Domain(format!("{p:?}")));
    }
    if p.r1 == 0.0 && p.r2 == 0.0 {
        return Err(Error::DegeneratePoint);
    }
    Ok(b_kernel_fast(term, p.r1, p.r2, p.x, 1.0 + p.x))
}

/// Weight `phi^2 / (2 omega)` with the sharp form factor `(2 pi)^{-3}` on the
/// shell.
#[inline]
pub fn shell_weight(k: f64) -> f64 {
    1.0 / ((2.0 * PI).powi(3) * 2.0 * k)
}

#[inline]
pub(crate) fn e_kernel_from_parts(
    term: TermId,
    n1: f64,
    n2: f64,
    sum_sq: f64,
    c: &Contractions,
) -> f64 {
    let w = shell_weight(n1) * shell_weight(n2);
    let e1 = kernels::single_denominator(n1);
    let e2 = kernels::single_denominator(n2);
    let e12 = 1.0 / (0.5 * sum_sq + n1 + n2);
    let bracket = match term {
        TermId::E1 => -e12 * (e1 + e2) * c.tr_qq,
        TermId::E2 => 0.25 * e12 * e12 * e12 * sum_sq * 2.0 * c.tr_qq,
        TermId::E3 => e12 * e12 * (e1 + e2) * c.bilinear_qq,
        TermId::E4 => -e1 * e2 * c.tr_qq,
        TermId::E5 => e12 * (e1 * e1 * c.quad1 + e2 * e2 * c.quad2 + e1 * e2 * c.bilinear_qq),
        _ => 0.0,
    };
    w * bracket
}

/// Cartesian matrix-element term `E_j` times the two shell weights, with the
/// projector contractions evaluated by explicit matrix algebra.
pub fn e_term_kernel(term: TermId, c: &CartesianPair, w: &CutoffWindow) -> Result<f64> {
    if !term.is_e() {
        return Err(Error::WrongTerm(term.name()));
    }
    let n1 = kernels::norm(&c.k1);
    let n2 = kernels::norm(&c.k2);
    for n in [n1, n2] {
        if !(n >= w.kappa && n <= w.lambda) {
            return Err(Error::Domain(format!(
                "|k| = {n} outside shell [{}, {}]",
                w.kappa, w.lambda
            )));
        }
    }
    let contr = projector_contractions_matrix(c)?;
    let s = [c.k1[0] + c.k2[0], c.k1[1] + c.k2[1], c.k1[2] + c.k2[2]];
    Ok(e_kernel_from_parts(term, n1, n2, kernels::dot(&s, &s), &contr))
}

/// Radial integrals of inverse powers of `rho` over `[kappa, lambda]` at a
/// fixed cosine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoMoments {
    /// `int dr 1/rho^2`
    pub inv2: f64,
    /// `int dr 1/rho^3`
    pub inv3: f64,
    /// `int dr r/rho^3`
    pub r_inv3: f64,
}

fn check_delta(x: f64, w: &CutoffWindow) -> Result<f64> {
    let d = kernels::delta(x, w.lambda);
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::DeltaNonPositive {
            x,
            lambda: w.lambda,
            delta: d,
        })
    }
}

/// `[f]_{r=kappa}^{r=lambda}`
fn boundary(w: &CutoffWindow, f: impl Fn(f64) -> f64) -> f64 {
    f(w.lambda) - f(w.kappa)
}

/// Closed-form radial moments from the arctan reduction formula.
pub fn rho_moments_closed(x: f64, w: &CutoffWindow) -> Result<RhoMoments> {
    let d = check_delta(x, w)?;
    let lam = w.lambda;
    let sd = d.sqrt();
    let shift = lam * x + 1.0;
    let rho = |r: f64| kernels::rho_and_delta(r, x, lam).0;
    let atan = boundary(w, |r| ((r + shift) / sd).atan());
    let inv2 = boundary(w, |r| (r + shift) / (2.0 * d * rho(r))) + atan / (2.0 * d * sd);
    let inv3 = boundary(w, |r| {
        let q = rho(r);
        (r + shift) / (4.0 * d * q * q) + 3.0 * (r + shift) / (8.0 * d * d * q)
    }) + 3.0 / (8.0 * d * d * sd) * atan;
    let r_inv3 = -0.25 * boundary(w, |r| 1.0 / (rho(r) * rho(r))) - shift * inv3;
    Ok(RhoMoments { inv2, inv3, r_inv3 })
}

fn rho_breaks(x: f64, w: &CutoffWindow) -> Vec<f64> {
    let mut pts = vec![w.kappa];
    let vertex = -w.lambda * x - 1.0;
    if vertex > w.kappa && vertex < w.lambda {
        pts.push(vertex);
    }
    pts.push(w.lambda);
    pts
}

/// Radial moments by adaptive quadrature, split at the minimum of `rho`.
pub fn rho_moments_numeric(
    x: f64,
    w: &CutoffWindow,
    spec: &QuadratureSpec,
) -> Result<(RhoMoments, [IntegralResult; 3])> {
    check_delta(x, w)?;
    let lam = w.lambda;
    let pts = rho_breaks(x, w);
    let rho = move |r: f64| kernels::rho_and_delta(r, x, lam).0;
    let i2 = integrate_1d_with_breaks(|r| rho(r).powi(-2), &pts, spec)?;
    let i3 = integrate_1d_with_breaks(|r| rho(r).powi(-3), &pts, spec)?;
    let j3 = integrate_1d_with_breaks(|r| r * rho(r).powi(-3), &pts, spec)?;
    Ok((
        RhoMoments {
            inv2: i2.value,
            inv3: i3.value,
            r_inv3: j3.value,
        },
        [i2, i3, j3],
    ))
}

/// How `residual_t` evaluates the radial integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadialPath {
    #[default]
    Quadrature,
    ClosedForm,
}

fn residual_from_moments(term: TermId, x: f64, w: &CutoffWindow, m: &RhoMoments) -> f64 {
    let lam = w.lambda;
    let d = kernels::delta(x, lam);
    let rho = |r: f64| kernels::rho_and_delta(r, x, lam).0;
    match term {
        TermId::T1res => -2.0 * lam * m.inv2 + 4.0 * lam * m.r_inv3 + 2.0 * lam * lam * m.inv3,
        TermId::T2res => -0.5 * lam * boundary(w, |r| 1.0 / rho(r)) - lam * m.inv2,
        TermId::T3res => {
            let shift = lam * x + 1.0;
            lam.powi(3)
                * 2.0
                * (2.0 * x + 1.0)
                * (1.0 - x)
                * boundary(w, |r| (r + shift) / (4.0 * d) / (rho(r) * rho(r)))
        }
        _ => unreachable!(),
    }
}

fn check_residual_domain(x: f64, w: &CutoffWindow) -> Result<()> {
    w.validate()?;
    let lo = -1.0 + 1.0 / w.lambda;
    if !(x >= lo && x <= 0.0) {
        return Err(Error::Domain(format!(
            "X = {x} outside [{lo}, 0] for residual terms"
        )));
    }
    check_delta(x, w).map(|_| ())
}

/// Residual `t_j` of the lower-bound decomposition of `d b2 / d lambda` at a
/// fixed cosine.
pub fn residual_t(
    term: TermId,
    x: f64,
    w: &CutoffWindow,
    spec: &QuadratureSpec,
    path: RadialPath,
) -> Result<f64> {
    if !term.is_t() {
        return Err(Error::WrongTerm(term.name()));
    }
    check_residual_domain(x, w)?;
    let m = match path {
        RadialPath::Quadrature => rho_moments_numeric(x, w, spec)?.0,
        RadialPath::ClosedForm => rho_moments_closed(x, w)?,
    };
    Ok(residual_from_moments(term, x, w, &m))
}

/// `t1 + t2 + t3` sharing one set of radial moments.
pub fn residual_sum(
    x: f64,
    w: &CutoffWindow,
    spec: &QuadratureSpec,
    path: RadialPath,
) -> Result<(f64, f64)> {
    check_residual_domain(x, w)?;
    let (m, err) = match path {
        RadialPath::Quadrature => {
            let (m, r) = rho_moments_numeric(x, w, spec)?;
            let lam = w.lambda;
            let err = 2.0 * lam * r[0].error_estimate
                + 4.0 * lam * r[2].error_estimate
                + 2.0 * lam * lam * r[1].error_estimate
                + lam * r[0].error_estimate;
            (m, err)
        }
        RadialPath::ClosedForm => (rho_moments_closed(x, w)?, 0.0),
    };
    let total = TermId::T_TERMS
        .iter()
        .map(|&t| residual_from_moments(t, x, w, &m))
        .sum();
    Ok((total, err))
}

/// `T_R(r) = rho^{-3} (r^2 + 2 r lambda X + lambda^2) r lambda`, the integrand
/// of `d b2 / d lambda` without its angular weight.
pub fn t_r(r: f64, x: f64, lambda: f64) -> f64 {
    let (rho, _) = kernels::rho_and_delta(r, x, lambda);
    let quad = r * r + 2.0 * r * lambda * x + lambda * lambda;
    quad * r * lambda / (rho * rho * rho)
}

/// Denominator of `b_Lambda` and its natural scale.
fn b_lambda_denominator(y: f64, lambda: f64) -> (f64, f64) {
    let scale = (2.0 * lambda + 3.0) * (2.0 * lambda - 1.0) / (4.0 * lambda * lambda);
    let s = y - 0.5 / lambda;
    (s * s - scale, scale)
}

pub const POLE_TOLERANCE: f64 = 1e-6;

/// `b_Lambda(y)`; fails near its real poles (just above `y = 1`).
pub fn b_lambda(y: f64, lambda: f64) -> Result<f64> {
    let (den, scale) = b_lambda_denominator(y, lambda);
    if den.abs() < POLE_TOLERANCE * scale {
        return Err(Error::NearPole { y, denominator: den });
    }
    let num = (3.0 / lambda) * (1.0 + 2.0 / lambda) * (y + (2.0 * lambda + 3.0) / (2.0 * lambda + 4.0));
    Ok(num / den)
}

pub fn a_lambda(y: f64, lambda: f64) -> Result<f64> {
    Ok(2.0 * y + 6.0 / lambda + b_lambda(y, lambda)?)
}

/// The polynomial `K(y; lambda, kappa)` whose positivity makes the boundary
/// bracket in the lower-bound argument nonnegative.
pub fn k_poly(y: f64, lambda: f64, kappa: f64) -> f64 {
    let l = lambda;
    (-2.0 * y * y + y + 1.0) * l.powi(3) + (1.0 + 4.0 * y) * l * l - 2.0 * l
        + kappa * ((y * y - 2.0) * l * l + (-2.0 * y - 2.0) * l + 1.0)
        + kappa * kappa * ((1.0 - y) * l + 1.0)
}

/// Values of the lower-bound helper functions at one `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundValues {
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub k_poly: f64,
}

pub fn lower_bound_functions(y: f64, w: &CutoffWindow) -> Result<LowerBoundValues> {
    w.validate()?;
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("y = {y} outside [0, 1]")));
    }
    let b = b_lambda(y, w.lambda)?;
    Ok(LowerBoundValues {
        a_lambda: 2.0 * y + 6.0 / w.lambda + b,
        b_lambda: b,
        k_poly: k_poly(y, w.lambda, w.kappa),
    })
}

/// Outcome of sampling `T_R` on an `(r, X)` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport {
    pub samples: usize,
    pub min_value: f64,
    pub violations: usize,
}

impl PositivityReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `T_R` on `nr x nx` points covering `r in [kappa, lambda]`,
/// `X in [-1 + 1/lambda, 0]`.
pub fn t_r_positivity(w: &CutoffWindow, nr: usize, nx: usize) -> PositivityReport {
    let lo = -1.0 + 1.0 / w.lambda;
    let mut min_value = f64::INFINITY;
    let mut violations = 0;
    for i in 0..nx {
        let x = if nx == 1 { lo } else { lo + (0.0 - lo) * i as f64 / (nx - 1) as f64 };
        for j in 0..nr {
            let r = if nr == 1 {
                w.kappa
            } else {
                w.kappa + (w.lambda - w.kappa) * j as f64 / (nr - 1) as f64
            };
            let v = t_r(r, x, w.lambda);
            min_value = min_value.min(v);
            if !(v >= 0.0) {
                violations += 1;
            }
        }
    }
    PositivityReport {
        samples: nr * nx,
        min_value,
        violations,
    }
}

/// The arctan bracket `[arctan((r - lambda y + 1)/sqrt(Delta))]_{kappa}^{lambda}`
/// at `X = -y`.
pub fn arctan_bracket(y: f64, lambda: f64, kappa: f64) -> f64 {
    let d = kernels::delta(-y, lambda);
    let sd = d.sqrt();
    (((1.0 - y) * lambda + 1.0) / sd).atan() - ((kappa - lambda * y + 1.0) / sd).atan()
}

/// Grid estimate of `inf_{lambda >= lambda_min} inf_{0 <= y <= 1}` of the
/// arctan bracket on a geometric grid up to `1e8`. Returns
/// `(infimum, lambda_at, y_at)`. For `kappa > 0` the bracket closes as
/// `lambda -> kappa`, so `lambda_min` must stay clear of `kappa`.
pub fn estimate_arctan_infimum(kappa: f64, lambda_min: f64, n_lambda: usize, n_y: usize) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, f64::NAN, f64::NAN);
    let lo = lambda_min.max(1.0);
    let span = (1e8 / lo).ln().max(0.0);
    for i in 0..=n_lambda {
        let lambda = lo * (span * i as f64 / n_lambda.max(1) as f64).exp();
        if lambda <= kappa {
            continue;
        }
        for j in 0..=n_y {
            let y = j as f64 / n_y as f64;
            let v = arctan_bracket(y, lambda, kappa);
            if v < best.0 {
                best = (v, lambda, y);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pp(r1: f64, r2: f64, x: f64) -> PolarPoint {
        PolarPoint::new(r1, r2, x).unwrap()
    }

    #[test]
    fn b4_kernel_value() {
        assert_relative_eq!(b_kernel(TermId::B4, &pp(2.0, 2.0, 0.0)).unwrap(), -PI / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn angular_zeros() {
        for &(r1, r2) in &[(0.3, 4.0), (10.0, 10.0), (2.0, 7.5)] {
            assert_eq!(b_kernel(TermId::B3, &pp(r1, r2, 0.0)).unwrap(), 0.0);
            assert_eq!(b_kernel(TermId::B6, &pp(r1, r2, 0.0)).unwrap(), 0.0);
            assert_eq!(b_kernel(TermId::B5, &pp(r1, r2, 1.0)).unwrap(), 0.0);
            assert_eq!(b_kernel(TermId::B5, &pp(r1, r2, -1.0)).unwrap(), 0.0);
        }
    }

    #[test]
    fn kernel_domain_errors() {
        assert!(matches!(b_kernel(TermId::E1, &pp(1.0, 1.0, 0.0)), Err(Error::WrongTerm(_))));
        assert_eq!(b_kernel(TermId::B1, &pp(0.0, 0.0, 0.0)), Err(Error::DegeneratePoint));
        let bad = PolarPoint { r1: 1.0, r2: 1.0, x: 1.2 };
        assert!(matches!(b_kernel(TermId::B1, &bad), Err(Error::Domain(_))));
    }

    #[test]
    fn sign_structure() {
        let mut s: u64 = 0x2545F4914F6CDD1D;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10_000 {
            let p = pp(1e3 * next(), 1e3 * next(), 2.0 * next() - 1.0);
            assert!(b_kernel(TermId::B4, &p).unwrap() <= 0.0);
            assert!(b_kernel(TermId::B2, &p).unwrap() >= 0.0);
            assert!(b_kernel(TermId::B1, &p).unwrap() <= 0.0);
            assert!(b_kernel(TermId::B5, &p).unwrap() >= 0.0);
        }
    }

    #[test]
    fn kernel_matches_direct_transcription() {
        // direct transcription with L_j and F12 from the kernels module
        let p = pp(1.7, 3.2, -0.35);
        let d = kernels::polar_denominators(&p).unwrap();
        let (r1, r2, x) = (p.r1, p.r2, p.x);
        let q = r1 * r1 + 2.0 * r1 * r2 * x + r2 * r2;
        let expect = [
            -PI * r1 * r2 * (d.l1 + d.l2) * d.f12_inv * (1.0 + x * x),
            PI * r1 * r2 * d.f12_inv.powi(3) * q / 2.0 * (1.0 + x * x),
            PI * r1 * r1 * r2 * r2 * (d.l1 + d.l2) * d.f12_inv.powi(2) * x * (x * x - 1.0),
            -PI * r1 * r2 * d.l1 * d.l2 * (1.0 + x * x),
            PI * r1 * r2 * (r1 * r1 * d.l1 * d.l1 + r2 * r2 * d.l2 * d.l2) * d.f12_inv * (1.0 - x * x),
            PI * r1 * r1 * r2 * r2 * d.l1 * d.l2 * d.f12_inv * x * (x * x - 1.0),
        ];
        for (t, e) in TermId::B_TERMS.iter().zip(expect) {
            assert_relative_eq!(b_kernel(*t, &p).unwrap(), e, max_relative = 1e-13);
        }
    }

    #[test]
    fn e_terms_examples() {
        let w = CutoffWindow::new(10.0, 0.0).unwrap();
        let perp = CartesianPair { k1: [1.0, 0.0, 0.0], k2: [0.0, 2.0, 0.0] };
        assert_eq!(e_term_kernel(TermId::E3, &perp, &w).unwrap(), 0.0);
        let unit = CartesianPair { k1: [1.0, 0.0, 0.0], k2: [0.0, 1.0, 0.0] };
        let expect = -(1.0 / (2.0 * (2.0 * PI).powi(3))).powi(2) * (1.0 / 1.5f64).powi(2);
        assert_relative_eq!(e_term_kernel(TermId::E4, &unit, &w).unwrap(), expect, max_relative = 1e-14);
        let outside = CartesianPair { k1: [11.0, 0.0, 0.0], k2: [0.0, 1.0, 0.0] };
        assert!(matches!(e_term_kernel(TermId::E1, &outside, &w), Err(Error::Domain(_))));
    }

    #[test]
    fn e_terms_sum_to_braces() {
        // braces of the six-dimensional representation, written with the
        // closed trace identities in s
        let w = CutoffWindow::new(50.0, 0.5).unwrap();
        let mut s: u64 = 99;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let mut v = || {
                let r = 0.5 + 49.5 * next();
                let ct = 2.0 * next() - 1.0;
                let ph = 2.0 * PI * next();
                let st = (1.0 - ct * ct).sqrt();
                [r * st * ph.cos(), r * st * ph.sin(), r * ct]
            };
            let pair = CartesianPair { k1: v(), k2: v() };
            let (k1, k2) = (pair.k1, pair.k2);
            let n1 = kernels::norm(&k1);
            let n2 = kernels::norm(&k2);
            let k1k2 = kernels::dot(&k1, &k2);
            let s = k1k2 / (n1 * n2);
            let e1 = 1.0 / (n1 * n1 / 2.0 + n1);
            let e2 = 1.0 / (n2 * n2 / 2.0 + n2);
            let sum = [k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2]];
            let ss = kernels::dot(&sum, &sum);
            let e12 = 1.0 / (ss / 2.0 + n1 + n2);
            let braces = -(e1 + e2) * e12 * (1.0 + s * s)
                + e12.powi(3) * ss / 2.0 * (1.0 + s * s)
                + (e1 + e2) * e12 * e12 * k1k2 * (s * s - 1.0)
                - e1 * e2 * (1.0 + s * s)
                + (n1 * n1 * e1 * e1 + n2 * n2 * e2 * e2) * e12 * (1.0 - s * s)
                + e1 * e2 * e12 * k1k2 * (s * s - 1.0);
            let expect = shell_weight(n1) * shell_weight(n2) * braces;
            let got: f64 = TermId::E_TERMS
                .iter()
                .map(|&t| e_term_kernel(t, &pair, &w).unwrap())
                .sum();
            let scale = shell_weight(n1) * shell_weight(n2) * (e1 + e2) * e12 * 4.0;
            assert!((got - expect).abs() <= 1e-10 * scale, "{got} vs {expect}");
        }
    }

    #[test]
    fn t3_vanishes_at_minus_half() {
        let w = CutoffWindow::new(1e3, 0.0).unwrap();
        let spec = QuadratureSpec::default();
        let v = residual_t(TermId::T3res, -0.5, &w, &spec, RadialPath::Quadrature).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn residual_domain() {
        let w = CutoffWindow::new(1e3, 0.0).unwrap();
        let spec = QuadratureSpec::default();
        assert!(residual_t(TermId::T1res, 0.5, &w, &spec, RadialPath::Quadrature).is_err());
        assert!(residual_t(TermId::T1res, -1.0, &w, &spec, RadialPath::Quadrature).is_err());
        assert!(residual_t(TermId::B1, -0.5, &w, &spec, RadialPath::Quadrature).is_err());
    }

    #[test]
    fn radial_moments_closed_vs_quadrature() {
        let spec = QuadratureSpec { rel_tol: 1e-11, ..QuadratureSpec::default() };
        for &(lam, kap) in &[(1e2, 0.0), (1e3, 1.0), (1e4, 0.0), (1e5, 2.0)] {
            let w = CutoffWindow::new(lam, kap).unwrap();
            for &x in &[-1.0 + 1.0 / lam, -0.9, -0.5, -0.1, 0.0] {
                let c = rho_moments_closed(x, &w).unwrap();
                let (n, _) = rho_moments_numeric(x, &w, &spec).unwrap();
                assert_relative_eq!(c.inv2, n.inv2, max_relative = 1e-8);
                assert_relative_eq!(c.inv3, n.inv3, max_relative = 1e-8);
                assert_relative_eq!(c.r_inv3, n.r_inv3, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn b_lambda_limits() {
        assert!((b_lambda(1.0 - 1e-4, 1e4).unwrap() + 1.5).abs() < 0.05);
        let vals: Vec<f64> = [1e3, 1e4, 1e5].iter().map(|&l| b_lambda(0.5, l).unwrap().abs()).collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2] && vals[2] < 1e-4);
        // pole sits just above y = 1
        let lambda: f64 = 1e3;
        let pole = 0.5 / lambda
            + ((2.0 * lambda + 3.0) * (2.0 * lambda - 1.0) / (4.0 * lambda * lambda)).sqrt();
        assert!(matches!(b_lambda(pole, lambda), Err(Error::NearPole { .. })));
    }

    #[test]
    fn b_lambda_concave() {
        let lambda = 1e3;
        let hi = 1.0 - 1.0 / lambda;
        let n = 400;
        let h = hi / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| b_lambda(i as f64 * h, lambda).unwrap()).collect();
        for i in 1..n {
            assert!(vals[i - 1] - 2.0 * vals[i] + vals[i + 1] < 0.0, "i = {i}");
        }
    }

    #[test]
    fn k_positive_for_large_lambda() {
        for &kappa in &[0.0, 1.0] {
            for &lambda in &[1e2, 1e3, 1e5] {
                for i in 0..=100 {
                    let y = i as f64 / 100.0;
                    assert!(k_poly(y, lambda, kappa) > 0.0);
                }
            }
        }
    }

    #[test]
    fn t_r_nonnegative() {
        let w = CutoffWindow::new(1e3, 0.0).unwrap();
        let rep = t_r_positivity(&w, 100, 100);
        assert!(rep.holds());
        assert_eq!(rep.samples, 10_000);
    }

    #[test]
    fn arctan_infimum_is_positive() {
        let (inf, _, _) = estimate_arctan_infimum(0.0, 1.0, 64, 64);
        assert!(inf > 0.3);
        let (inf, at, y) = estimate_arctan_infimum(1.0, 10.0, 64, 64);
        assert!(inf > 0.6 && at == 10.0 && y == 0.0);
    }
}
