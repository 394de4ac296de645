//! Scalar building blocks: cutoff windows, energy denominators, the
//! quadratic form rho and its discriminant Delta, and transverse-projector
//! contractions.
//!
//! Units are m = c = hbar = 1 throughout; momenta and cutoffs are measured
//! in units of the bare mass.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Dimensionless ultraviolet / infrared cutoffs `(Lambda/m, kappa/m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffWindow {
    pub lambda: f64,
    pub kappa: f64,
}

impl CutoffWindow {
    pub fn new(lambda: f64, kappa: f64) -> Result<Self> {
        let w = CutoffWindow { lambda, kappa };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda.is_finite()
            && self.kappa.is_finite()
            && self.kappa >= 0.0
            && self.kappa <= self.lambda;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidWindow {
                lambda: self.lambda,
                kappa: self.kappa,
            })
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lambda == self.kappa
    }

    /// `log((lambda + 2) / (kappa + 2))`, the radial log shared by a1 and b4.
    pub fn log_ratio(&self) -> f64 {
        ((self.lambda - self.kappa) / (self.kappa + 2.0)).ln_1p()
    }
}

/// Point `(r1, r2, X)` of the polar integration domain; `X` is the cosine of
/// the angle between the two photon momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub r1: f64,
    pub r2: f64,
    pub x: f64,
}

impl PolarPoint {
    pub fn new(r1: f64, r2: f64, x: f64) -> Result<Self> {
        if !(r1 >= 0.0 && r2 >= 0.0) {
            return Err(Error::Domain(format!("negative radius r1={r1}, r2={r2}")));
        }
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("cosine X={x} outside [-1, 1]")));
        }
        Ok(PolarPoint { r1, r2, x })
    }
}

pub type Vec3 = [f64; 3];

/// Pair of photon momenta for the six-dimensional representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPair {
    pub k1: Vec3,
    pub k2: Vec3,
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// First-order coefficient `(8 / 3pi) log((lambda + 2) / (kappa + 2))`.
pub fn a1_closed(w: &CutoffWindow) -> f64 {
    8.0 / (3.0 * PI) * w.log_ratio()
}

/// `1 / (r^2/2 + r)`, the single-photon energy denominator.
#[inline]
pub fn single_denominator(r: f64) -> f64 {
    1.0 / (r * (0.5 * r + 1.0))
}

/// `1 / ((r1^2 + 2 r1 r2 X + r2^2)/2 + r1 + r2)`.
#[inline]
pub fn pair_denominator(r1: f64, r2: f64, x: f64) -> f64 {
    1.0 / (0.5 * (r1 * r1 + 2.0 * r1 * r2 * x + r2 * r2) + r1 + r2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDenominators {
    pub l1: f64,
    pub l2: f64,
    pub f12_inv: f64,
}

/// Energy denominators `L1`, `L2`, `1/F12` at a polar point. `L_j` is
/// infinite when `r_j = 0`; that endpoint is never sampled by the open
/// quadrature rules.
pub fn polar_denominators(p: &PolarPoint) -> Result<PolarDenominators> {
    if p.r1 == 0.0 && p.r2 == 0.0 {
        return Err(Error::DegeneratePoint);
    }
    Ok(PolarDenominators {
        l1: single_denominator(p.r1),
        l2: single_denominator(p.r2),
        f12_inv: pair_denominator(p.r1, p.r2, p.x),
    })
}

/// Returns `(rho, Delta)` with
/// `rho = r^2 + 2 lambda r X + lambda^2 + 2r + 2 lambda`
/// and `Delta = lambda^2 (1 - X^2) + 2 lambda (1 - X) - 1`, so that
/// `rho = (r + lambda X + 1)^2 + Delta`.
#[inline]
pub fn rho_and_delta(r: f64, x: f64, lambda: f64) -> (f64, f64) {
    let rho = r * r + 2.0 * lambda * r * x + lambda * lambda + 2.0 * r + 2.0 * lambda;
    (rho, delta(x, lambda))
}

#[inline]
pub fn delta(x: f64, lambda: f64) -> f64 {
    // (1 - X^2) written as (1 - X)(1 + X) keeps precision near X = -1.
    lambda * lambda * (1.0 - x) * (1.0 + x) + 2.0 * lambda * (1.0 - x) - 1.0
}

/// Traces and quadratic forms of the transverse projectors
/// `Q(k) = I - k^ k^T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contractions {
    /// `tr[Q1 Q2]`
    pub tr_qq: f64,
    /// `(k2, Q1 Q2 k1)`
    pub bilinear_qq: f64,
    /// `(k1, Q2 k1)`
    pub quad1: f64,
    /// `(k2, Q1 k2)`
    pub quad2: f64,
}

fn projector(k: &Vec3) -> [[f64; 3]; 3] {
    let n = norm(k);
    let u = [k[0] / n, k[1] / n, k[2] / n];
    let mut q = [[0.0; 3]; 3];
    for (i, row) in q.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 1.0 } else { 0.0 } - u[i] * u[j];
        }
    }
    q
}

fn mat_vec(m: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

fn check_nonzero(c: &CartesianPair) -> Result<()> {
    if norm(&c.k1) == 0.0 || norm(&c.k2) == 0.0 {
        Err(Error::ZeroVector)
    } else {
        Ok(())
    }
}

/// Contractions by explicit 3x3 matrix algebra.
pub fn projector_contractions_matrix(c: &CartesianPair) -> Result<Contractions> {
    check_nonzero(c)?;
    let q1 = projector(&c.k1);
    let q2 = projector(&c.k2);
    let mut tr = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            tr += q1[i][j] * q2[j][i];
        }
    }
    let q2k1 = mat_vec(&q2, &c.k1);
    let q1k2 = mat_vec(&q1, &c.k2);
    Ok(Contractions {
        tr_qq: tr,
        // (k2, Q1 Q2 k1) = (Q1 k2, Q2 k1) since Q1 is symmetric
        bilinear_qq: dot(&q1k2, &q2k1),
        quad1: dot(&c.k1, &q2k1),
        quad2: dot(&c.k2, &q1k2),
    })
}

/// Contractions through the closed identities in `s = k1^ . k2^`.
pub fn projector_contractions_closed(c: &CartesianPair) -> Result<Contractions> {
    check_nonzero(c)?;
    let n1 = norm(&c.k1);
    let n2 = norm(&c.k2);
    let k1k2 = dot(&c.k1, &c.k2);
    let s = k1k2 / (n1 * n2);
    let s2 = s * s;
    Ok(Contractions {
        tr_qq: 1.0 + s2,
        bilinear_qq: k1k2 * (s2 - 1.0),
        quad1: n1 * n1 * (1.0 - s2),
        quad2: n2 * n2 * (1.0 - s2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianDenominators {
    pub e1_inv: f64,
    pub e2_inv: f64,
    pub e12_inv: f64,
}

pub fn cartesian_denominators(c: &CartesianPair) -> Result<CartesianDenominators> {
    check_nonzero(c)?;
    let n1 = norm(&c.k1);
    let n2 = norm(&c.k2);
    let sum = [c.k1[0] + c.k2[0], c.k1[1] + c.k2[1], c.k1[2] + c.k2[2]];
    Ok(CartesianDenominators {
        e1_inv: single_denominator(n1),
        e2_inv: single_denominator(n2),
        e12_inv: 1.0 / (0.5 * dot(&sum, &sum) + n1 + n2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn a1_examples() {
        let w = CutoffWindow::new(3.0, 3.0).unwrap();
        assert_eq!(a1_closed(&w), 0.0);
        let w = CutoffWindow::new(2.0, 0.0).unwrap();
        assert_relative_eq!(a1_closed(&w), 8.0 / (3.0 * PI) * 2f64.ln(), max_relative = 1e-15);
        // first-order scaling function: (8/3pi) log(1 + lambda/2)
        let w = CutoffWindow::new(1e6, 0.0).unwrap();
        assert_relative_eq!(
            a1_closed(&w),
            8.0 / (3.0 * PI) * (1.0 + 0.5e6f64).ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn window_rejects_inverted_cutoffs() {
        assert!(CutoffWindow::new(1.0, 2.0).is_err());
        assert!(CutoffWindow::new(1.0, -0.5).is_err());
        assert!(CutoffWindow::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn polar_denominator_examples() {
        let d = polar_denominators(&PolarPoint::new(2.0, 0.0, 0.3).unwrap()).unwrap();
        assert_relative_eq!(d.f12_inv, 0.25);
        assert_relative_eq!(d.l1, 0.25);
        let d = polar_denominators(&PolarPoint::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(d.f12_inv, 0.25);
        let a = pair_denominator(1.5, 4.0, -0.4);
        let b = pair_denominator(4.0, 1.5, -0.4);
        assert_eq!(a, b);
        assert_eq!(
            polar_denominators(&PolarPoint::new(0.0, 0.0, 0.0).unwrap()),
            Err(Error::DegeneratePoint)
        );
        assert!(PolarPoint::new(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn rho_delta_examples() {
        let (rho, _) = rho_and_delta(0.0, 0.7, 10.0);
        assert_eq!(rho, 120.0);
        let (_, d) = rho_and_delta(3.0, 0.0, 10.0);
        assert_eq!(d, 119.0);
    }

    #[test]
    fn delta_positive_on_negative_cosines() {
        for &lambda in &[4.0, 10.0, 1e2, 1e3, 1e5] {
            let lo = -1.0 + 1.0 / lambda;
            for i in 0..=200 {
                let x = lo + (0.0 - lo) * i as f64 / 200.0;
                assert!(delta(x, lambda) > 0.0, "lambda={lambda}, X={x}");
            }
        }
    }

    #[test]
    fn contraction_examples() {
        let par = CartesianPair { k1: [1.0, 2.0, 0.5], k2: [2.0, 4.0, 1.0] };
        let c = projector_contractions_matrix(&par).unwrap();
        assert_relative_eq!(c.tr_qq, 2.0, epsilon = 1e-14);
        assert!(c.quad1.abs() < 1e-13);
        let perp = CartesianPair { k1: [1.0, 0.0, 0.0], k2: [0.0, 3.0, 0.0] };
        let c = projector_contractions_matrix(&perp).unwrap();
        assert_relative_eq!(c.tr_qq, 1.0, epsilon = 1e-15);
        assert_eq!(c.bilinear_qq, 0.0);
        let zero = CartesianPair { k1: [0.0; 3], k2: [1.0, 0.0, 0.0] };
        assert_eq!(projector_contractions_closed(&zero), Err(Error::ZeroVector));
    }

    #[test]
    fn cartesian_denominator_examples() {
        let c = CartesianPair { k1: [0.0, 2.0, 0.0], k2: [0.0, -2.0, 0.0] };
        let d = cartesian_denominators(&c).unwrap();
        assert_relative_eq!(d.e12_inv, 0.25);
        let c = CartesianPair { k1: [0.0, 0.0, 1.0], k2: [0.0, 0.0, 1.0] };
        assert_relative_eq!(cartesian_denominators(&c).unwrap().e12_inv, 0.25);
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-50.0f64..50.0)
            .prop_filter("nonzero", |v| norm(v) > 1e-3)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matrix_path_matches_closed_identities(k1 in vec3(), k2 in vec3()) {
            let pair = CartesianPair { k1, k2 };
            let m = projector_contractions_matrix(&pair).unwrap();
            let c = projector_contractions_closed(&pair).unwrap();
            let scale1 = dot(&k1, &k1);
            let scale2 = dot(&k2, &k2);
            let scale12 = norm(&k1) * norm(&k2);
            prop_assert!((m.tr_qq - c.tr_qq).abs() <= 1e-12 * 2.0);
            prop_assert!((m.bilinear_qq - c.bilinear_qq).abs() <= 1e-12 * scale12);
            prop_assert!((m.quad1 - c.quad1).abs() <= 1e-12 * scale1);
            prop_assert!((m.quad2 - c.quad2).abs() <= 1e-12 * scale2);
            prop_assert!(c.tr_qq >= 1.0 && c.tr_qq <= 2.0);
            prop_assert!(c.quad1 >= 0.0);
        }

        #[test]
        fn cartesian_reduces_to_polar(k1 in vec3(), k2 in vec3()) {
            let pair = CartesianPair { k1, k2 };
            let cd = cartesian_denominators(&pair).unwrap();
            let (n1, n2) = (norm(&k1), norm(&k2));
            let s = (dot(&k1, &k2) / (n1 * n2)).clamp(-1.0, 1.0);
            let pd = polar_denominators(&PolarPoint::new(n1, n2, s).unwrap()).unwrap();
            prop_assert!((cd.e1_inv - pd.l1).abs() <= 1e-12 * pd.l1);
            prop_assert!((cd.e2_inv - pd.l2).abs() <= 1e-12 * pd.l2);
            prop_assert!((cd.e12_inv - pd.f12_inv).abs() <= 1e-12 * pd.f12_inv);
        }

        #[test]
        fn rho_completes_the_square(r in 0.0f64..1e4, x in -1.0f64..=1.0, lambda in 1e-3f64..1e4) {
            let (rho, d) = rho_and_delta(r, x, lambda);
            let sq = r + lambda * x + 1.0;
            prop_assert!((rho - (sq * sq + d)).abs() <= 1e-12 * rho);
        }

        #[test]
        fn a1_monotone(lambda in 0.0f64..1e6, frac in 0.0f64..1.0, bump in 1e-3f64..10.0) {
            let kappa = lambda * frac;
            let w = CutoffWindow::new(lambda, kappa).unwrap();
            let a = a1_closed(&w);
            prop_assert!(a >= 0.0);
            prop_assert!(a1_closed(&CutoffWindow::new(lambda + bump, kappa).unwrap()) > a);
            if kappa > 0.0 {
                let lower = (kappa - bump).max(0.0);
                prop_assert!(a1_closed(&CutoffWindow::new(lambda, lower).unwrap()) >= a);
            }
        }
    }
}
