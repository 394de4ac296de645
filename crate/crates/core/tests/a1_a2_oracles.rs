use std::f64::consts::PI;

use approx::assert_relative_eq;
use massrenorm::asymptotics::{
    residual_decay, db2_dlambda, db2_finite_difference, effective_mass, sweep,
};
use massrenorm::integrands::{residual_t, RadialPath};
use massrenorm::kernels::a1_closed;
use massrenorm::quadrature::{
    a1_quadrature, a2_cartesian_qmc, a2_from_terms, a2_polar, inverse_rho_integrals, integrate_1d,
    integrate_b_term, IntegralResult, A2_PREFACTOR,
};
use massrenorm::{CutoffWindow, QuadratureSpec, TermId};

fn w(lambda: f64, kappa: f64) -> CutoffWindow {
    CutoffWindow::new(lambda, kappa).unwrap()
}

fn b4_closed(w: &CutoffWindow) -> f64 {
    -(32.0 * PI / 3.0) * w.log_ratio().powi(2)
}

/// (computation at a tolerance, exact value)
fn oracle_suite() -> Vec<(Box<dyn Fn(f64) -> IntegralResult>, f64)> {
    let mut v: Vec<(Box<dyn Fn(f64) -> IntegralResult>, f64)> = Vec::new();
    for &(l, k) in &[(2.0, 0.0), (1e3, 3.0), (1e6, 0.0)] {
        let win = w(l, k);
        v.push((
            Box::new(move |tol| a1_quadrature(&win, &QuadratureSpec::default().with_rel_tol(tol)).unwrap()),
            a1_closed(&win),
        ));
    }
    for &(l, k) in &[(10.0, 0.0), (300.0, 1.0)] {
        let win = w(l, k);
        v.push((
            Box::new(move |tol| {
                integrate_b_term(TermId::B4, &win, &QuadratureSpec::polar_default().with_rel_tol(tol)).unwrap()
            }),
            b4_closed(&win),
        ));
    }
    v.push((
        Box::new(|tol| integrate_1d(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &QuadratureSpec::default().with_rel_tol(tol)).unwrap()),
        2.0,
    ));
    v.push((
        Box::new(|tol| integrate_1d(|r: f64| 2.0 / (r + 2.0), 0.5, 400.0, &QuadratureSpec::default().with_rel_tol(tol)).unwrap()),
        2.0 * (402.0f64 / 2.5).ln(),
    ));
    v
}

#[test]
fn error_estimates_are_honest() {
    for (i, (f, exact)) in oracle_suite().iter().enumerate() {
        for tol in [1e-4, 1e-6, 1e-8] {
            let r = f(tol);
            assert!(r.converged);
            assert!((r.value - exact).abs() <= 3.0 * r.error_estimate.max(f64::EPSILON * exact.abs()), "case {i} tol {tol}: {r:?} vs {exact}");
        }
    }
}

#[test]
fn refinement_does_not_worsen_accuracy() {
    for (i, (f, exact)) in oracle_suite().iter().enumerate() {
        let mut tol = 1e-4;
        let mut prev = f(tol);
        for _ in 0..6 {
            tol /= 2.0;
            let next = f(tol);
            let (e0, e1) = ((prev.value - exact).abs(), (next.value - exact).abs());
            assert!(e1 <= e0 + prev.error_estimate, "case {i} at {tol}: {e1} > {e0} + {}", prev.error_estimate);
            prev = next;
        }
    }
}

#[test]
fn b2_is_positive() {
    let r = integrate_b_term(TermId::B2, &w(100.0, 0.0), &QuadratureSpec::polar_default()).unwrap();
    assert!(r.value > 0.0);
}

#[test]
fn a2_is_the_scaled_sum_of_terms() {
    let win = w(30.0, 0.5);
    let spec = QuadratureSpec::polar_default().with_rel_tol(1e-8);
    let p = a2_polar(&win, &spec).unwrap();
    let mut sum = 0.0;
    let mut err = 0.0;
    for t in TermId::B_TERMS {
        let r = integrate_b_term(t, &win, &spec).unwrap();
        sum += r.value;
        err += r.error_estimate;
    }
    assert!((p.a2.value - A2_PREFACTOR * sum).abs() <= A2_PREFACTOR * err + 1e-15);
    assert_eq!(a2_from_terms(&p.terms), p.a2);
    assert_relative_eq!(A2_PREFACTOR, 1.0 / (6.0 * PI.powi(4)), max_relative = 1e-14);
}

#[test]
fn empty_windows_give_zero() {
    let e = w(4.0, 4.0);
    assert_eq!(a2_polar(&e, &QuadratureSpec::polar_default()).unwrap().a2.value, 0.0);
    assert_eq!(a2_cartesian_qmc(&e, &QuadratureSpec::default()).unwrap().value, 0.0);
    assert_eq!(a1_closed(&e), 0.0);
}

#[test]
fn inverse_rho_integrals_positive_and_ordered() {
    for &l in &[1e2, 1e3] {
        let a = inverse_rho_integrals(l, &QuadratureSpec::polar_default()).unwrap();
        assert!(a.integrals.iter().all(|r| r.value > 0.0 && r.converged));
        assert!(a.integrals[3].value <= a.integrals[1].value);
    }
    assert!(inverse_rho_integrals(3.0, &QuadratureSpec::polar_default()).is_err());
}

#[test]
fn first_order_mass_matches_log_form() {
    let l = 1e6;
    let spec = QuadratureSpec::polar_default().with_rel_tol(1e-4);
    let m = effective_mass(0.0, &w(l, 0.0), &spec).unwrap();
    assert_eq!(m.meff_over_m, 1.0);
    assert_relative_eq!(m.a1, 8.0 / (3.0 * PI) * (0.5 * l).ln_1p(), max_relative = 1e-14);
    for alpha in [1e-3, 1e-2] {
        let m = effective_mass(alpha, &w(50.0, 1.0), &spec).unwrap();
        assert!(m.meff_over_m >= 1.0);
        assert!(m.m_over_meff <= 1.0);
    }
    assert!(effective_mass(-0.1, &w(5.0, 0.0), &spec).is_err());
}

#[test]
fn db2_matches_finite_difference() {
    let spec = QuadratureSpec::default().with_rel_tol(1e-10);
    let direct = db2_dlambda(50.0, 1.0, &spec).unwrap();
    let fd = db2_finite_difference(50.0, 1.0, 0.5, &spec).unwrap();
    assert!(direct.converged && fd.converged);
    assert!((direct.value - fd.value).abs() <= direct.error_estimate + fd.error_estimate);
    assert!(db2_dlambda(3.0, 3.0, &spec).is_err());
}

#[test]
fn residuals_finite_and_t3_node() {
    let spec = QuadratureSpec::default();
    let decay = residual_decay(&[w(10.0, 0.0), w(100.0, 1.0)], &spec).unwrap();
    assert!(decay.iter().all(|(_, r)| r.value.is_finite()));
    let v = residual_t(TermId::T3res, -0.5, &w(1e3, 0.0), &spec, RadialPath::Quadrature).unwrap();
    assert_eq!(v, 0.0);
    assert!(residual_decay(&[w(5.0, 0.0)], &spec).is_err());
}

#[test]
fn sweep_rows_in_input_order_and_deterministic() {
    let ws = [w(5.0, 0.0), w(12.0, 0.0), w(40.0, 0.0)];
    let spec = QuadratureSpec::polar_default().with_rel_tol(1e-4);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| sweep(&ws, &spec).unwrap());
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| sweep(&ws, &spec).unwrap());
    assert_eq!(one, four);
    assert_eq!(one.lambdas(), vec![5.0, 12.0, 40.0]);
    assert!(one.rows[0].scaled_residual.is_none());
    assert!(one.rows[1].scaled_residual.is_some());
    for r in &one.rows {
        assert_eq!(r.a1, a1_closed(&w(r.lambda, 0.0)));
        let q = a1_quadrature(&w(r.lambda, 0.0), &QuadratureSpec::default()).unwrap();
        assert!((q.value - r.a1).abs() <= 3.0 * q.error_estimate.max(1e-16));
    }
}
