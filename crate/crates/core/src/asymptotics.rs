//! Cutoff sweeps and large-cutoff diagnostics: power-law fits, tail
//! acceleration of `a2 / sqrt(lambda)`, the derivative `d b2 / d lambda`,
//! the decay of the lower-bound residuals, the mass expansion to order
//! `alpha^2` and the bare-mass flow.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrands::{residual_sum, RadialPath, TermId};
use crate::kernels::{self, a1_closed, CutoffWindow};
use crate::quadrature::{
    self, a2_polar, adaptive, inverse_rho_integrals, IntegralResult, QuadratureSpec, Sample,
};

/// One cutoff window of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub kappa: f64,
    pub a1: f64,
    /// `b1..b6`
    pub b: [f64; 6],
    pub b_err: [f64; 6],
    pub a2: f64,
    pub a2_err: f64,
    pub a2_sqrt_scaled: f64,
    /// Scaled inverse-`rho` integrals `S1..S4`; absent for `lambda < 4`.
    pub s: Option<[f64; 4]>,
    /// Scaled residual of the `t1 + t2 + t3` decomposition; absent for
    /// `lambda < 10`.
    pub scaled_residual: Option<f64>,
    /// Names of quantities whose integration did not converge.
    pub not_converged: Vec<String>,
    /// Set when the row could not be computed at all.
    pub failure: Option<String>,
}

impl SweepRow {
    fn failed(w: &CutoffWindow, msg: String) -> Self {
        SweepRow {
            lambda: w.lambda,
            kappa: w.kappa,
            a1: a1_closed(w),
            b: [f64::NAN; 6],
            b_err: [f64::NAN; 6],
            a2: f64::NAN,
            a2_err: f64::NAN,
            a2_sqrt_scaled: f64::NAN,
            s: None,
            scaled_residual: None,
            not_converged: Vec::new(),
            failure: Some(msg),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.failure.is_none() && self.not_converged.is_empty()
    }

    /// Column lookup by the names used in the tabular output.
    pub fn column(&self, name: &str) -> Result<f64> {
        let v = match name {
            "lambda" => self.lambda,
            "kappa" => self.kappa,
            "a1" => self.a1,
            "b1" | "b2" | "b3" | "b4" | "b5" | "b6" => {
                let j: usize = name[1..].parse().unwrap();
                self.b[j - 1]
            }
            "a2" => self.a2,
            "a2_sqrt_scaled" => self.a2_sqrt_scaled,
            "s1" | "s2" | "s3" | "s4" => {
                let j: usize = name[1..].parse().unwrap();
                self.s.map_or(f64::NAN, |s| s[j - 1])
            }
            "appB_residual" => self.scaled_residual.unwrap_or(f64::NAN),
            other => return Err(Error::UnknownColumn(other.to_string())),
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        self.rows.iter().map(|r| r.column(name)).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(SweepRow::is_clean)
    }
}

/// Geometric grid of `count` points from `min` to `max` inclusive.
pub fn geometric_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && count >= 1) {
        return Err(Error::InvalidArgument(format!(
            "geometric grid needs 0 < min <= max and count >= 1 (got {min}, {max}, {count})"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let ratio = (max / min).ln() / (count - 1) as f64;
    let mut v: Vec<f64> = (0..count).map(|i| min * (ratio * i as f64).exp()).collect();
    v[count - 1] = max;
    Ok(v)
}

fn compute_row(w: &CutoffWindow, spec: &QuadratureSpec) -> Result<SweepRow> {
    let polar = a2_polar(w, spec)?;
    let mut not_converged = Vec::new();
    for (t, r) in TermId::B_TERMS.iter().zip(&polar.terms) {
        if !r.converged {
            not_converged.push(t.name().to_string());
        }
    }
    let s = if w.lambda >= 4.0 {
        let a = inverse_rho_integrals(w.lambda, spec)?;
        for (i, r) in a.integrals.iter().enumerate() {
            if !r.converged {
                not_converged.push(format!("s{}", i + 1));
            }
        }
        Some(a.scaled)
    } else {
        None
    };
    let app_b = if w.lambda >= 10.0 {
        let r = scaled_residual(w, spec)?;
        if !r.converged {
            not_converged.push("residual".into());
        }
        Some(r.value)
    } else {
        None
    };
    let a2 = polar.a2.value;
    Ok(SweepRow {
        lambda: w.lambda,
        kappa: w.kappa,
        a1: a1_closed(w),
        b: polar.terms.map(|r| r.value),
        b_err: polar.terms.map(|r| r.error_estimate),
        a2,
        a2_err: polar.a2.error_estimate,
        a2_sqrt_scaled: if w.lambda > 0.0 { a2 / w.lambda.sqrt() } else { 0.0 },
        s,
        scaled_residual: app_b,
        not_converged,
        failure: None,
    })
}

/// Evaluates every window; rows are computed concurrently and returned in
/// input order. A failing row is recorded and the sweep continues.
pub fn sweep(windows: &[CutoffWindow], spec: &QuadratureSpec) -> Result<SweepTable> {
    if windows.is_empty() {
        return Err(Error::InsufficientData("sweep needs at least one window".into()));
    }
    spec.validate()?;
    for w in windows {
        w.validate()?;
    }
    for pair in windows.windows(2) {
        if !(pair[1].lambda > pair[0].lambda) {
            return Err(Error::InvalidArgument(format!(
                "sweep lambdas must increase strictly ({} then {})",
                pair[0].lambda, pair[1].lambda
            )));
        }
    }
    let rows = windows
        .par_iter()
        .map(|w| compute_row(w, spec).unwrap_or_else(|e| SweepRow::failed(w, e.to_string())))
        .collect();
    Ok(SweepTable { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub b0: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// `-1` when a negative sign-definite column was fitted in absolute value.
    pub sign: f64,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_power_law_points(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs matching inputs with at least 2 points (got {} and {})",
            xs.len(),
            ys.len()
        )));
    }
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::NonPositive {
                column: "fit input".into(),
                row: i,
                lambda: x,
                value: y,
            });
        }
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let gamma = sxy / sxx;
    let intercept = my - gamma * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - gamma * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerLawFit {
        gamma,
        b0: intercept.exp(),
        r_squared,
        window: (xs[0], xs[xs.len() - 1]),
        points: xs.len(),
        sign: 1.0,
    })
}

/// `|column| ~ b0 lambda^gamma` over rows with `lambda` in `window`.
pub fn fit_power_law(table: &SweepTable, column: &str, window: (f64, f64)) -> Result<PowerLawFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut idx = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if row.lambda >= window.0 && row.lambda <= window.1 {
            xs.push(row.lambda);
            ys.push(row.column(column)?);
            idx.push(i);
        }
    }
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "column {column} has {} rows in [{}, {}], need at least 4",
            xs.len(),
            window.0,
            window.1
        )));
    }
    let sign = if ys.iter().all(|&y| y < 0.0) { -1.0 } else { 1.0 };
    for (k, &y) in ys.iter().enumerate() {
        if !(sign * y > 0.0) {
            return Err(Error::NonPositive {
                column: column.to_string(),
                row: idx[k],
                lambda: xs[k],
                value: y,
            });
        }
    }
    let abs: Vec<f64> = ys.iter().map(|y| sign * y).collect();
    let mut fit = fit_power_law_points(&xs, &abs)?;
    fit.sign = sign;
    Ok(fit)
}

/// Fit window covering the top two decades of a sweep.
pub fn default_fit_window(table: &SweepTable) -> (f64, f64) {
    let max = table.rows.iter().map(|r| r.lambda).fold(0.0, f64::max);
    (max / 100.0 * (1.0 - 1e-12), max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioExtrapolation {
    pub c_estimate: f64,
    pub spread: f64,
    /// The tail was not monotone; `c_estimate` is the raw last value.
    pub oscillating: bool,
}

/// Aitken delta-squared estimate from the last three terms of a sequence.
pub fn aitken_tail(values: &[f64]) -> Result<RatioExtrapolation> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "tail acceleration needs 3 values, got {}",
            values.len()
        )));
    }
    let n = values.len();
    let (x0, x1, x2) = (values[n - 3], values[n - 2], values[n - 1]);
    if values[n - 3..].iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in tail".into()));
    }
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    if d1 == 0.0 && d2 == 0.0 {
        return Ok(RatioExtrapolation {
            c_estimate: x2,
            spread: 0.0,
            oscillating: false,
        });
    }
    let denom = d2 - d1;
    if d1 * d2 <= 0.0 || denom == 0.0 || (d2 / d1) >= 1.0 {
        return Ok(RatioExtrapolation {
            c_estimate: x2,
            spread: d2.abs(),
            oscillating: true,
        });
    }
    let acc = x2 - d2 * d2 / denom;
    Ok(RatioExtrapolation {
        c_estimate: acc,
        spread: (acc - x2).abs(),
        oscillating: false,
    })
}

/// Accelerated limit of the `a2 / sqrt(lambda)` column.
pub fn extrapolate_ratio(table: &SweepTable) -> Result<RatioExtrapolation> {
    aitken_tail(&table.column("a2_sqrt_scaled")?)
}

/// `d b2 / d lambda = 8 pi int dX int_kappa^lambda dr (1 + X^2) T_R(r)`.
pub fn db2_dlambda(lambda: f64, kappa: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let w = CutoffWindow::new(lambda, kappa)?;
    spec.validate()?;
    if !(lambda > kappa) {
        return Err(Error::InvalidArgument(format!("need lambda > kappa, got {lambda} <= {kappa}")));
    }
    let tol = spec.tolerance();
    let in_tol = tol.inner();
    let max = spec.max_subdivisions;
    let outer = |u: f64| -> Result<Sample> {
        let opx = u * u;
        let x = opx - 1.0;
        let vertex = -lambda * x - 1.0;
        let mut pts = vec![w.kappa, w.lambda];
        let d = kernels::delta(x, lambda);
        if d > 0.0 {
            for p in [vertex - d.sqrt(), vertex, vertex + d.sqrt()] {
                if p > w.kappa && p < w.lambda {
                    pts.push(p);
                }
            }
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        let f = |r: f64| {
            let dr = r - lambda;
            let quad = dr * dr + 2.0 * lambda * r * opx;
            let rho = quad + 2.0 * r + 2.0 * lambda;
            Ok(Sample::from(quad * r * lambda / (rho * rho * rho)))
        };
        let inner = adaptive(&f, &pts, in_tol, max, false)?;
        let weight = 8.0 * PI * (1.0 + x * x) * 2.0 * u;
        Ok(Sample {
            value: inner.value * weight,
            error: inner.error_estimate * weight,
            evals: inner.evaluations,
            converged: inner.converged,
        })
    };
    let mut pts = vec![0.0];
    if spec.split_edge_layer && lambda > 1.0 {
        pts.push(1.0 / lambda.sqrt());
    }
    pts.extend([1.0, 2f64.sqrt()]);
    adaptive(&outer, &pts, tol, max, true)
}

/// Central differences of `b2` with steps `h` and `2h`, combined by one
/// Richardson step. The error estimate is the quadrature noise amplified by
/// the differencing plus `|D(h) - D(2h)| / 3`, which bounds the remaining
/// truncation error.
pub fn db2_finite_difference(lambda: f64, kappa: f64, h: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    if !(h > 0.0 && lambda - 2.0 * h > kappa) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {h} must satisfy lambda - 2h > kappa"
        )));
    }
    let b2 = |l: f64| quadrature::integrate_b_term(TermId::B2, &CutoffWindow::new(l, kappa)?, spec);
    let (p1, m1, p2, m2) = (b2(lambda + h)?, b2(lambda - h)?, b2(lambda + 2.0 * h)?, b2(lambda - 2.0 * h)?);
    let d1 = (p1.value - m1.value) / (2.0 * h);
    let d2 = (p2.value - m2.value) / (4.0 * h);
    let noise1 = (p1.error_estimate + m1.error_estimate) / (2.0 * h);
    let noise2 = (p2.error_estimate + m2.error_estimate) / (4.0 * h);
    Ok(IntegralResult {
        value: (4.0 * d1 - d2) / 3.0,
        error_estimate: (4.0 * noise1 + noise2) / 3.0 + (d1 - d2).abs() / 3.0,
        evaluations: p1.evaluations + m1.evaluations + p2.evaluations + m2.evaluations,
        converged: p1.converged && m1.converged && p2.converged && m2.converged,
    })
}

/// `sqrt(lambda) int_{-1 + 1/lambda}^0 (1 + X^2)(t1 + t2 + t3) dX`.
pub fn scaled_residual(w: &CutoffWindow, spec: &QuadratureSpec) -> Result<IntegralResult> {
    scaled_residual_with(w, spec, RadialPath::Quadrature)
}

pub fn scaled_residual_with(w: &CutoffWindow, spec: &QuadratureSpec, path: RadialPath) -> Result<IntegralResult> {
    w.validate()?;
    spec.validate()?;
    if !(w.lambda >= 10.0) {
        return Err(Error::InvalidArgument(format!(
            "residual decay needs lambda >= 10, got {}",
            w.lambda
        )));
    }
    let lo = -1.0 + 1.0 / w.lambda;
    let inner_spec = QuadratureSpec {
        rel_tol: spec.rel_tol / 4.0,
        ..*spec
    };
    let f = |x: f64| -> Result<Sample> {
        let (v, e) = residual_sum(x, w, &inner_spec, path)?;
        let wt = 1.0 + x * x;
        Ok(Sample {
            value: v * wt,
            error: e * wt,
            evals: 1,
            converged: true,
        })
    };
    let mut pts = vec![lo];
    let near = -1.0 + 4.0 / w.lambda;
    if near < -0.5 {
        pts.push(near);
    }
    pts.extend([-0.5, 0.0]);
    let tol = quadrature::Tolerance {
        rel: spec.rel_tol,
        abs: spec.abs_tol,
    };
    Ok(adaptive(&f, &pts, tol, spec.max_subdivisions, false)?.scale(w.lambda.sqrt()))
}

pub fn residual_decay(windows: &[CutoffWindow], spec: &QuadratureSpec) -> Result<Vec<(f64, IntegralResult)>> {
    windows
        .par_iter()
        .map(|w| scaled_residual(w, spec).map(|r| (w.lambda, r)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassExpansion {
    pub alpha: f64,
    pub a1: f64,
    pub a2: f64,
    pub a2_error: f64,
    pub m_over_meff: f64,
    pub meff_over_m: f64,
    pub converged: bool,
}

impl MassExpansion {
    pub fn from_coefficients(alpha: f64, a1: f64, a2: f64) -> Self {
        MassExpansion {
            alpha,
            a1,
            a2,
            a2_error: 0.0,
            m_over_meff: 1.0 - alpha * a1 - alpha * alpha * a2,
            meff_over_m: 1.0 + alpha * a1 + alpha * alpha * (a1 * a1 + a2),
            converged: true,
        }
    }
}

/// `m / m_eff` to order `alpha^2` and its truncated series inverse.
pub fn effective_mass(alpha: f64, w: &CutoffWindow, spec: &QuadratureSpec) -> Result<MassExpansion> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be >= 0")));
    }
    let a2 = a2_polar(w, spec)?.a2;
    let mut m = MassExpansion::from_coefficients(alpha, a1_closed(w), a2.value);
    m.a2_error = a2.error_estimate;
    m.converged = a2.converged;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSchedule {
    pub bare_mass: f64,
    pub b1: f64,
}

/// Bare mass `m = Lambda^{-gamma/(1-gamma)} b1^{1/(1-gamma)}` holding the
/// effective mass at `m_star = b0 b1` under `m_eff/m = b0 (Lambda/m)^gamma`.
pub fn flow_schedule(fit: &PowerLawFit, m_star: f64, lambda: f64) -> Result<FlowSchedule> {
    let g = fit.gamma;
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::NotRenormalizable(g));
    }
    if !(m_star > 0.0) || !(lambda > 0.0) || !(fit.b0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "flow needs m_star > 0, lambda > 0, b0 > 0 (got {m_star}, {lambda}, {})",
            fit.b0
        )));
    }
    let b1 = m_star / fit.b0;
    let bare_mass = lambda.powf(-g / (1.0 - g)) * b1.powf(1.0 / (1.0 - g));
    Ok(FlowSchedule { bare_mass, b1 })
}

/// `b0 (Lambda/m)^gamma m`, the effective mass implied by a fit.
pub fn composed_mass(fit: &PowerLawFit, bare_mass: f64, lambda: f64) -> f64 {
    fit.b0 * (lambda / bare_mass).powf(fit.gamma) * bare_mass
}
