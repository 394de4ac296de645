//! Randomized quasi-Monte-Carlo evaluation of the six-dimensional
//! Cartesian representation of `a2`.
//!
//! Each momentum is drawn uniformly in the shell volume: `r^3` uniform on
//! `[kappa^3, lambda^3]` (inverse CDF of the `r^2 dr` density), `cos(theta)`
//! uniform on `[-1, 1]`, `phi` uniform on `[0, 2 pi)`. Owen-scrambled Sobol
//! points with independent seeds give the replicates; their spread is the
//! error model.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IntegralResult, QuadratureSpec};
use crate::error::{Error, Result};
use crate::integrands::{e_kernel_from_parts, TermId};
use crate::kernels::{self, projector_contractions_matrix, CartesianPair, CutoffWindow, Vec3};

pub const QMC_REPLICATES: usize = 16;
const MAX_SOBOL_SAMPLES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmcResult {
    /// `(4 pi)^2 (2/3) int int d^3k1 d^3k2 sum_j E_j`
    pub a2: IntegralResult,
    /// `int int d^3k1 d^3k2 E_j` for `E1..E5`, without the `(4 pi)^2 (2/3)`
    /// prefactor.
    pub e_terms: [IntegralResult; 5],
    /// Sample standard deviation of the replicate estimates of `a2`.
    pub replicate_spread: f64,
    pub replicates: usize,
}

const A2_CARTESIAN_PREFACTOR: f64 = 16.0 * PI * PI * 2.0 / 3.0;

fn u01(v: f32) -> f64 {
    // centre of the 2^-24 cell: never exactly 0 or 1
    v as f64 + 0.5 / (1u64 << 24) as f64
}

fn shell_point(u: f64, v: f64, w: f64, win: &CutoffWindow) -> Vec3 {
    let k3 = win.kappa.powi(3);
    let r = (k3 + u * (win.lambda.powi(3) - k3)).cbrt();
    let ct = 2.0 * v - 1.0;
    let st = ((1.0 - ct) * (1.0 + ct)).max(0.0).sqrt();
    let (sp, cp) = (2.0 * PI * w).sin_cos();
    [r * st * cp, r * st * sp, r * ct]
}

/// Per-term sums over the points of one scrambled sequence.
fn replicate(win: &CutoffWindow, samples: usize, seed: u32) -> Result<[f64; 5]> {
    let mut acc = [0.0f64; 5];
    for i in 0..samples as u32 {
        let a = sobol_burley::sample_4d(i, 0, seed);
        let b = sobol_burley::sample_4d(i, 1, seed);
        let k1 = shell_point(u01(a[0]), u01(a[1]), u01(a[2]), win);
        let k2 = shell_point(u01(a[3]), u01(b[0]), u01(b[1]), win);
        let pair = CartesianPair { k1, k2 };
        let c = projector_contractions_matrix(&pair)?;
        let n1 = kernels::norm(&k1);
        let n2 = kernels::norm(&k2);
        let s = [k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2]];
        let ss = kernels::dot(&s, &s);
        for (slot, t) in acc.iter_mut().zip(TermId::E_TERMS) {
            *slot += e_kernel_from_parts(t, n1, n2, ss, &c);
        }
    }
    let vol = 4.0 / 3.0 * PI * (win.lambda.powi(3) - win.kappa.powi(3));
    let norm = vol * vol / samples as f64;
    Ok(acc.map(|v| v * norm))
}

fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn validate(w: &CutoffWindow, spec: &QuadratureSpec) -> Result<()> {
    w.validate()?;
    spec.validate()?;
    if spec.qmc_samples > MAX_SOBOL_SAMPLES {
        return Err(Error::InvalidSpec(format!(
            "qmc_samples = {} exceeds the {} points of one scrambled sequence",
            spec.qmc_samples, MAX_SOBOL_SAMPLES
        )));
    }
    Ok(())
}

/// All five E-term integrals and `a2` from `QMC_REPLICATES` scrambled
/// replicates of `spec.qmc_samples` points each.
pub fn e_terms_qmc(w: &CutoffWindow, spec: &QuadratureSpec) -> Result<QmcResult> {
    validate(w, spec)?;
    let reps = QMC_REPLICATES;
    if w.is_empty() {
        return Ok(QmcResult {
            a2: IntegralResult::zero(),
            e_terms: [IntegralResult::zero(); 5],
            replicate_spread: 0.0,
            replicates: reps,
        });
    }
    let per_rep: Vec<[f64; 5]> = (0..reps as u32)
        .into_par_iter()
        .map(|r| replicate(w, spec.qmc_samples, spec.qmc_seed.wrapping_mul(QMC_REPLICATES as u32).wrapping_add(r)))
        .collect::<Result<Vec<_>>>()?;
    let evals = (reps * spec.qmc_samples) as u64;
    let tol = spec.tolerance();
    let summarize = |xs: &[f64]| {
        let (mean, sd) = mean_and_sd(xs);
        let se = sd / (xs.len() as f64).sqrt();
        (
            IntegralResult {
                value: mean,
                error_estimate: se,
                evaluations: evals,
                converged: se <= (tol.rel * mean.abs()).max(tol.abs),
            },
            sd,
        )
    };
    let mut e_terms = [IntegralResult::zero(); 5];
    for (j, slot) in e_terms.iter_mut().enumerate() {
        let xs: Vec<f64> = per_rep.iter().map(|r| r[j]).collect();
        *slot = summarize(&xs).0;
    }
    let totals: Vec<f64> = per_rep
        .iter()
        .map(|r| A2_CARTESIAN_PREFACTOR * r.iter().sum::<f64>())
        .collect();
    let (a2, spread) = summarize(&totals);
    Ok(QmcResult {
        a2,
        e_terms,
        replicate_spread: spread,
        replicates: reps,
    })
}

/// `a2` from the six-dimensional representation.
pub fn a2_cartesian_qmc(w: &CutoffWindow, spec: &QuadratureSpec) -> Result<IntegralResult> {
    Ok(e_terms_qmc(w, spec)?.a2)
}
