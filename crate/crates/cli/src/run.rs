use std::f64::consts::PI;

use serde::Serialize;

use massrenorm::asymptotics::{
    self, db2_dlambda, default_fit_window, effective_mass, extrapolate_ratio, fit_power_law,
    fit_power_law_points, flow_schedule, geometric_grid, PowerLawFit, RatioExtrapolation, SweepTable,
};
use massrenorm::integrands::{b_lambda, estimate_arctan_infimum, k_poly, t_r_positivity};
use massrenorm::kernels::a1_closed;
use massrenorm::quadrature::{
    a1_quadrature, a2_polar, inverse_rho_integrals, e_terms_qmc, integrate_b_term,
};
use massrenorm::{CutoffWindow, QuadratureSpec, TermId};

use crate::args::{Cli, Command, Format};
use crate::output::{json, num, sweep_table, Report, Table};
use crate::UsageError;

pub struct Outcome {
    pub text: String,
    pub converged: bool,
}

/// Everything a command needs, validated before any integral is evaluated.
pub struct Plan {
    pub command: Command,
    pub windows: Vec<CutoffWindow>,
    pub spec: QuadratureSpec,
    pub format: Format,
    pub j: usize,
    pub alpha: f64,
    pub flow: Option<FlowArgs>,
}

pub struct FlowArgs {
    pub m_star: f64,
    pub cutoffs: Vec<f64>,
    pub given: Option<(f64, f64)>,
}

fn parse_grid(text: &str) -> Result<Vec<f64>, UsageError> {
    let bad = |m: String| UsageError::new("--lambda-grid", m);
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(bad(format!("expected min:max:geometric:count, got `{text}`")));
    }
    let min: f64 = parts[0].parse().map_err(|_| bad(format!("bad min `{}`", parts[0])))?;
    let max: f64 = parts[1].parse().map_err(|_| bad(format!("bad max `{}`", parts[1])))?;
    let count: usize = parts[3].parse().map_err(|_| bad(format!("bad count `{}`", parts[3])))?;
    match parts[2] {
        "geometric" => geometric_grid(min, max, count).map_err(|e| bad(e.to_string())),
        "linear" => {
            if !(min >= 0.0 && max >= min && count >= 1 && max.is_finite()) {
                return Err(bad(format!("linear grid needs 0 <= min <= max and count >= 1")));
            }
            if count == 1 {
                return Ok(vec![min]);
            }
            Ok((0..count).map(|i| min + (max - min) * i as f64 / (count - 1) as f64).collect())
        }
        other => Err(bad(format!("unknown spacing `{other}` (geometric or linear)"))),
    }
}

fn windows(cli: &Cli, command: Command) -> Result<Vec<CutoffWindow>, UsageError> {
    if !cli.windows.is_empty() {
        if !cli.lambda.is_empty() || cli.lambda_grid.is_some() {
            return Err(UsageError::new("--windows", "cannot be combined with --lambda or --lambda-grid"));
        }
        return cli
            .windows
            .iter()
            .map(|s| {
                let (l, k) = s
                    .split_once(':')
                    .ok_or_else(|| UsageError::new("--windows", format!("expected lambda:kappa, got `{s}`")))?;
                let l: f64 = l.trim().parse().map_err(|_| UsageError::new("--windows", format!("bad lambda `{l}`")))?;
                let k: f64 = k.trim().parse().map_err(|_| UsageError::new("--windows", format!("bad kappa `{k}`")))?;
                CutoffWindow::new(l, k).map_err(|e| UsageError::new("--windows", e.to_string()))
            })
            .collect();
    }
    let lambdas = match (&cli.lambda_grid, cli.lambda.is_empty()) {
        (Some(_), false) => return Err(UsageError::new("--lambda", "give either --lambda or --lambda-grid")),
        (Some(g), true) => parse_grid(g)?,
        (None, false) => cli.lambda.clone(),
        (None, true) if command == Command::Crosscheck => {
            return Ok([(5.0, 1.0), (10.0, 1.0), (20.0, 2.0), (40.0, 4.0)]
                .iter()
                .map(|&(l, k)| CutoffWindow { lambda: l, kappa: k })
                .collect())
        }
        (None, true) => return Err(UsageError::new("--lambda", "required (or --lambda-grid / --windows)")),
    };
    if !(cli.kappa >= 0.0 && cli.kappa.is_finite()) {
        return Err(UsageError::new("--kappa", format!("must be a finite value >= 0, got {}", cli.kappa)));
    }
    lambdas
        .iter()
        .map(|&l| {
            CutoffWindow::new(l, cli.kappa).map_err(|_| {
                UsageError::new("--lambda", format!("lambda = {l} must be finite and >= kappa = {}", cli.kappa))
            })
        })
        .collect()
}

pub fn plan(cli: &Cli) -> Result<Plan, UsageError> {
    let command = cli
        .command
        .ok_or_else(|| UsageError::new("command", "missing (a1, bterm, a2, sweep, scaling, bounds, crosscheck, meff, flow)"))?;
    let one_d = command == Command::A1;
    let mut spec = if one_d { QuadratureSpec::default() } else { QuadratureSpec::polar_default() };
    if let Some(r) = cli.rel_tol {
        spec.rel_tol = r;
    }
    if let Some(m) = cli.max_subdivisions {
        spec.max_subdivisions = m;
    }
    spec.abs_tol = cli.abs_tol;
    spec.split_edge_layer = !cli.no_split;
    spec.qmc_samples = cli.qmc_samples;
    spec.qmc_seed = cli.qmc_seed;
    spec.validate().map_err(|e| {
        let param = if !(spec.rel_tol > 0.0 && spec.rel_tol < 1.0) {
            "--rel-tol"
        } else if !(spec.abs_tol >= 0.0) {
            "--abs-tol"
        } else if spec.max_subdivisions == 0 {
            "--max-subdivisions"
        } else {
            "--qmc-samples"
        };
        UsageError::new(param, e.to_string())
    })?;
    if command == Command::Crosscheck && spec.qmc_samples > 1 << 16 {
        return Err(UsageError::new("--qmc-samples", "at most 65536 points per replicate"));
    }
    if cli.threads == Some(0) {
        return Err(UsageError::new("--threads", "must be at least 1"));
    }

    let flow_given = cli.gamma.is_some() || cli.b0.is_some();
    let windows = if command == Command::Flow && flow_given && cli.lambda.is_empty() && cli.lambda_grid.is_none() {
        Vec::new()
    } else {
        windows(cli, command)?
    };
    match command {
        Command::Sweep | Command::Scaling => {
            for p in windows.windows(2) {
                if !(p[1].lambda > p[0].lambda) {
                    return Err(UsageError::new("--lambda", "sweep cutoffs must increase strictly"));
                }
            }
        }
        Command::Bounds => {
            if let Some(w) = windows.iter().find(|w| w.lambda < 10.0 || w.lambda <= w.kappa) {
                return Err(UsageError::new("--lambda", format!("bounds need lambda >= 10 and lambda > kappa, got {}", w.lambda)));
            }
        }
        _ => {}
    }

    let j = match command {
        Command::Bterm => match cli.j {
            Some(j) if (1..=6).contains(&j) => j,
            Some(j) => return Err(UsageError::new("--j", format!("term index {j} outside 1..6"))),
            None => return Err(UsageError::new("--j", "required for bterm")),
        },
        _ => 0,
    };

    let needs_alpha = command == Command::Meff || (command == Command::Flow && !flow_given);
    let alpha = match cli.alpha {
        Some(a) if a >= 0.0 && a.is_finite() => a,
        Some(a) => return Err(UsageError::new("--alpha", format!("must be >= 0, got {a}"))),
        None if needs_alpha => return Err(UsageError::new("--alpha", format!("required for {}", name(command)))),
        None => 0.0,
    };

    let flow = if command == Command::Flow {
        let m_star = cli.m_star.ok_or_else(|| UsageError::new("--m-star", "required for flow"))?;
        if !(m_star > 0.0 && m_star.is_finite()) {
            return Err(UsageError::new("--m-star", format!("must be > 0, got {m_star}")));
        }
        if cli.cutoff.is_empty() {
            return Err(UsageError::new("--cutoff", "required for flow"));
        }
        if let Some(c) = cli.cutoff.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(UsageError::new("--cutoff", format!("must be > 0, got {c}")));
        }
        let given = match (cli.gamma, cli.b0) {
            (Some(g), Some(b)) => {
                if !(g > 0.0 && g < 1.0) {
                    return Err(UsageError::new("--gamma", format!("{g} outside (0, 1): flow is not renormalizable in this scheme")));
                }
                if !(b > 0.0 && b.is_finite()) {
                    return Err(UsageError::new("--b0", format!("must be > 0, got {b}")));
                }
                Some((g, b))
            }
            (Some(_), None) => return Err(UsageError::new("--b0", "required together with --gamma")),
            (None, Some(_)) => return Err(UsageError::new("--gamma", "required together with --b0")),
            (None, None) => {
                if windows.len() < 4 {
                    return Err(UsageError::new("--lambda", "fitting gamma needs at least 4 cutoffs"));
                }
                None
            }
        };
        Some(FlowArgs {
            m_star,
            cutoffs: cli.cutoff.clone(),
            given,
        })
    } else {
        None
    };

    Ok(Plan {
        command,
        windows,
        spec,
        format: cli.out,
        j,
        alpha,
        flow,
    })
}

fn name(c: Command) -> String {
    use clap::ValueEnum;
    c.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string())
}

fn emit<T: Serialize>(plan: &Plan, table: Table, result: T, converged: bool) -> Outcome {
    let text = match plan.format {
        Format::Csv => table.to_csv(),
        Format::Json => json(&Report {
            command: plan.command,
            spec: &plan.spec,
            converged,
            result,
        }),
    };
    Outcome { text, converged }
}

/// Runtime failure of the numerics; reported like a usage error.
fn fail(e: massrenorm::Error) -> UsageError {
    UsageError::new("computation", e.to_string())
}

pub fn execute(plan: &Plan) -> Result<Outcome, UsageError> {
    match plan.command {
        Command::A1 => a1(plan),
        Command::Bterm => bterm(plan),
        Command::A2 => a2(plan),
        Command::Sweep => {
            let t = asymptotics::sweep(&plan.windows, &plan.spec).map_err(fail)?;
            let ok = t.all_converged();
            Ok(emit(plan, sweep_table(&t), &t, ok))
        }
        Command::Scaling => scaling(plan),
        Command::Bounds => bounds(plan),
        Command::Crosscheck => crosscheck(plan),
        Command::Meff => meff(plan),
        Command::Flow => flow(plan),
    }
}

#[derive(Serialize)]
struct A1Row {
    lambda: f64,
    kappa: f64,
    a1: f64,
    a1_quadrature: f64,
    a1_quadrature_error: f64,
    converged: bool,
}

fn a1(plan: &Plan) -> Result<Outcome, UsageError> {
    let mut rows = Vec::new();
    let mut t = Table::new(&["lambda", "kappa", "a1", "a1_quadrature", "a1_quadrature_error", "converged"]);
    for w in &plan.windows {
        let q = a1_quadrature(w, &plan.spec).map_err(fail)?;
        let r = A1Row {
            lambda: w.lambda,
            kappa: w.kappa,
            a1: a1_closed(w),
            a1_quadrature: q.value,
            a1_quadrature_error: q.error_estimate,
            converged: q.converged,
        };
        t.rows.push(vec![
            num(r.lambda),
            num(r.kappa),
            num(r.a1),
            num(r.a1_quadrature),
            num(r.a1_quadrature_error),
            r.converged.to_string(),
        ]);
        rows.push(r);
    }
    let ok = rows.iter().all(|r| r.converged);
    Ok(emit(plan, t, rows, ok))
}

#[derive(Serialize)]
struct TermRow {
    lambda: f64,
    kappa: f64,
    term: &'static str,
    value: f64,
    error_estimate: f64,
    evaluations: u64,
    converged: bool,
}

fn bterm(plan: &Plan) -> Result<Outcome, UsageError> {
    let term = TermId::b(plan.j).expect("validated index");
    let mut rows = Vec::new();
    let mut t = Table::new(&["lambda", "kappa", "term", "value", "error_estimate", "evaluations", "converged"]);
    for w in &plan.windows {
        let r = integrate_b_term(term, w, &plan.spec).map_err(fail)?;
        t.rows.push(vec![
            num(w.lambda),
            num(w.kappa),
            term.name().to_string(),
            num(r.value),
            num(r.error_estimate),
            r.evaluations.to_string(),
            r.converged.to_string(),
        ]);
        rows.push(TermRow {
            lambda: w.lambda,
            kappa: w.kappa,
            term: term.name(),
            value: r.value,
            error_estimate: r.error_estimate,
            evaluations: r.evaluations,
            converged: r.converged,
        });
    }
    let ok = rows.iter().all(|r| r.converged);
    Ok(emit(plan, t, rows, ok))
}

#[derive(Serialize)]
struct A2Row {
    lambda: f64,
    kappa: f64,
    b: [f64; 6],
    b_error: [f64; 6],
    a2: f64,
    a2_error: f64,
    converged: bool,
}

fn a2(plan: &Plan) -> Result<Outcome, UsageError> {
    let mut rows = Vec::new();
    let mut t = Table::new(&[
        "lambda", "kappa", "b1", "b2", "b3", "b4", "b5", "b6", "a2", "a2_error", "converged",
    ]);
    for w in &plan.windows {
        let p = a2_polar(w, &plan.spec).map_err(fail)?;
        let mut row = vec![num(w.lambda), num(w.kappa)];
        row.extend(p.terms.iter().map(|r| num(r.value)));
        row.extend([num(p.a2.value), num(p.a2.error_estimate), p.a2.converged.to_string()]);
        t.rows.push(row);
        rows.push(A2Row {
            lambda: w.lambda,
            kappa: w.kappa,
            b: p.terms.map(|r| r.value),
            b_error: p.terms.map(|r| r.error_estimate),
            a2: p.a2.value,
            a2_error: p.a2.error_estimate,
            converged: p.a2.converged,
        });
    }
    let ok = rows.iter().all(|r| r.converged);
    Ok(emit(plan, t, rows, ok))
}

#[derive(Serialize)]
struct FitEntry {
    column: String,
    fit: Option<PowerLawFit>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ScalingReport {
    fit_window: (f64, f64),
    fits: Vec<FitEntry>,
    extrapolation: Option<RatioExtrapolation>,
    extrapolation_error: Option<String>,
    table: SweepTable,
}

fn scaling(plan: &Plan) -> Result<Outcome, UsageError> {
    let table = asymptotics::sweep(&plan.windows, &plan.spec).map_err(fail)?;
    let window = default_fit_window(&table);
    let fits: Vec<FitEntry> = ["b1", "b2", "b3", "b4", "b5", "b6", "a2"]
        .iter()
        .map(|c| match fit_power_law(&table, c, window) {
            Ok(f) => FitEntry { column: c.to_string(), fit: Some(f), error: None },
            Err(e) => FitEntry { column: c.to_string(), fit: None, error: Some(e.to_string()) },
        })
        .collect();
    let (extrapolation, extrapolation_error) = match extrapolate_ratio(&table) {
        Ok(x) => (Some(x), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut t = Table::new(&["quantity", "value", "uncertainty", "note"]);
    for f in &fits {
        match (&f.fit, &f.error) {
            (Some(p), _) => t.rows.push(vec![
                format!("gamma_{}", f.column),
                num(p.gamma),
                "nan".into(),
                format!("b0={};r_squared={};points={};sign={}", num(p.b0), num(p.r_squared), p.points, p.sign),
            ]),
            (None, e) => t.rows.push(vec![
                format!("gamma_{}", f.column),
                "nan".into(),
                "nan".into(),
                e.clone().unwrap_or_default(),
            ]),
        }
    }
    match (&extrapolation, &extrapolation_error) {
        (Some(x), _) => t.rows.push(vec![
            "a2_sqrt_scaled_limit".into(),
            num(x.c_estimate),
            num(x.spread),
            if x.oscillating { "oscillating tail: raw last value".into() } else { "aitken".into() },
        ]),
        (None, e) => t.rows.push(vec![
            "a2_sqrt_scaled_limit".into(),
            "nan".into(),
            "nan".into(),
            e.clone().unwrap_or_default(),
        ]),
    }
    let ok = table.all_converged();
    Ok(emit(
        plan,
        t,
        ScalingReport {
            fit_window: window,
            fits,
            extrapolation,
            extrapolation_error,
            table,
        },
        ok,
    ))
}

#[derive(Serialize)]
struct BoundsRow {
    lambda: f64,
    kappa: f64,
    t_r_min: f64,
    t_r_violations: usize,
    k_min: f64,
    b_lambda_edge: f64,
    sqrt_lambda_db2: f64,
    scaled_residual: f64,
    s: Option<[f64; 4]>,
    arctan_infimum: f64,
    converged: bool,
}

fn bounds(plan: &Plan) -> Result<Outcome, UsageError> {
    let mut rows = Vec::new();
    let mut t = Table::new(&[
        "lambda",
        "kappa",
        "t_r_min",
        "t_r_violations",
        "k_min",
        "b_lambda_edge",
        "sqrt_lambda_db2",
        "scaled_residual",
        "s1",
        "s2",
        "s3",
        "s4",
        "arctan_infimum",
        "converged",
    ]);
    for w in &plan.windows {
        let tr = t_r_positivity(w, 100, 100);
        let k_min = (0..=100).map(|i| k_poly(i as f64 / 100.0, w.lambda, w.kappa)).fold(f64::INFINITY, f64::min);
        let edge = b_lambda(1.0 - 1.0 / w.lambda, w.lambda).map_err(fail)?;
        let db2 = db2_dlambda(w.lambda, w.kappa, &plan.spec).map_err(fail)?;
        let res = asymptotics::scaled_residual(w, &plan.spec).map_err(fail)?;
        let a = inverse_rho_integrals(w.lambda, &plan.spec).map_err(fail)?;
        let (inf, _, _) = estimate_arctan_infimum(w.kappa, w.lambda, 200, 200);
        let row = BoundsRow {
            lambda: w.lambda,
            kappa: w.kappa,
            t_r_min: tr.min_value,
            t_r_violations: tr.violations,
            k_min,
            b_lambda_edge: edge,
            sqrt_lambda_db2: w.lambda.sqrt() * db2.value,
            scaled_residual: res.value,
            s: Some(a.scaled),
            arctan_infimum: inf,
            converged: db2.converged && res.converged && a.integrals.iter().all(|r| r.converged),
        };
        let mut cells = vec![
            num(row.lambda),
            num(row.kappa),
            num(row.t_r_min),
            row.t_r_violations.to_string(),
            num(row.k_min),
            num(row.b_lambda_edge),
            num(row.sqrt_lambda_db2),
            num(row.scaled_residual),
        ];
        cells.extend(a.scaled.iter().map(|&v| num(v)));
        cells.push(num(inf));
        cells.push(row.converged.to_string());
        t.rows.push(cells);
        rows.push(row);
    }
    let ok = rows.iter().all(|r| r.converged);
    Ok(emit(plan, t, rows, ok))
}

#[derive(Serialize)]
struct CrossRow {
    lambda: f64,
    kappa: f64,
    a2_polar: f64,
    a2_polar_error: f64,
    a2_qmc: f64,
    a2_qmc_error: f64,
    ratio: f64,
    ratio_sigma: f64,
}

#[derive(Serialize)]
struct CrossReport {
    rows: Vec<CrossRow>,
    constant: f64,
    two_pi: f64,
    relative_spread: f64,
}

fn crosscheck(plan: &Plan) -> Result<Outcome, UsageError> {
    let mut rows = Vec::new();
    let mut converged = true;
    for w in &plan.windows {
        let p = a2_polar(w, &plan.spec).map_err(fail)?.a2;
        let q = e_terms_qmc(w, &plan.spec).map_err(fail)?.a2;
        converged &= p.converged;
        let ratio = q.value / p.value;
        let sigma = ratio.abs() * ((q.error_estimate / q.value).powi(2) + (p.error_estimate / p.value).powi(2)).sqrt();
        rows.push(CrossRow {
            lambda: w.lambda,
            kappa: w.kappa,
            a2_polar: p.value,
            a2_polar_error: p.error_estimate,
            a2_qmc: q.value,
            a2_qmc_error: q.error_estimate,
            ratio,
            ratio_sigma: sigma,
        });
    }
    let finite: Vec<&CrossRow> = rows.iter().filter(|r| r.ratio.is_finite() && r.ratio_sigma > 0.0).collect();
    let wsum: f64 = finite.iter().map(|r| r.ratio_sigma.powi(-2)).sum();
    let constant = if wsum > 0.0 {
        finite.iter().map(|r| r.ratio * r.ratio_sigma.powi(-2)).sum::<f64>() / wsum
    } else {
        f64::NAN
    };
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
    let relative_spread = (hi - lo) / constant.abs();
    let mut t = Table::new(&[
        "lambda",
        "kappa",
        "a2_polar",
        "a2_polar_error",
        "a2_qmc",
        "a2_qmc_error",
        "ratio",
        "ratio_sigma",
        "constant",
    ]);
    for r in &rows {
        t.rows.push(vec![
            num(r.lambda),
            num(r.kappa),
            num(r.a2_polar),
            num(r.a2_polar_error),
            num(r.a2_qmc),
            num(r.a2_qmc_error),
            num(r.ratio),
            num(r.ratio_sigma),
            num(constant),
        ]);
    }
    Ok(emit(
        plan,
        t,
        CrossReport {
            rows,
            constant,
            two_pi: 2.0 * PI,
            relative_spread,
        },
        converged,
    ))
}

#[derive(Serialize)]
struct MeffRow {
    lambda: f64,
    kappa: f64,
    #[serde(flatten)]
    expansion: massrenorm::asymptotics::MassExpansion,
}

fn meff(plan: &Plan) -> Result<Outcome, UsageError> {
    let mut rows = Vec::new();
    let mut t = Table::new(&[
        "lambda", "kappa", "alpha", "a1", "a2", "a2_error", "m_over_meff", "meff_over_m", "converged",
    ]);
    for w in &plan.windows {
        let m = effective_mass(plan.alpha, w, &plan.spec).map_err(fail)?;
        t.rows.push(vec![
            num(w.lambda),
            num(w.kappa),
            num(m.alpha),
            num(m.a1),
            num(m.a2),
            num(m.a2_error),
            num(m.m_over_meff),
            num(m.meff_over_m),
            m.converged.to_string(),
        ]);
        rows.push(MeffRow {
            lambda: w.lambda,
            kappa: w.kappa,
            expansion: m,
        });
    }
    let ok = rows.iter().all(|r| r.expansion.converged);
    Ok(emit(plan, t, rows, ok))
}

#[derive(Serialize)]
struct FlowRow {
    cutoff: f64,
    bare_mass: f64,
    b1: f64,
    composed_mass: f64,
}

#[derive(Serialize)]
struct FlowReport {
    fit: PowerLawFit,
    m_star: f64,
    rows: Vec<FlowRow>,
}

fn flow(plan: &Plan) -> Result<Outcome, UsageError> {
    let args = plan.flow.as_ref().expect("validated flow arguments");
    let mut converged = true;
    let fit = match args.given {
        Some((gamma, b0)) => PowerLawFit {
            gamma,
            b0,
            r_squared: f64::NAN,
            window: (f64::NAN, f64::NAN),
            points: 0,
            sign: 1.0,
        },
        None => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for w in &plan.windows {
                let m = effective_mass(plan.alpha, w, &plan.spec).map_err(fail)?;
                converged &= m.converged;
                xs.push(w.lambda);
                ys.push(m.meff_over_m);
            }
            fit_power_law_points(&xs, &ys).map_err(fail)?
        }
    };
    let mut rows = Vec::new();
    let mut t = Table::new(&["cutoff", "gamma", "b0", "b1", "bare_mass", "composed_mass"]);
    for &c in &args.cutoffs {
        let f = flow_schedule(&fit, args.m_star, c).map_err(fail)?;
        let composed = asymptotics::composed_mass(&fit, f.bare_mass, c);
        t.rows.push(vec![num(c), num(fit.gamma), num(fit.b0), num(f.b1), num(f.bare_mass), num(composed)]);
        rows.push(FlowRow {
            cutoff: c,
            bare_mass: f.bare_mass,
            b1: f.b1,
            composed_mass: composed,
        });
    }
    Ok(emit(
        plan,
        t,
        FlowReport {
            fit,
            m_star: args.m_star,
            rows,
        },
        converged,
    ))
}
