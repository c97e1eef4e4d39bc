//! Experiment orchestration and reproducible artifacts.
//!
//! `compute` turns a validated config into in-memory reports; `run_experiment`
//! also writes `<experiment>.csv` and `summary.json` and prints one verdict
//! line per acceptance check. Nothing here reads the clock, so identical
//! configs produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::coupling::{
    convergence_rate_fit, counting_zero_threshold, e_lambda_norm, exact_1d_e_norm, exact_1d_n_matrix,
    exact_rate_fit, exact_zero_threshold, green_identity_check, green_test_functions, nonlocal_bc_solve,
    relative_l2, GreenReport, RateFit,
};
use crate::discrete::{assemble_a_lambda, assemble_b, extend, restrict, trace_gamma0, trace_gamma1, transmission_solve, Grid, Side};
use crate::error::{Error, Result};
use crate::fit::{log_space, Verdict};
use crate::fourier::{composition_error_experiment, n_bound_experiment, operator_bound_experiment, BoundSetup};
use crate::geometry::{BoundaryChart, Domain1D, Domain2D, Inclusion, OuterBoundary};
use crate::linalg::SymSparse;
use crate::spectral::{
    birman_from_spectrum, birman_synthetic_suite, circle_weyl_fit, counting_function_sorted, counting_w_circle,
    eigen_spectrum_e, mu_grid, s_norm_estimate, singular_values, weyl_circle_prediction, weyl_exponent_fit, weyl_rhs,
};
use crate::symbols::{
    char_poly, class_membership_estimate, eta, roots_omega, roots_z, symbol_d, symbol_n, symbol_w, tau,
    MembershipSamples, ParamSymbol, SymbolClass,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Exit code for configuration errors; the others come from `Verdict`.
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub criterion: u8,
    pub label: String,
    pub verdict: Verdict,
    pub detail: String,
}

pub fn verdict_tag(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "INCONCLUSIVE",
    }
}

impl CriterionResult {
    fn new(criterion: u8, label: impl Into<String>, verdict: Verdict, detail: impl Into<String>) -> Self {
        Self {
            criterion,
            label: label.into(),
            verdict,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: {}",
            self.criterion,
            verdict_tag(self.verdict),
            self.label,
            self.detail
        )
    }
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Result of one experiment before anything touches the disk.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub experiment: ExperimentKind,
    pub csv_columns: Vec<&'static str>,
    pub csv_rows: Vec<Vec<String>>,
    pub criteria: Vec<CriterionResult>,
    pub results: Value,
    pub matrices: Vec<(String, SymSparse)>,
}

impl ExperimentOutput {
    pub fn verdict(&self) -> Verdict {
        self.criteria.iter().fold(Verdict::Pass, |v, c| v.and(c.verdict))
    }

    fn csv_text(&self, header: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{header}");
        let _ = writeln!(s, "{}", self.csv_columns.join(","));
        for r in &self.csv_rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "NA".into())
}

fn domain1d(cfg: &ExperimentConfig) -> Result<Domain1D> {
    let g = &cfg.geometry;
    Domain1D::new(g.length, g.inclusion_left, g.inclusion_right)
}

fn disk(cfg: &ExperimentConfig) -> Result<Domain2D> {
    let g = &cfg.geometry;
    Domain2D::new(OuterBoundary::Disk { radius: g.outer_radius }, Inclusion::disk([0.0, 0.0], g.radius))
}

fn polar_grid(cfg: &ExperimentConfig) -> Result<Grid> {
    Grid::polar(disk(cfg)?, cfg.grid.rings, cfg.grid.angles)
}

fn loads(cfg: &ExperimentConfig, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    if cfg.loads.kind == "zero" {
        let z = vec![0.0; grid.outer_nodes.len()];
        (z.clone(), z)
    } else {
        green_test_functions(grid)
    }
}

fn grid_matrices(grid: &Grid, lambda: f64) -> Result<Vec<(String, SymSparse)>> {
    Ok(vec![
        ("A_lambda".into(), assemble_a_lambda(grid, lambda)?.matrix),
        ("B".into(), assemble_b(grid)?.matrix),
        ("mass".into(), SymSparse::from_diagonal(&grid.mass())),
    ])
}

fn rate_detail(fit: &RateFit, lo: f64, hi: f64) -> String {
    format!("slope {:.4} in [{lo}, {hi}], R^2 {:.4}", fit.slope, fit.r_squared)
}

fn rate1d(cfg: &ExperimentConfig, dump: bool) -> Result<ExperimentOutput> {
    let domain = domain1d(cfg)?;
    let grid = Grid::one_d(domain, cfg.grid.h)?;
    let lambdas = &cfg.sweep.lambda_sweep;
    let exact = exact_rate_fit(&domain, lambdas)?;
    let discrete = convergence_rate_fit(&grid, lambdas)?;
    let (f, g) = loads(cfg, &grid);
    let greens: Vec<GreenReport> = lambdas
        .par_iter()
        .map(|&l| green_identity_check(&grid, l, &f, &g))
        .collect::<Result<_>>()?;
    let gap = exact
        .values
        .iter()
        .zip(&discrete.values)
        .map(|(e, d)| (d - e).abs() / e)
        .fold(0.0, f64::max);
    let rows = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let gr = &greens[i];
            vec![
                num(l),
                num(discrete.values[i]),
                num(exact.values[i]),
                num(gr.residual_i),
                num(gr.residual_ii),
                opt(gr.residual_iii),
                opt(gr.residual_iv),
            ]
        })
        .collect();
    let criteria = vec![
        CriterionResult::new(1, "1D exact-oracle rate", exact.verdict(-0.52, -0.48), rate_detail(&exact, -0.52, -0.48)),
        CriterionResult::new(
            1,
            format!("1D discrete rate, h = {}", cfg.grid.h),
            discrete.verdict(-0.55, -0.45),
            format!("{}, max gap to exact {:.2e}", rate_detail(&discrete, -0.55, -0.45), gap),
        ),
    ];
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Rate1d,
        csv_columns: vec![
            "lambda",
            "E_norm",
            "E_norm_exact",
            "green_res_i",
            "green_res_ii",
            "green_res_iii",
            "green_res_iv",
        ],
        csv_rows: rows,
        criteria,
        results: json!({
            "slope": discrete.slope,
            "exact": exact,
            "discrete": discrete,
            "max_relative_gap": gap,
            "green": greens,
        }),
        matrices: if dump { grid_matrices(&grid, lambdas[0])? } else { Vec::new() },
    })
}

fn rate2d(cfg: &ExperimentConfig, dump: bool) -> Result<ExperimentOutput> {
    let grid = polar_grid(cfg)?;
    let lambdas = &cfg.sweep.lambda_sweep;
    let fit = convergence_rate_fit(&grid, lambdas)?;
    let rows = lambdas.iter().zip(&fit.values).map(|(&l, &v)| vec![num(l), num(v)]).collect();
    let label = format!("2D polar disk rate, {}x{}", cfg.grid.rings, cfg.grid.angles);
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Rate2d,
        csv_columns: vec!["lambda", "E_norm"],
        csv_rows: rows,
        criteria: vec![CriterionResult::new(1, label, fit.verdict(-0.6, -0.4), rate_detail(&fit, -0.6, -0.4))],
        results: json!({ "slope": fit.slope, "fit": fit }),
        matrices: if dump { grid_matrices(&grid, lambdas[0])? } else { Vec::new() },
    })
}

#[derive(Debug, Clone, Serialize)]
struct GreenLevel {
    h: f64,
    report: GreenReport,
    n_relation_error: f64,
    nonlocal_discrepancy: f64,
}

fn rel_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn green_level(cfg: &ExperimentConfig, domain: Domain1D, h: f64) -> Result<(GreenLevel, Grid)> {
    let grid = Grid::one_d(domain, h)?;
    let lambda = cfg.sweep.lambda;
    let (f, g) = loads(cfg, &grid);
    let report = green_identity_check(&grid, lambda, &f, &g)?;
    let u = transmission_solve(&grid, lambda, &extend(&grid, &f)?)?;
    let g0 = trace_gamma0(&grid, &u, Side::Exterior)?;
    let g1 = trace_gamma1(&grid, &u, Side::Exterior)?;
    let n = exact_1d_n_matrix(lambda, domain.inclusion_length())?;
    let mismatch = [
        g0[0] - (n[0][0] * g1[0] + n[0][1] * g1[1]),
        g0[1] - (n[1][0] * g1[0] + n[1][1] * g1[1]),
    ];
    let n_relation_error = rel_or_zero(mismatch[0].hypot(mismatch[1]), g0[0].hypot(g0[1]));
    let nl = nonlocal_bc_solve(&grid, lambda, &f)?;
    let t = restrict(&grid, &u)?;
    let nonlocal_discrepancy = if nl.iter().chain(&t).all(|v| *v == 0.0) {
        0.0
    } else {
        relative_l2(&grid, &nl, &t)
    };
    Ok((
        GreenLevel {
            h,
            report,
            n_relation_error,
            nonlocal_discrepancy,
        },
        grid,
    ))
}

fn green(cfg: &ExperimentConfig, dump: bool) -> Result<ExperimentOutput> {
    let domain = domain1d(cfg)?;
    let (coarse, grid) = green_level(cfg, domain, cfg.grid.h)?;
    let (fine, _) = green_level(cfg, domain, cfg.grid.h / 2.0)?;
    let t = &cfg.tolerances;
    let c = &coarse.report;
    let residuals = [c.residual_i, c.residual_ii, c.residual_iii.unwrap_or(f64::NAN), c.residual_iv.unwrap_or(f64::NAN)];
    let worst = residuals.iter().fold(0.0f64, |m, v| m.max(*v));
    let small = residuals.iter().all(|v| *v <= t.green_residual);
    // identities that hold exactly at both levels have no observable order
    let ratio = |a: f64, b: f64| if a == 0.0 && b == 0.0 { None } else { Some(a / b) };
    let ratios = [
        ratio(c.residual_i, fine.report.residual_i),
        ratio(c.residual_ii, fine.report.residual_ii),
    ];
    let ratios_ok = ratios
        .iter()
        .all(|r| r.is_none_or(|r| (t.green_ratio_lo..=t.green_ratio_hi).contains(&r)));
    let fmt_ratio = |r: Option<f64>| r.map(|r| format!("{r:.3}")).unwrap_or_else(|| "exact".into());
    let criteria = vec![
        CriterionResult::new(
            2,
            format!("Green residuals at h = {}, lambda = {}", cfg.grid.h, cfg.sweep.lambda),
            pass_if(small),
            format!("max residual {worst:.2e} <= {:.0e}", t.green_residual),
        ),
        CriterionResult::new(
            2,
            "Green (i)-(ii) order under h/2",
            pass_if(ratios_ok),
            format!(
                "ratios {}, {} in [{}, {}]",
                fmt_ratio(ratios[0]),
                fmt_ratio(ratios[1]),
                t.green_ratio_lo,
                t.green_ratio_hi
            ),
        ),
        CriterionResult::new(
            3,
            "gamma0 u2 = N gamma1 u2 with the exact N",
            pass_if(coarse.n_relation_error <= t.nonlocal),
            format!("relative error {:.2e} <= {:.0e}", coarse.n_relation_error, t.nonlocal),
        ),
        CriterionResult::new(
            3,
            "nonlocal solve vs transmission solve",
            pass_if(coarse.nonlocal_discrepancy <= t.nonlocal),
            format!("L2 discrepancy {:.2e} <= {:.0e}", coarse.nonlocal_discrepancy, t.nonlocal),
        ),
    ];
    let rows = [&coarse, &fine]
        .iter()
        .map(|l| {
            vec![
                num(l.h),
                num(l.report.residual_i),
                num(l.report.residual_ii),
                opt(l.report.residual_iii),
                opt(l.report.residual_iv),
                num(l.n_relation_error),
                num(l.nonlocal_discrepancy),
            ]
        })
        .collect();
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Green,
        csv_columns: vec![
            "h",
            "green_res_i",
            "green_res_ii",
            "green_res_iii",
            "green_res_iv",
            "n_relation_error",
            "nonlocal_discrepancy",
        ],
        csv_rows: rows,
        criteria,
        results: json!({ "levels": [coarse, fine], "ratios": ratios }),
        matrices: if dump { grid_matrices(&grid, cfg.sweep.lambda)? } else { Vec::new() },
    })
}

/// Worst relative residuals of the root and homogeneity identities over
/// `samples` random (∇χ, x′, ξ′, λ, t).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityCheck {
    pub samples: usize,
    pub root_p: f64,
    pub root_q: f64,
    pub homogeneity: f64,
}

pub fn identity_check(samples: usize, seed: u64) -> Result<IdentityCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = IdentityCheck {
        samples,
        root_p: 0.0,
        root_q: 0.0,
        homogeneity: 0.0,
    };
    let rel = |a: Complex64, b: Complex64| {
        let s = a.norm().max(b.norm());
        if s == 0.0 {
            0.0
        } else {
            (a - b).norm() / s
        }
    };
    for _ in 0..samples {
        let c: f64 = rng.random_range(-2.0..2.0);
        let chart = BoundaryChart::linear(vec![c]);
        let xp = [rng.random_range(-1.0..1.0)];
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let xi = sign * 10f64.powf(rng.random_range(-3.0..3.0));
        let lambda = 10f64.powf(rng.random_range(2.0..6.0));
        let t = 10f64.powf(rng.random_range(-0.7..0.7));
        let a_nn = 1.0 + c * c;
        let b = (c * xi).abs();

        let (zm, zp) = roots_z(&chart, &xp, &[xi])?;
        for z in [zm, zp] {
            let scale = a_nn * z.norm_sqr() + 2.0 * b * z.norm() + xi * xi;
            out.root_p = out.root_p.max(char_poly(&chart, &xp, &[xi], z, 0.0)?.norm() / scale);
        }
        let (wm, wp) = roots_omega(&chart, &xp, &[xi], lambda)?;
        for w in [wm, wp] {
            let scale = a_nn * w.norm_sqr() + 2.0 * b * w.norm() + xi * xi + lambda;
            out.root_q = out.root_q.max(char_poly(&chart, &xp, &[xi], w, lambda)?.norm() / scale);
        }

        let (txi, tl) = ([t * xi], t * t * lambda);
        let re = |v: f64| Complex64::new(v, 0.0);
        let pairs = [
            (tau(&chart, &xp, &txi)?, t * tau(&chart, &xp, &[xi])?),
            (eta(&chart, &xp, &txi, tl)?, t * eta(&chart, &xp, &[xi], lambda)?),
            (roots_omega(&chart, &xp, &txi, tl)?.1, t * wp),
            (symbol_n(&chart, &xp, &txi, tl)?, symbol_n(&chart, &xp, &[xi], lambda)? / t),
            (re(symbol_w(&chart, &xp, &txi, tl)?), re(symbol_w(&chart, &xp, &[xi], lambda)? / t)),
            (symbol_d(&chart, &xp, &txi, tl)?, symbol_d(&chart, &xp, &[xi], lambda)?),
        ];
        for (a, b) in pairs {
            out.homogeneity = out.homogeneity.max(rel(a, b));
        }
    }
    Ok(out)
}

fn omega_plus(chart: &BoundaryChart) -> ParamSymbol {
    let c = chart.clone();
    ParamSymbol::new(
        chart.dim(),
        SymbolClass::P { m: 1.0, k: None },
        chart.support_radius(),
        Arc::new(move |x, xi, l| Ok(roots_omega(&c, x, xi, l)?.1)),
    )
}

fn symbols(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let chart = BoundaryChart::trigonometric(vec![(0.3, vec![2.0], 0.4)], 0.5)?;
    let samples = MembershipSamples::default();
    let cases = [
        ("1/eta in P^-1", ParamSymbol::n_symbol(&chart), 2),
        ("symbol_D in P^0_1", ParamSymbol::d_symbol(&chart), 1),
        ("omega- in P^1", ParamSymbol::eta(&chart), 2),
        ("omega+ in P^1", omega_plus(&chart), 2),
    ];
    let reports = cases
        .par_iter()
        .map(|(_, s, k)| class_membership_estimate(s, *k, &samples))
        .collect::<Result<Vec<_>>>()?;
    let ids = identity_check(10_000, cfg.seed)?;
    let t = &cfg.tolerances;
    let mut criteria: Vec<CriterionResult> = cases
        .iter()
        .zip(&reports)
        .map(|((name, _, _), r)| {
            let worst = r
                .constants
                .iter()
                .map(|c| if c.base_sup > 0.0 { c.refined_sup / c.base_sup } else { 1.0 })
                .fold(0.0, f64::max);
            CriterionResult::new(
                4,
                format!("membership {name}"),
                pass_if(r.pass),
                format!("{} constants, worst refinement growth {worst:.3}", r.constants.len()),
            )
        })
        .collect();
    criteria.push(CriterionResult::new(
        5,
        "root identities p(z) = 0, q(omega) = 0",
        pass_if(ids.root_p <= t.root && ids.root_q <= t.root),
        format!("max relative residual {:.2e}, {:.2e} <= {:.0e}", ids.root_p, ids.root_q, t.root),
    ));
    criteria.push(CriterionResult::new(
        5,
        format!("homogeneity on {} samples", ids.samples),
        pass_if(ids.homogeneity <= t.homogeneity),
        format!("max relative defect {:.2e} <= {:.0e}", ids.homogeneity, t.homogeneity),
    ));
    let mut rows: Vec<Vec<String>> = cases
        .iter()
        .zip(&reports)
        .map(|((name, _, _), r)| vec![format!("membership {name}"), num(samples.xi_count as f64), "NA".into(), r.pass.to_string()])
        .collect();
    rows.push(vec!["root_p".into(), ids.samples.to_string(), num(ids.root_p), (ids.root_p <= t.root).to_string()]);
    rows.push(vec!["root_q".into(), ids.samples.to_string(), num(ids.root_q), (ids.root_q <= t.root).to_string()]);
    rows.push(vec![
        "homogeneity".into(),
        ids.samples.to_string(),
        num(ids.homogeneity),
        (ids.homogeneity <= t.homogeneity).to_string(),
    ]);
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Symbols,
        csv_columns: vec!["check", "samples", "max_error", "pass"],
        csv_rows: rows,
        criteria,
        results: json!({ "membership": reports, "identities": ids }),
        matrices: Vec::new(),
    })
}

fn bound_setup(cfg: &ExperimentConfig, tolerance: f64) -> BoundSetup {
    BoundSetup {
        points: cfg.grid.fft_points,
        trials: cfg.grid.trials,
        seed: cfg.seed,
        tolerance,
    }
}

fn bounds(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let inv_eta = ParamSymbol::n_symbol(&BoundaryChart::flat(1));
    let setup = bound_setup(cfg, 0.1);
    let mut rows = Vec::new();
    let mut criteria = Vec::new();
    let mut reports = Vec::new();
    for (r, s) in [(0.5, -0.5), (1.0, 0.0)] {
        let rep = operator_bound_experiment(&inv_eta, r, s, &cfg.sweep.lambda_sweep, &setup)?;
        for row in &rep.rows {
            rows.push(vec![num(r), num(s), num(row.lambda), num(row.tau), num(row.trial_sup), num(row.ratio)]);
        }
        criteria.push(CriterionResult::new(
            4,
            format!("operator bound 1/eta, (r, s) = ({r}, {s})"),
            rep.verdict,
            format!(
                "exponent {:.4} vs {} +- {}, R^2 {:.4}",
                rep.fit.slope, rep.expected_exponent, rep.tolerance, rep.fit.r_squared
            ),
        ));
        reports.push(json!({ "r": r, "s": s, "report": rep }));
    }
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Bounds,
        csv_columns: vec!["r", "s", "lambda", "tau", "trial_sup", "ratio"],
        csv_rows: rows,
        criteria,
        results: json!({ "bounds": reports }),
        matrices: Vec::new(),
    })
}

/// a = (1 + 0.3 cos x)⟨ξ⟩ ∈ S¹ and b = −(1 + 0.3 sin x)/√(ξ² + λ) ∈ P⁻¹.
pub fn composition_symbols() -> (ParamSymbol, ParamSymbol) {
    let a = ParamSymbol::new(
        1,
        SymbolClass::S { m: 1.0, k: None },
        f64::INFINITY,
        Arc::new(|x, xi, _| Ok(Complex64::new((1.0 + 0.3 * x[0].cos()) * (1.0 + xi[0] * xi[0]).sqrt(), 0.0))),
    );
    let b = ParamSymbol::new(
        1,
        SymbolClass::P { m: -1.0, k: None },
        f64::INFINITY,
        Arc::new(|x, xi, l| Ok(Complex64::new(-(1.0 + 0.3 * x[0].sin()) / (xi[0] * xi[0] + l).sqrt(), 0.0))),
    );
    (a, b)
}

fn compose(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (a, b) = composition_symbols();
    let rep = composition_error_experiment(&a, &b, 0.0, &cfg.sweep.lambda_sweep, &bound_setup(cfg, 0.1))?;
    let rows = rep
        .rows
        .iter()
        .map(|r| vec![num(r.lambda), num(r.tau), num(r.remainder_ratio), num(r.composition_ratio)])
        .collect();
    let slope = rep.remainder_fit.map(|f| f.slope);
    let criteria = vec![
        CriterionResult::new(
            4,
            "composition remainder, (m1, m2) = (1, -1)",
            rep.remainder_verdict,
            match slope {
                Some(s) => format!("exponent {s:.4} <= -0.9"),
                None => "remainder vanishes to rounding".into(),
            },
        ),
        CriterionResult::new(
            4,
            "composition op(a)op(b)",
            rep.composition_verdict,
            format!("exponent {:.4} <= {}", rep.composition_fit.slope, rep.expected_exponent + 0.1),
        ),
    ];
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Compose,
        csv_columns: vec!["lambda", "tau", "remainder_ratio", "composition_ratio"],
        csv_rows: rows,
        criteria,
        results: json!({ "slope": slope, "report": rep }),
        matrices: Vec::new(),
    })
}

fn nbound(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let curves = n_bound_experiment(&[0.0, 0.5, 1.0, 1.5], &cfg.sweep.lambda_sweep, &bound_setup(cfg, 0.07))?;
    let mut rows = Vec::new();
    let mut criteria = Vec::new();
    for c in &curves {
        for ((l, r), e) in c.lambdas.iter().zip(&c.ratios).zip(&c.exact) {
            rows.push(vec![num(c.s), num(*l), num(*r), num(*e)]);
        }
        criteria.push(CriterionResult::new(
            4,
            format!("N bound, s = {}", c.s),
            c.verdict,
            format!("exponent {:.4} vs {} +- 0.07", c.fit.slope, c.expected_exponent),
        ));
    }
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Nbound,
        csv_columns: vec!["s", "lambda", "ratio", "exact_sup"],
        csv_rows: rows,
        criteria,
        results: json!({ "curves": curves }),
        matrices: Vec::new(),
    })
}

/// Singular values of E_λ on the polar disk, with ‖S‖.
struct DiskSpectrum {
    domain: Domain2D,
    grid: Grid,
    singular: Vec<f64>,
    norm: f64,
    s_norm: f64,
}

fn disk_spectrum(cfg: &ExperimentConfig) -> Result<DiskSpectrum> {
    let grid = polar_grid(cfg)?;
    let singular = singular_values(&eigen_spectrum_e(&grid, cfg.sweep.lambda)?);
    let norm = *singular.last().ok_or_else(|| Error::Numeric("empty spectrum".into()))?;
    let s_norm = s_norm_estimate(&grid)?;
    Ok(DiskSpectrum {
        domain: disk(cfg)?,
        grid,
        singular,
        norm,
        s_norm,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CircleOracle {
    pub checked: usize,
    pub agreeing: usize,
    pub max_deviation: f64,
}

/// Enumerated N(μ; 𝒲_λ) on the circle against R(1/μ − λμ)₊, over μ up
/// to the cut-off 1/√λ, at every point with predicted count ≥ 10.
pub fn circle_oracle(radii: &[f64], lambdas: &[f64], tolerance: usize) -> Result<CircleOracle> {
    let mut out = CircleOracle {
        checked: 0,
        agreeing: 0,
        max_deviation: 0.0,
    };
    for &r in radii {
        for &l in lambdas {
            let top = 1.0 / l.sqrt();
            for mu in log_space(top / 100.0, top, 25) {
                let pred = weyl_circle_prediction(r, l, mu);
                if pred < 10.0 {
                    continue;
                }
                let dev = (counting_w_circle(r, l, mu)? as f64 - pred).abs();
                out.checked += 1;
                out.max_deviation = out.max_deviation.max(dev);
                if dev <= tolerance as f64 {
                    out.agreeing += 1;
                }
            }
        }
    }
    Ok(out)
}

fn weyl(cfg: &ExperimentConfig, dump: bool) -> Result<ExperimentOutput> {
    let lambda = cfg.sweep.lambda;
    let tol = cfg.tolerances.count;
    let oracle = circle_oracle(&cfg.sweep.radii, &cfg.sweep.lambda_sweep, tol)?;
    let top = 1.0 / lambda.sqrt();
    let circle_mu = mu_grid(top * 10f64.powf(-2.5), top * 10f64.powf(-1.5), 11);
    let circle = circle_weyl_fit(cfg.geometry.radius, lambda, &circle_mu, -1.05, -0.95)?;

    let sp = disk_spectrum(cfg)?;
    let m = &cfg.mu_grid;
    let fit_mu = mu_grid(m.fit_lo * sp.norm, m.fit_hi * sp.norm, 11);
    let disk_fit = weyl_exponent_fit(&sp.singular, &fit_mu, -1.25, -0.8)?;
    let grid_mu = mu_grid(m.lo * sp.norm, m.hi * sp.norm, m.points);
    let mut rows = Vec::new();
    for &mu in &grid_mu {
        rows.push(vec![
            num(mu),
            counting_function_sorted(&sp.singular, mu).to_string(),
            num(weyl_rhs(&sp.domain, lambda, mu, sp.s_norm)?),
            counting_w_circle(cfg.geometry.radius, lambda, mu / (sp.s_norm * sp.s_norm))?.to_string(),
        ]);
    }
    let slope = |f: &crate::spectral::WeylFit| {
        f.fit
            .map(|f| format!("exponent {:.4}, R^2 {:.4}", f.slope, f.r_squared))
            .unwrap_or_else(|| format!("no fit, counts {:?}", f.counts))
    };
    let criteria = vec![
        CriterionResult::new(
            6,
            "circle Weyl oracle",
            pass_if(oracle.checked > 0 && oracle.agreeing == oracle.checked),
            format!(
                "{}/{} points within +-{tol}, max deviation {}",
                oracle.agreeing, oracle.checked, oracle.max_deviation
            ),
        ),
        CriterionResult::new(
            8,
            "circle-multiplier Weyl exponent",
            circle.verdict,
            format!("{} in [-1.05, -0.95]", slope(&circle)),
        ),
        CriterionResult::new(
            8,
            format!(
                "disk E_lambda Weyl exponent, {}x{}, lambda = {lambda}",
                cfg.grid.rings, cfg.grid.angles
            ),
            disk_fit.verdict,
            format!("{} in [-1.25, -0.8] over [{:.2e}, {:.2e}]", slope(&disk_fit), fit_mu[10], fit_mu[0]),
        ),
    ];
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Weyl,
        csv_columns: vec!["mu", "count_empirical", "weyl_rhs", "count_W_circle"],
        csv_rows: rows,
        criteria,
        results: json!({
            "s_norm": sp.s_norm,
            "e_norm": sp.norm,
            "circle_oracle": oracle,
            "circle_fit": circle,
            "disk_fit": disk_fit,
            "unknowns": sp.singular.len(),
        }),
        matrices: if dump { grid_matrices(&sp.grid, lambda)? } else { Vec::new() },
    })
}

fn birman(cfg: &ExperimentConfig, dump: bool) -> Result<ExperimentOutput> {
    let synthetic = birman_synthetic_suite(100, 5, cfg.seed)?;
    let sp = disk_spectrum(cfg)?;
    let m = &cfg.mu_grid;
    let grid_mu = mu_grid(m.lo * sp.norm, m.hi * sp.norm, m.points);
    let rep = birman_from_spectrum(
        &sp.singular,
        sp.s_norm,
        cfg.geometry.radius,
        cfg.sweep.lambda,
        &grid_mu,
        cfg.tolerances.count,
    )?;
    let strict = rep.rows.iter().filter(|r| r.holds).count();
    let worst = rep.rows.iter().map(|r| r.excess).max().unwrap_or(0);
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.mu),
                r.count_e.to_string(),
                r.count_w.to_string(),
                r.excess.to_string(),
                r.within_tolerance.to_string(),
            ]
        })
        .collect();
    let criteria = vec![
        CriterionResult::new(
            7,
            "Birman synthetic suite",
            pass_if(synthetic.passed == synthetic.instances),
            format!("{}/{} instances", synthetic.passed, synthetic.instances),
        ),
        CriterionResult::new(
            7,
            format!("Birman disk, lambda = {}, {} mu points", cfg.sweep.lambda, rep.rows.len()),
            rep.verdict,
            format!(
                "strict at {strict}/{}, worst excess {worst} (tolerance {})",
                rep.rows.len(),
                rep.tolerance
            ),
        ),
    ];
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Birman,
        csv_columns: vec!["mu", "count_E", "count_W", "excess", "within_tolerance"],
        csv_rows: rows,
        criteria,
        results: json!({ "synthetic": synthetic, "disk": rep }),
        matrices: if dump { grid_matrices(&sp.grid, cfg.sweep.lambda)? } else { Vec::new() },
    })
}

/// Coarse 1D grid used for the dense spectrum-confinement check.
const CONFINEMENT_H: f64 = 1.0 / 256.0;
/// Discrete thresholds are only sought where √λ h stays resolved.
const DISCRETE_THRESHOLD_LAMBDA_MAX: f64 = 1e6;

fn threshold(cfg: &ExperimentConfig, dump: bool) -> Result<ExperimentOutput> {
    let domain = domain1d(cfg)?;
    let e1 = exact_1d_e_norm(&domain, 1.0)?;
    let fr = &cfg.mu_grid.threshold_fractions;
    let exact = fr
        .par_iter()
        .map(|&f| exact_zero_threshold(&domain, f * e1, cfg.sweep.lambda_max))
        .collect::<Result<Vec<_>>>()?;
    let products: Vec<f64> = exact.iter().map(|r| r.lambda0 * r.mu * r.mu).collect();
    let spread = products.iter().cloned().fold(0.0, f64::max) / products.iter().cloned().fold(f64::INFINITY, f64::min);
    let found = exact.iter().all(|r| r.verdict == Verdict::Pass);

    let grid = Grid::one_d(domain, cfg.grid.h)?;
    let d1 = e_lambda_norm(&grid, 1.0)?;
    let discrete = fr
        .par_iter()
        .map(|&f| counting_zero_threshold(&grid, f * d1, DISCRETE_THRESHOLD_LAMBDA_MAX))
        .collect::<Result<Vec<_>>>()?;

    let coarse = Grid::one_d(domain, CONFINEMENT_H)?;
    let confinement = cfg
        .sweep
        .lambda_sweep
        .par_iter()
        .map(|&l| -> Result<(f64, f64, f64)> {
            let ev = eigen_spectrum_e(&coarse, l)?;
            let norm = e_lambda_norm(&coarse, l)?;
            let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok((l, lo / norm, hi / norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let bound = 1.0 + cfg.tolerances.confinement;
    let confined = confinement.iter().all(|&(_, lo, hi)| lo >= -bound && hi <= bound);
    let worst = confinement.iter().map(|&(_, lo, hi)| lo.abs().max(hi.abs())).fold(0.0, f64::max);

    let mut rows = Vec::new();
    for (name, reps) in [("exact", &exact), ("discrete", &discrete)] {
        for (f, r) in fr.iter().zip(reps.iter()) {
            let reached = r.verdict == Verdict::Pass;
            rows.push(vec![
                name.to_string(),
                num(*f),
                num(r.mu),
                if reached { num(r.lambda0) } else { "NA".into() },
                if reached { num(r.lambda0 * r.mu * r.mu) } else { "NA".into() },
            ]);
        }
    }
    let criteria = vec![
        CriterionResult::new(
            9,
            format!("spectrum of E_lambda in [-|E|, |E|], h = {CONFINEMENT_H}"),
            pass_if(confined),
            format!(
                "max |eigenvalue| / |E| = {worst:.8} over {} lambdas",
                confinement.len()
            ),
        ),
        CriterionResult::new(
            9,
            "threshold lambda0 ~ mu^-2",
            if !found { Verdict::Inconclusive } else { pass_if(spread <= 1.5) },
            format!(
                "lambda0 mu^2 = {} (spread {spread:.4} <= 1.5)",
                products.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(", ")
            ),
        ),
    ];
    Ok(ExperimentOutput {
        experiment: ExperimentKind::Threshold,
        csv_columns: vec!["pipeline", "mu_fraction", "mu", "lambda0", "lambda0_mu2"],
        csv_rows: rows,
        criteria,
        results: json!({
            "e1_exact": e1,
            "e1_discrete": d1,
            "exact": exact,
            "discrete": discrete,
            "spread": spread,
            "confinement": confinement,
        }),
        matrices: if dump { grid_matrices(&grid, 1.0)? } else { Vec::new() },
    })
}

/// Config for one member of `report-all`: that experiment's defaults with
/// the parent's seed, geometry, loads and tolerances.
pub fn sub_config(parent: &ExperimentConfig, kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(kind);
    c.seed = parent.seed;
    c.geometry = parent.geometry.clone();
    c.loads = parent.loads.clone();
    c.tolerances = parent.tolerances.clone();
    c.output = parent.output.clone();
    c
}

/// Runs the experiment(s) of a validated config without writing files.
pub fn compute(cfg: &ExperimentConfig, dump_matrices: bool) -> Result<Vec<ExperimentOutput>> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs.join("\n")));
    }
    use ExperimentKind::*;
    let one = |c: &ExperimentConfig| match c.experiment {
        Rate1d => rate1d(c, dump_matrices),
        Rate2d => rate2d(c, dump_matrices),
        Green => green(c, dump_matrices),
        Symbols => symbols(c),
        Bounds => bounds(c),
        Nbound => nbound(c),
        Compose => compose(c),
        Weyl => weyl(c, dump_matrices),
        Birman => birman(c, dump_matrices),
        Threshold => threshold(c, dump_matrices),
        ReportAll => unreachable!("expanded below"),
    };
    if cfg.experiment == ReportAll {
        ExperimentKind::ALL
            .iter()
            .filter(|&&k| k != ReportAll)
            .map(|&k| one(&sub_config(cfg, k)))
            .collect()
    } else {
        Ok(vec![one(cfg)?])
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub dump_matrices: bool,
    pub print: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub verdict: Verdict,
    pub criteria: Vec<CriterionResult>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

fn artifact_header(cfg: &ExperimentConfig, kind: ExperimentKind) -> String {
    let t = &cfg.tolerances;
    format!(
        "# schema_version={SCHEMA_VERSION} experiment={kind} config_hash={} seed={} tolerances=solver:{:e};green_residual:{:e};green_ratio:{}..{};nonlocal:{:e};count:{};root:{:e};homogeneity:{:e};confinement:{:e}",
        cfg.hash(),
        cfg.seed,
        t.solver,
        t.green_residual,
        t.green_ratio_lo,
        t.green_ratio_hi,
        t.nonlocal,
        t.count,
        t.root,
        t.homogeneity,
        t.confinement
    )
}

fn write(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(path, text)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Computes, writes `<experiment>.csv` and `summary.json` under
/// `opts.out_dir` and, when asked, prints one verdict line per check.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let outputs = compute(cfg, opts.dump_matrices)?;
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut files = Vec::new();
    let multi = outputs.len() > 1;
    for o in &outputs {
        let name = o.experiment.name();
        let header = artifact_header(cfg, o.experiment);
        write(&opts.out_dir.join(format!("{name}.csv")), &o.csv_text(&header), &mut files)?;
        for (m, mat) in &o.matrices {
            let file = if multi { format!("{name}_{m}.txt") } else { format!("{m}.txt") };
            write(
                &opts.out_dir.join(file),
                &format!("{header}\n{}", mat.to_coordinate_text()),
                &mut files,
            )?;
        }
    }
    let criteria: Vec<CriterionResult> = outputs.iter().flat_map(|o| o.criteria.clone()).collect();
    let verdict = outputs.iter().fold(Verdict::Pass, |v, o| v.and(o.verdict()));
    let results: serde_json::Map<String, Value> = outputs
        .iter()
        .map(|o| (o.experiment.name().to_string(), o.results.clone()))
        .collect();
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment.name(),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "tolerances": cfg.tolerances,
        "config": cfg,
        "verdict": verdict,
        "criteria": criteria,
        "results": results,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Numeric(e.to_string()))?;
    write(&opts.out_dir.join("summary.json"), &format!("{text}\n"), &mut files)?;
    if opts.print {
        for c in &criteria {
            println!("{}", c.line());
        }
        println!("verdict: {}", verdict_tag(verdict));
    }
    Ok(RunSummary {
        verdict,
        criteria,
        files,
    })
}

/// Maps a run result to the process exit code.
pub fn exit_code(r: &Result<RunSummary>) -> i32 {
    match r {
        Ok(s) => s.exit_code(),
        Err(Error::Config(_)) => EXIT_CONFIG,
        Err(_) => Verdict::Fail.exit_code(),
    }
}
