//! Counting functions for E_λ and 𝒲_λ, the ‖S‖ estimate, the Weyl
//! right-hand side, Birman's inequality and the μ^{1−n} exponent.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::coupling::CouplingSolver;
use crate::discrete::{assemble_b, Grid, GridKind};
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, judge_slope, LogLogFit, Verdict};
use crate::geometry::{chart_atlas, metric_matrix, unit_normal, BoundaryChart, Domain2D};
use crate::linalg::{lanczos_extremes, DenseSymmetricMatrix, LanczosOptions, SpdSolver, MAX_DIM};

pub const DEFAULT_COUNT_TOLERANCE: usize = 2;
pub const WEYL_ATLAS_CHARTS: usize = 64;
pub const MIN_SMALL_END_COUNT: usize = 5;
pub const WEYL_MIN_R2: f64 = 0.95;

/// N(μ; T): number of values strictly greater than μ.
pub fn counting_function(values: &[f64], mu: f64) -> usize {
    values.iter().filter(|&&v| v > mu).count()
}

/// Same count on an ascending list, by binary search.
pub fn counting_function_sorted(sorted: &[f64], mu: f64) -> usize {
    sorted.len() - sorted.partition_point(|&v| v <= mu)
}

/// |eigenvalues| sorted ascending: the singular values of a symmetric
/// operator, which is what N(μ; E_λ) counts.
pub fn singular_values(eigenvalues: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = eigenvalues.iter().map(|v| v.abs()).collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Geometric grid of `n` points from `hi` down to `lo`.
pub fn mu_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g = crate::fit::log_space(lo, hi, n);
    g.reverse();
    g
}

/// Full spectrum of E_λ, ascending, from column-wise densification.
pub fn eigen_spectrum_e(grid: &Grid, lambda: f64) -> Result<Vec<f64>> {
    let n = grid.outer_nodes.len();
    if n > MAX_DIM {
        return Err(Error::Resource(format!(
            "exterior dimension {n} exceeds the dense limit {MAX_DIM}"
        )));
    }
    CouplingSolver::new(grid, lambda)?.dense_symmetric()?.eigenvalues()
}

/// S = γ₁B⁻¹ as a pair of actions: S: L²(Ω₂) → L²(Γ₁) and its adjoint.
struct SOperator<'g> {
    grid: &'g Grid,
    b: SpdSolver,
    mass: Vec<f64>,
}

impl<'g> SOperator<'g> {
    fn new(grid: &'g Grid) -> Result<Self> {
        let b = assemble_b(grid)?;
        Ok(Self {
            grid,
            b: b.solver()?,
            mass: b.mass,
        })
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = f.iter().zip(&self.mass).map(|(a, m)| a * m).collect();
        let v = self.b.solve(&rhs).expect("factorized solve");
        // exterior stencils; Γ₁ values of B⁻¹f are zero
        self.grid
            .gamma1_exterior
            .iter()
            .map(|st| {
                st.iter()
                    .filter_map(|&(j, c)| self.grid.outer_index[j].map(|k| c * v[k]))
                    .sum()
            })
            .collect()
    }

    /// S* = M⁻¹Sᵀ W_Γ, which works out to K_B⁻¹ Trᵀ W_Γ.
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; self.mass.len()];
        for ((st, &w), &yi) in self.grid.gamma1_exterior.iter().zip(&self.grid.interface_weights).zip(y) {
            for &(j, c) in st {
                if let Some(k) = self.grid.outer_index[j] {
                    rhs[k] += c * w * yi;
                }
            }
        }
        self.b.solve(&rhs).expect("factorized solve")
    }
}

/// ‖S‖ for S = γ₁B⁻¹ : L²(Ω₂) → L²(Γ₁), from the top of S*S.
pub fn s_norm_estimate(grid: &Grid) -> Result<f64> {
    let s = SOperator::new(grid)?;
    let action = |f: &[f64]| s.adjoint(&s.apply(f));
    let r = lanczos_extremes(action, s.mass.len(), &s.mass, &LanczosOptions::default())?;
    Ok(r.largest.sqrt())
}

/// Gram matrix S S* on Γ₁ (one solve per interface node).
pub fn s_gram_matrix(grid: &Grid) -> Result<DenseSymmetricMatrix> {
    let s = SOperator::new(grid)?;
    let nb = grid.interface.len();
    let cols: Vec<Vec<f64>> = (0..nb)
        .map(|j| {
            let mut e = vec![0.0; nb];
            e[j] = 1.0;
            s.apply(&s.adjoint(&e))
        })
        .collect();
    // symmetric in the W_Γ inner product; return W^{1/2} (SS*) W^{-1/2}
    let w = &grid.interface_weights;
    DenseSymmetricMatrix::from_fn(nb, |i, j| {
        0.5 * (cols[j][i] * (w[i] / w[j]).sqrt() + cols[i][j] * (w[j] / w[i]).sqrt())
    })
}

/// Eigenvalue of 𝒲_λ on the circle of radius R for angular mode k.
pub fn w_circle_eigenvalue(radius: f64, lambda: f64, k: i64) -> Result<f64> {
    if !(lambda >= 1.0) || !(radius > 0.0) {
        return Err(Error::Domain(format!("need lambda >= 1 and R > 0, got {lambda}, {radius}")));
    }
    let xi = k.unsigned_abs() as f64 / radius;
    Ok(1.0 / (xi + (xi * xi + lambda).sqrt()))
}

/// #{k ∈ ℤ : w_k > μ}, by enumeration.
pub fn counting_w_circle(radius: f64, lambda: f64, mu: f64) -> Result<usize> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    if w_circle_eigenvalue(radius, lambda, 0)? <= mu {
        return Ok(0);
    }
    let mut k = 1i64;
    while w_circle_eigenvalue(radius, lambda, k)? > mu {
        k += 1;
    }
    Ok(1 + 2 * (k as usize - 1))
}

/// Weyl prediction R(1/μ − λμ)₊ for the circle.
pub fn weyl_circle_prediction(radius: f64, lambda: f64, mu: f64) -> f64 {
    (radius * (1.0 / mu - lambda * mu)).max(0.0)
}

/// I_n(x′) = ∫_{S^{n−2}} (1 − |ν̂′·θ′|²)^{−(n−1)/2} dS for n ∈ {2, 3}.
pub fn i_n_quadrature(chart: &BoundaryChart, xp: &[f64], n: usize) -> Result<f64> {
    if chart.dim() + 1 != n || !(n == 2 || n == 3) {
        return Err(Error::Contract(format!(
            "I_n needs n in {{2, 3}} matching the chart, got n = {n}, chart dim {}",
            chart.dim()
        )));
    }
    let nu = unit_normal(chart, xp)?;
    let nup = &nu[..n - 1];
    let len2: f64 = nup.iter().map(|v| v * v).sum();
    if len2 >= 1.0 {
        return Err(Error::Domain("tangential normal component has length >= 1".into()));
    }
    if n == 2 {
        return Ok(2.0 / (1.0 - len2).sqrt());
    }
    let m = 256;
    let s: f64 = (0..m)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / m as f64;
            let d = nup[0] * t.cos() + nup[1] * t.sin();
            1.0 / (1.0 - d * d)
        })
        .sum();
    Ok(s * 2.0 * PI / m as f64)
}

/// Right-hand side of the Weyl formula for N(μ; E_λ), n = 2:
/// (4π)⁻¹ ∫_{Γ₁} I₂ (√A_nn/μ′ − λμ′/√A_nn)₊ dS with μ′ = ‖S‖⁻²μ.
/// The bracket is the ξ′-measure of {𝒲_λ > μ′} divided by I₂/2.
pub fn weyl_rhs(domain: &Domain2D, lambda: f64, mu: f64, s_norm: f64) -> Result<f64> {
    if !(mu > 0.0 && s_norm > 0.0) {
        return Err(Error::Domain("mu and s_norm must be positive".into()));
    }
    let mup = mu / (s_norm * s_norm);
    let atlas = chart_atlas(domain, WEYL_ATLAS_CHARTS)?;
    let mut total = 0.0;
    for e in &atlas {
        let a = metric_matrix(&e.chart, &[0.0])?.a_nn().sqrt();
        let bracket = (a / mup - lambda * mup / a).max(0.0);
        total += e.weight * i_n_quadrature(&e.chart, &[0.0], 2)? * bracket;
    }
    Ok(total / (4.0 * PI))
}

#[derive(Debug, Clone, Serialize)]
pub struct CountingReport {
    pub eigenvalues: Vec<f64>,
    pub mu_grid: Vec<f64>,
    pub counts: Vec<usize>,
    pub weyl_rhs: Vec<f64>,
    pub s_norm: f64,
}

pub fn counting_report(grid: &Grid, lambda: f64, mu_grid: &[f64]) -> Result<CountingReport> {
    let GridKind::Polar { domain, .. } = grid.kind else {
        return Err(Error::Domain("counting reports need the polar disk".into()));
    };
    let eigenvalues = eigen_spectrum_e(grid, lambda)?;
    let s_norm = s_norm_estimate(grid)?;
    let sv = singular_values(&eigenvalues);
    let counts = mu_grid.iter().map(|&m| counting_function_sorted(&sv, m)).collect();
    let weyl = mu_grid
        .iter()
        .map(|&m| weyl_rhs(&domain, lambda, m, s_norm))
        .collect::<Result<_>>()?;
    Ok(CountingReport {
        eigenvalues,
        mu_grid: mu_grid.to_vec(),
        counts,
        weyl_rhs: weyl,
        s_norm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BirmanRow {
    pub mu: f64,
    pub count_e: usize,
    pub count_w: usize,
    /// N(μ; E) − N(‖S‖⁻²μ; 𝒲), positive when the inequality is violated.
    pub excess: i64,
    pub holds: bool,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BirmanReport {
    pub lambda: f64,
    pub s_norm: f64,
    pub tolerance: usize,
    pub rows: Vec<BirmanRow>,
    pub verdict: Verdict,
}

/// N(μ; E_λ) ≤ N(‖S‖⁻²μ; 𝒲_λ) with 𝒲_λ enumerated on the circle.
pub fn birman_inequality_check(
    grid: &Grid,
    lambda: f64,
    mu_grid: &[f64],
    tolerance: usize,
) -> Result<BirmanReport> {
    let GridKind::Polar { domain, .. } = grid.kind else {
        return Err(Error::Domain("the Birman disk experiment needs the polar disk".into()));
    };
    let sv = singular_values(&eigen_spectrum_e(grid, lambda)?);
    let s_norm = s_norm_estimate(grid)?;
    birman_from_spectrum(&sv, s_norm, domain.inclusion.radius, lambda, mu_grid, tolerance)
}

pub fn birman_from_spectrum(
    singular: &[f64],
    s_norm: f64,
    radius: f64,
    lambda: f64,
    mu_grid: &[f64],
    tolerance: usize,
) -> Result<BirmanReport> {
    let mut rows = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let count_e = counting_function_sorted(singular, mu);
        let count_w = counting_w_circle(radius, lambda, mu / (s_norm * s_norm))?;
        let excess = count_e as i64 - count_w as i64;
        rows.push(BirmanRow {
            mu,
            count_e,
            count_w,
            excess,
            holds: excess <= 0,
            within_tolerance: excess <= tolerance as i64,
        });
    }
    let verdict = if rows.iter().all(|r| r.within_tolerance) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(BirmanReport {
        lambda,
        s_norm,
        tolerance,
        rows,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SyntheticBirman {
    pub instances: usize,
    pub passed: usize,
}

/// Brute-force check of N(μ; SᵀT₂S) ≤ N(μ; T₂) for ‖S‖ = 1 and
/// T₂ = diag(1, 1/2, 1/3), at every eigenvalue of either operator and
/// just below it.
pub fn birman_synthetic_suite(instances: usize, columns: usize, seed: u64) -> Result<SyntheticBirman> {
    let t2 = [1.0, 0.5, 1.0 / 3.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    for _ in 0..instances {
        let mut s: Vec<f64> = (0..3 * columns).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let sts = DenseSymmetricMatrix::from_fn(columns, |i, j| (0..3).map(|r| s[r * columns + i] * s[r * columns + j]).sum())?;
        let top = *sts.eigenvalues()?.last().expect("nonempty");
        let scale = top.sqrt();
        s.iter_mut().for_each(|v| *v /= scale);
        let t1 = DenseSymmetricMatrix::from_fn(columns, |i, j| {
            (0..3).map(|r| s[r * columns + i] * t2[r] * s[r * columns + j]).sum()
        })?;
        let e1 = singular_values(&t1.eigenvalues()?);
        let e2 = singular_values(&t2);
        let probes = e1.iter().chain(&e2).flat_map(|&v| [v, v * (1.0 - 1e-9)]).filter(|v| *v > 1e-12);
        if probes.into_iter().all(|mu| counting_function_sorted(&e1, mu) <= counting_function_sorted(&e2, mu)) {
            passed += 1;
        }
    }
    Ok(SyntheticBirman { instances, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylFit {
    pub mu: Vec<f64>,
    pub counts: Vec<usize>,
    pub fit: Option<LogLogFit>,
    pub verdict: Verdict,
}

/// Slope of log N(μ) against log μ over `mu` (one decade or more).
pub fn weyl_exponent_fit(singular: &[f64], mu: &[f64], lo: f64, hi: f64) -> Result<WeylFit> {
    let (mn, mx) = mu.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
    if !(mx / mn >= 10.0 * (1.0 - 1e-12)) {
        return Err(Error::Contract("mu grid must span a decade".into()));
    }
    let counts: Vec<usize> = mu.iter().map(|&m| counting_function_sorted(singular, m)).collect();
    let small_end = mu.iter().zip(&counts).min_by(|a, b| a.0.total_cmp(b.0)).map(|(_, &c)| c).unwrap_or(0);
    if small_end < MIN_SMALL_END_COUNT || counts.contains(&0) {
        return Ok(WeylFit {
            mu: mu.to_vec(),
            counts,
            fit: None,
            verdict: Verdict::Inconclusive,
        });
    }
    let y: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let fit = fit_loglog(mu, &y)?;
    Ok(WeylFit {
        mu: mu.to_vec(),
        counts,
        fit: Some(fit),
        verdict: judge_slope(&fit, lo, hi, WEYL_MIN_R2),
    })
}

/// The pure circle model: N(μ; 𝒲_λ) by enumeration.
pub fn circle_weyl_fit(radius: f64, lambda: f64, mu: &[f64], lo: f64, hi: f64) -> Result<WeylFit> {
    let counts = mu
        .iter()
        .map(|&m| counting_w_circle(radius, lambda, m))
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let fit = fit_loglog(mu, &y)?;
    Ok(WeylFit {
        mu: mu.to_vec(),
        counts,
        fit: Some(fit),
        verdict: judge_slope(&fit, lo, hi, WEYL_MIN_R2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::e_lambda_norm;
    use crate::geometry::{BoundaryChart, Domain1D};
    use crate::symbols::symbol_w;

    #[test]
    fn counting_examples() {
        assert_eq!(counting_function(&[3.0, 1.0, 0.5], 0.7), 2);
        assert_eq!(counting_function(&[3.0, 1.0, 0.5], 5.0), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let n = rng.random_range(0..40);
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let mu = rng.random_range(0.0..1.0);
            let direct = counting_function(&v, mu);
            v.sort_by(f64::total_cmp);
            assert_eq!(direct, counting_function_sorted(&v, mu));
        }
    }

    #[test]
    fn circle_eigenvalues() {
        assert!((w_circle_eigenvalue(1.0, 100.0, 0).unwrap() - 0.1).abs() < 1e-15);
        let w = w_circle_eigenvalue(1.0, 100.0, 10).unwrap();
        assert!((w - 0.041421).abs() < 1e-6);
        assert_eq!(w, w_circle_eigenvalue(1.0, 100.0, -10).unwrap());
        let chart = BoundaryChart::flat(1);
        let s = symbol_w(&chart, &[0.0], &[10.0], 100.0).unwrap();
        assert!((s - w).abs() < 1e-15);
        for k in 0..50 {
            assert!(w_circle_eigenvalue(2.0, 50.0, k + 1).unwrap() < w_circle_eigenvalue(2.0, 50.0, k).unwrap());
        }
    }

    #[test]
    fn circle_count_vs_prediction() {
        let n = counting_w_circle(1.0, 1e4, 0.002).unwrap() as f64;
        assert!((n - 480.0).abs() <= 2.0, "{n}");
        assert_eq!(counting_w_circle(1.0, 1e4, 0.011).unwrap(), 0);
        let d = Domain2D::unit_disk_in_polar();
        let r = weyl_rhs(&d, 1e4, 0.002, 1.0).unwrap();
        assert!((r - 480.0).abs() < 1e-6, "{r}");
        assert_eq!(weyl_rhs(&d, 1e4, 10.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn i_n_values_and_bounds() {
        assert!((i_n_quadrature(&BoundaryChart::flat(1), &[0.0], 2).unwrap() - 2.0).abs() < 1e-15);
        // ν̂′₁ = 0.6 needs ∇χ = −0.75
        let c = BoundaryChart::linear(vec![-0.75]);
        assert!((i_n_quadrature(&c, &[0.0], 2).unwrap() - 2.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let c = BoundaryChart::linear(g);
            let a = metric_matrix(&c, &[0.0, 0.0]).unwrap().a_nn();
            let i3 = i_n_quadrature(&c, &[0.0, 0.0], 3).unwrap();
            assert!(2.0 * PI * (1.0 - 1e-12) <= i3 && i3 <= 2.0 * PI * a * (1.0 + 1e-12));
            assert!((i3 - 2.0 * PI * a.sqrt()).abs() < 1e-9 * i3);
        }
    }

    #[test]
    fn synthetic_birman() {
        let r = birman_synthetic_suite(100, 5, 1).unwrap();
        assert_eq!(r.passed, 100);
    }

    #[test]
    fn s_norm_matches_gram_in_one_d() {
        let g = Grid::one_d(Domain1D::default(), 1.0 / 512.0).unwrap();
        let s = s_norm_estimate(&g).unwrap();
        let gram = s_gram_matrix(&g).unwrap().eigenvalues().unwrap();
        assert!((s - gram[1].sqrt()).abs() < 1e-8 * s);
        // rows of S are −1 on each exterior piece: Gram = diag(a₁, L − a₂),
        // up to the O(h) half cell at Γ₁ that lumping leaves out of Ω₂
        assert!((s * s - 0.5).abs() < 1.0 / 512.0, "{s} {gram:?}");
        let g2 = Grid::one_d(Domain1D::default(), 1.0 / 1024.0).unwrap();
        assert!((s_norm_estimate(&g2).unwrap() / s - 1.0).abs() < 1e-2);
    }

    #[test]
    fn one_d_spectrum_confined() {
        let g = Grid::one_d(Domain1D::default(), 1.0 / 256.0).unwrap();
        let ev = eigen_spectrum_e(&g, 100.0).unwrap();
        let norm = e_lambda_norm(&g, 100.0).unwrap();
        let top = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((top / norm - 1.0).abs() < 1e-6);
        let sv = singular_values(&ev);
        assert!(counting_function_sorted(&sv, 1e-9 * norm) <= 2);
    }

    #[test]
    fn circle_model_exponent() {
        let mu = mu_grid(1e-4, 1e-3, 11);
        let f = circle_weyl_fit(1.0, 1e3, &mu, -1.05, -0.95).unwrap();
        assert_eq!(f.verdict, Verdict::Pass, "{:?}", f.fit);
    }
}
