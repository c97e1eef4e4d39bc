//! The difference operator E_λ = r A_λ⁻¹ e − B⁻¹, its norm and decay rate,
//! Green's formulas, the closed-form 1D boundary operators and the
//! exterior solve with the nonlocal interface condition.

use rayon::prelude::*;
use serde::Serialize;

use crate::discrete::{
    assemble_a_lambda, assemble_b, extend, extend_with_interface, poisson_k, restrict, trace_gamma0,
    trace_gamma1, Grid, GridKind, OuterCondition, Side,
};
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, judge_slope, Verdict};
use crate::geometry::{BoundaryChart, Domain1D};
use crate::linalg::{lanczos_extremes, wdot, DenseSymmetricMatrix, LanczosOptions, SpdSolver};
use crate::symbols::{symbol_n, symbol_w};

pub const RATE_MIN_R2: f64 = 0.95;
pub const NORM_TOL: f64 = 1e-8;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be >= 1, got {lambda}")));
    }
    Ok(())
}

/// Factorized A_λ and B on one grid, for repeated applications of E_λ.
pub struct CouplingSolver<'g> {
    pub grid: &'g Grid,
    pub lambda: f64,
    a: SpdSolver,
    b: SpdSolver,
    mass: Vec<f64>,
    outer_mass: Vec<f64>,
}

impl<'g> CouplingSolver<'g> {
    pub fn new(grid: &'g Grid, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let a = assemble_a_lambda(grid, lambda)?;
        let b = assemble_b(grid)?;
        Ok(Self {
            grid,
            lambda,
            a: a.solver()?,
            b: b.solver()?,
            mass: a.mass,
            outer_mass: b.mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.outer_mass.len()
    }

    pub fn outer_mass(&self) -> &[f64] {
        &self.outer_mass
    }

    /// A_λ⁻¹ e f on the whole grid.
    pub fn a_solve_extended(&self, f: &[f64]) -> Result<Vec<f64>> {
        let ef = extend(self.grid, f)?;
        let rhs: Vec<f64> = ef.iter().zip(&self.mass).map(|(a, m)| a * m).collect();
        self.a.solve(&rhs)
    }

    pub fn b_solve(&self, g: &[f64]) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = g.iter().zip(&self.outer_mass).map(|(a, m)| a * m).collect();
        self.b.solve(&rhs)
    }

    pub fn apply_e(&self, f: &[f64]) -> Result<Vec<f64>> {
        let u = restrict(self.grid, &self.a_solve_extended(f)?)?;
        let v = self.b_solve(f)?;
        Ok(u.iter().zip(&v).map(|(a, b)| a - b).collect())
    }

    /// Spectral radius of E_λ in L²(Ω₂).
    pub fn norm(&self) -> Result<f64> {
        let opts = LanczosOptions {
            tol: NORM_TOL,
            ..LanczosOptions::default()
        };
        let action = |x: &[f64]| self.apply_e(x).expect("factorized solves do not fail");
        Ok(lanczos_extremes(action, self.dim(), &self.outer_mass, &opts)?.spectral_radius)
    }

    /// M^{1/2} E M^{-1/2}, the symmetric matrix with the spectrum of E_λ.
    pub fn dense_symmetric(&self) -> Result<DenseSymmetricMatrix> {
        let n = self.dim();
        let sq: Vec<f64> = self.outer_mass.iter().map(|m| m.sqrt()).collect();
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0 / sq[j];
                self.apply_e(&e).map(|c| c.iter().zip(&sq).map(|(a, s)| a * s).collect())
            })
            .collect::<Result<_>>()?;
        DenseSymmetricMatrix::from_fn(n, |i, j| 0.5 * (cols[j][i] + cols[i][j]))
    }
}

pub fn e_lambda_apply(grid: &Grid, lambda: f64, f: &[f64]) -> Result<Vec<f64>> {
    CouplingSolver::new(grid, lambda)?.apply_e(f)
}

pub fn e_lambda_norm(grid: &Grid, lambda: f64) -> Result<f64> {
    CouplingSolver::new(grid, lambda)?.norm()
}

/// (γ₁u at a₁, γ₁u at a₂) ↦ (γ₀u at a₁, γ₀u at a₂) for (−∂² + λ)u = 0 on an
/// interval of length ℓ, with γ₁ the derivative pointing into the interval.
pub fn exact_1d_n_matrix(lambda: f64, ell: f64) -> Result<[[f64; 2]; 2]> {
    if !(lambda > 0.0 && ell > 0.0) {
        return Err(Error::Domain(format!("need lambda > 0 and length > 0, got {lambda}, {ell}")));
    }
    let k = lambda.sqrt();
    let s = k * ell;
    // coth and csch, written to stay finite for large s
    let e = (-2.0 * s).exp();
    let coth = (1.0 + e) / (1.0 - e);
    let csch = 2.0 * (-s).exp() / (1.0 - e);
    Ok([[-coth / k, -csch / k], [-csch / k, -coth / k]])
}

/// Exact 𝒲_λ in 1D. With a Neumann outer boundary the exterior harmonic
/// functions are piecewise constant, so γ₁𝒦 = 0 and 𝒲_λ = −𝒩_λ.
pub fn exact_1d_w_matrix(domain: &Domain1D, lambda: f64) -> Result<[[f64; 2]; 2]> {
    let n = exact_1d_n_matrix(lambda, domain.inclusion_length())?;
    Ok([[-n[0][0], -n[0][1]], [-n[1][0], -n[1][1]]])
}

/// ‖E_λ‖ from E_λ = Sᵀ𝒲_λS, S = γ₁B⁻¹. The two rows of S are −1 on
/// (0, a₁) and −1 on (a₂, L), so SSᵀ = diag(a₁, L − a₂).
pub fn exact_1d_e_norm(domain: &Domain1D, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let w = exact_1d_w_matrix(domain, lambda)?;
    let g = [domain.inclusion_left.sqrt(), (domain.outer_length - domain.inclusion_right).sqrt()];
    let a = w[0][0] * g[0] * g[0];
    let d = w[1][1] * g[1] * g[1];
    let b = w[0][1] * g[0] * g[1];
    let mean = 0.5 * (a + d);
    Ok(mean + (0.25 * (a - d) * (a - d) + b * b).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateFit {
    pub fn from_values(lambdas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Contract("lambda sweep must be strictly increasing".into()));
        }
        let span = lambdas.last().unwrap_or(&1.0) / lambdas.first().unwrap_or(&1.0);
        if !(span >= 1e3 * (1.0 - 1e-12)) {
            return Err(Error::Contract("lambda sweep must span three or more decades".into()));
        }
        let fit = fit_loglog(&lambdas, &values)?;
        Ok(Self {
            lambdas,
            values,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
        })
    }

    pub fn verdict(&self, lo: f64, hi: f64) -> Verdict {
        let fit = crate::fit::LogLogFit {
            slope: self.slope,
            intercept: self.intercept,
            r_squared: self.r_squared,
            points: self.lambdas.len(),
        };
        judge_slope(&fit, lo, hi, RATE_MIN_R2)
    }
}

pub const DEFAULT_RATE_SWEEP: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

pub fn convergence_rate_fit(grid: &Grid, lambdas: &[f64]) -> Result<RateFit> {
    let values = lambdas
        .par_iter()
        .map(|&l| e_lambda_norm(grid, l))
        .collect::<Result<Vec<_>>>()?;
    RateFit::from_values(lambdas.to_vec(), values)
}

pub fn exact_rate_fit(domain: &Domain1D, lambdas: &[f64]) -> Result<RateFit> {
    let values = lambdas
        .iter()
        .map(|&l| exact_1d_e_norm(domain, l))
        .collect::<Result<Vec<_>>>()?;
    RateFit::from_values(lambdas.to_vec(), values)
}

/// Circulant matrix of a circle Fourier multiplier m(k/R) on `n`
/// equispaced points of a circle of radius R.
pub fn circle_multiplier_matrix(n: usize, radius: f64, m: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    let half = (n / 2) as i64;
    let modes: Vec<(i64, f64)> = (-half + 1..=half)
        .map(|k| m(k as f64 / radius).map(|v| (k, v)))
        .collect::<Result<_>>()?;
    let row: Vec<f64> = (0..n)
        .map(|d| {
            let t = 2.0 * std::f64::consts::PI * d as f64 / n as f64;
            modes.iter().map(|&(k, v)| v * (k as f64 * t).cos()).sum::<f64>() / n as f64
        })
        .collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = row[(i + n - j) % n];
        }
    }
    Ok(a)
}

/// 𝒩_λ on Γ₁ as a dense matrix: exact in 1D, principal-symbol circle
/// multiplier 1/η at ξ′ = k/R on the polar disk.
pub fn interface_n_matrix(grid: &Grid, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    match grid.kind {
        GridKind::OneD { domain, .. } => {
            let n = exact_1d_n_matrix(lambda, domain.inclusion_length())?;
            Ok(vec![n[0][0], n[0][1], n[1][0], n[1][1]])
        }
        GridKind::Polar { domain, ntheta, .. } => {
            let chart = BoundaryChart::flat(1);
            circle_multiplier_matrix(ntheta, domain.inclusion.radius, |xi| {
                Ok(symbol_n(&chart, &[0.0], &[xi], lambda)?.re)
            })
        }
        GridKind::Cartesian { .. } => Err(Error::Domain(
            "boundary operators are only realized in 1D and on the polar disk".into(),
        )),
    }
}

/// 𝒲_λ on Γ₁, realized like `interface_n_matrix`.
pub fn interface_w_matrix(grid: &Grid, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    match grid.kind {
        GridKind::OneD { domain, .. } => {
            let w = exact_1d_w_matrix(&domain, lambda)?;
            Ok(vec![w[0][0], w[0][1], w[1][0], w[1][1]])
        }
        GridKind::Polar { domain, ntheta, .. } => {
            let chart = BoundaryChart::flat(1);
            circle_multiplier_matrix(ntheta, domain.inclusion.radius, |xi| {
                symbol_w(&chart, &[0.0], &[xi], lambda)
            })
        }
        GridKind::Cartesian { .. } => Err(Error::Domain(
            "boundary operators are only realized in 1D and on the polar disk".into(),
        )),
    }
}

fn matvec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
}

/// Boundary pairing ⟨a, b⟩ on Γ₁ with the grid's quadrature weights.
pub fn boundary_pairing(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    wdot(&grid.interface_weights, a, b)
}

fn relative(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GreenReport {
    pub residual_i: f64,
    pub residual_ii: f64,
    /// None where 𝒩_λ, 𝒲_λ are not realized (staircase grids).
    pub residual_iii: Option<f64>,
    pub residual_iv: Option<f64>,
    /// (E_λ f, g), the common left side of (iii) and (iv).
    pub e_form: f64,
}

/// Test loads for Green's formulas: smooth, vanishing linearly at Γ₁.
/// Returned on `grid.outer_nodes`.
pub fn green_test_functions(grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let (c, r) = match grid.kind {
        GridKind::OneD { .. } => ([0.0, 0.0], 0.0),
        GridKind::Polar { domain, .. } | GridKind::Cartesian { domain, .. } => {
            (domain.inclusion.center, domain.inclusion.radius)
        }
    };
    let mut f = Vec::with_capacity(grid.outer_nodes.len());
    let mut g = Vec::with_capacity(grid.outer_nodes.len());
    for &i in &grid.outer_nodes {
        let p = grid.coords[i];
        let (d, th) = match grid.kind {
            GridKind::OneD { domain, .. } => {
                let x = p[0];
                let d = (domain.inclusion_left - x).max(x - domain.inclusion_right);
                (d, if x < domain.inclusion_left { 1.0 } else { 0.0 })
            }
            _ => {
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                (dx.hypot(dy) - r, dy.atan2(dx))
            }
        };
        f.push(d * (1.0 + 20.0 * d) * (1.0 + 0.5 * th.cos()));
        g.push(d * (1.0 + 15.0 * d) * (1.0 + 0.3 * (2.0 * th).sin()));
    }
    (f, g)
}

/// Evaluates Green's formulas (i)-(iv) with u = r A_λ⁻¹ e f, v = B⁻¹g:
///  (i)   (A_λu, v) − (u, Bv) = ⟨γ₀u, γ₁v⟩
///  (ii)  (f, B⁻¹g) − (r A_λ⁻¹ e f, g) = ⟨γ₀u, γ₁v⟩
///  (iii) (E_λf, g) = −⟨𝒩_λγ₁u, γ₁v⟩
///  (iv)  (E_λf, g) = ⟨𝒲_λγ₁B⁻¹f, γ₁B⁻¹g⟩
pub fn green_identity_check(grid: &Grid, lambda: f64, f: &[f64], g: &[f64]) -> Result<GreenReport> {
    let cs = CouplingSolver::new(grid, lambda)?;
    let m = cs.outer_mass();
    let u_full = cs.a_solve_extended(f)?;
    let u = restrict(grid, &u_full)?;
    let v = cs.b_solve(g)?;
    let bf = cs.b_solve(f)?;
    let zero = vec![0.0; grid.interface.len()];
    let v_full = extend_with_interface(grid, &v, &zero)?;
    let bf_full = extend_with_interface(grid, &bf, &zero)?;

    let g0u = trace_gamma0(grid, &u_full, Side::Exterior)?;
    let g1u = trace_gamma1(grid, &u_full, Side::Exterior)?;
    let g1v = trace_gamma1(grid, &v_full, Side::Exterior)?;
    let g1bf = trace_gamma1(grid, &bf_full, Side::Exterior)?;
    let pair_uv = boundary_pairing(grid, &g0u, &g1v);

    // (i): apply the difference operators to u and v on Ω₂ nodes
    let a_op = assemble_a_lambda(grid, lambda)?;
    let au = a_op.matrix.matvec(&u_full);
    let au_v: f64 = grid.outer_nodes.iter().zip(&v).map(|(&i, vi)| au[i] * vi).sum();
    let bv = assemble_b(grid)?.matrix.matvec(&v);
    let u_bv: f64 = u.iter().zip(&bv).map(|(a, b)| a * b).sum();
    let residual_i = relative(au_v - u_bv, pair_uv);

    let lhs_ii = wdot(m, f, &v) - wdot(m, &u, g);
    let residual_ii = relative(lhs_ii, pair_uv);

    let ef: Vec<f64> = u.iter().zip(&bf).map(|(a, b)| a - b).collect();
    let e_form = wdot(m, &ef, g);
    let (residual_iii, residual_iv) = match (interface_n_matrix(grid, lambda), interface_w_matrix(grid, lambda)) {
        (Ok(nm), Ok(wm)) => {
            let rhs_iii = -boundary_pairing(grid, &matvec(&nm, &g1u), &g1v);
            let rhs_iv = boundary_pairing(grid, &matvec(&wm, &g1bf), &g1v);
            (Some(relative(e_form, rhs_iii)), Some(relative(e_form, rhs_iv)))
        }
        _ => (None, None),
    };
    Ok(GreenReport {
        residual_i,
        residual_ii,
        residual_iii,
        residual_iv,
        e_form,
    })
}

fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
            .expect("nonempty column");
        if a[p * n + c] == 0.0 {
            return Err(Error::Numeric("singular interface system".into()));
        }
        if p != c {
            for j in 0..n {
                a.swap(p * n + j, c * n + j);
            }
            b.swap(p, c);
        }
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            if f != 0.0 {
                for j in c..n {
                    a[r * n + j] -= f * a[c * n + j];
                }
                b[r] -= f * b[c];
            }
        }
    }
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|j| a[c * n + j] * b[j]).sum();
        b[c] = (b[c] - s) / a[c * n + c];
    }
    Ok(b)
}

/// Exterior problem −Δu₂ = f in Ω₂, ∂_νu₂ = 0 on Γ, γ₀u₂ = 𝒩_λγ₁u₂ on Γ₁.
///
/// Writing u₂ = B⁻¹f + 𝒦φ₀ with T = γ₁𝒦, the interface values solve
/// (I − 𝒩_λT)φ₀ = 𝒩_λγ₁B⁻¹f.
pub fn nonlocal_bc_solve(grid: &Grid, lambda: f64, f: &[f64]) -> Result<Vec<f64>> {
    let nm = interface_n_matrix(grid, lambda)?;
    let nb = grid.interface.len();
    let columns: Vec<(Vec<f64>, Vec<f64>)> = (0..nb)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; nb];
            e[j] = 1.0;
            let k = poisson_k(grid, &e, OuterCondition::Neumann)?;
            let t = trace_gamma1(grid, &extend_with_interface(grid, &k, &e)?, Side::Exterior)?;
            Ok((k, t))
        })
        .collect::<Result<_>>()?;
    let b = assemble_b(grid)?;
    let bf = b.solve(f)?;
    let sigma = trace_gamma1(grid, &extend_with_interface(grid, &bf, &vec![0.0; nb])?, Side::Exterior)?;
    let mut sys = vec![0.0; nb * nb];
    for i in 0..nb {
        for j in 0..nb {
            let nt: f64 = (0..nb).map(|l| nm[i * nb + l] * columns[j].1[l]).sum();
            sys[i * nb + j] = if i == j { 1.0 } else { 0.0 } - nt;
        }
    }
    let phi0 = solve_dense(sys, matvec(&nm, &sigma))?;
    let mut u = bf;
    for (j, (k, _)) in columns.iter().enumerate() {
        for (ui, ki) in u.iter_mut().zip(k) {
            *ui += phi0[j] * ki;
        }
    }
    Ok(u)
}

/// Relative L²(Ω₂) distance between two exterior fields.
pub fn relative_l2(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let m = grid.outer_mass();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    (wdot(&m, &d, &d) / wdot(&m, b, b)).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub mu: f64,
    /// Smallest evaluated λ with ‖E_λ‖ < μ.
    pub lambda0: f64,
    pub evaluations: Vec<(f64, f64)>,
    pub monotone: bool,
    pub verdict: Verdict,
}

/// Bisection in log λ over [1, λ_max] for the predicate ‖E_λ‖ < μ.
pub fn zero_threshold(norm: impl Fn(f64) -> Result<f64>, mu: f64, lambda_max: f64) -> Result<ThresholdReport> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    let mut evals = vec![(1.0, norm(1.0)?)];
    let done = |evals: Vec<(f64, f64)>, lambda0: f64, found: bool| {
        let mut sorted = evals.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = sorted.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9));
        let verdict = if monotone && found { Verdict::Pass } else { Verdict::Inconclusive };
        ThresholdReport {
            mu,
            lambda0,
            evaluations: evals,
            monotone,
            verdict,
        }
    };
    if evals[0].1 < mu {
        return Ok(done(evals, 1.0, true));
    }
    let top = norm(lambda_max)?;
    evals.push((lambda_max, top));
    if top >= mu {
        return Ok(done(evals, lambda_max, false));
    }
    let (mut lo, mut hi) = (0.0f64, lambda_max.ln());
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        let v = norm(mid.exp())?;
        evals.push((mid.exp(), v));
        if v < mu {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(done(evals, hi.exp(), true))
}

pub fn counting_zero_threshold(grid: &Grid, mu: f64, lambda_max: f64) -> Result<ThresholdReport> {
    zero_threshold(|l| e_lambda_norm(grid, l), mu, lambda_max)
}

pub fn exact_zero_threshold(domain: &Domain1D, mu: f64, lambda_max: f64) -> Result<ThresholdReport> {
    zero_threshold(|l| exact_1d_e_norm(domain, l), mu, lambda_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{poisson_k_lambda, transmission_solve};
    use crate::geometry::Domain2D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid1(h: f64) -> Grid {
        Grid::one_d(Domain1D::default(), h).unwrap()
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn n_matrix_limits_and_scaling() {
        let n = exact_1d_n_matrix(1e6, 1.0).unwrap();
        assert!((n[0][0] + 1e-3).abs() < 1e-15 && n[0][1].abs() < 1e-300);
        let a = exact_1d_n_matrix(7.0, 0.3).unwrap();
        let b = exact_1d_n_matrix(1.0, 7f64.sqrt() * 0.3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j] / 7f64.sqrt()).abs() < 1e-14);
            }
        }
        assert!(a[0][0] < 0.0 && a[1][1] < 0.0);
    }

    #[test]
    fn n_matrix_matches_discrete_interior_solve() {
        let lambda = 30.0;
        let g = grid1(1.0 / 1024.0);
        let n = exact_1d_n_matrix(lambda, 0.25).unwrap();
        let phi = [0.4, -1.1];
        let w = poisson_k_lambda(&g, lambda, &phi).unwrap();
        let (first, last) = (w[0], w[w.len() - 1]);
        assert!((first - (n[0][0] * phi[0] + n[0][1] * phi[1])).abs() < 1e-5);
        assert!((last - (n[1][0] * phi[0] + n[1][1] * phi[1])).abs() < 1e-5);
    }

    #[test]
    fn e_is_symmetric_and_nonnegative() {
        let g = grid1(1.0 / 256.0);
        let cs = CouplingSolver::new(&g, 50.0).unwrap();
        let m = cs.outer_mass().to_vec();
        for s in 0..4 {
            let (f, h) = (random(cs.dim(), s), random(cs.dim(), s + 10));
            let (ef, eh) = (cs.apply_e(&f).unwrap(), cs.apply_e(&h).unwrap());
            let scale = wdot(&m, &f, &f).sqrt() * wdot(&m, &h, &h).sqrt();
            assert!((wdot(&m, &ef, &h) - wdot(&m, &f, &eh)).abs() <= 1e-9 * scale);
            assert!(wdot(&m, &ef, &f) >= -1e-14 * scale);
        }
        assert!(cs.apply_e(&vec![0.0; cs.dim()]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn discrete_norm_matches_closed_form() {
        let d = Domain1D::default();
        let g = grid1(1.0 / 4096.0);
        for lambda in [10.0, 1e3] {
            let a = e_lambda_norm(&g, lambda).unwrap();
            let b = exact_1d_e_norm(&d, lambda).unwrap();
            assert!((a / b - 1.0).abs() < 1e-2, "{lambda}: {a} vs {b}");
        }
    }

    #[test]
    fn one_d_rank_two() {
        let g = grid1(1.0 / 128.0);
        let e = CouplingSolver::new(&g, 100.0).unwrap().dense_symmetric().unwrap();
        let mut ev = e.eigenvalues().unwrap();
        ev.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        assert!(ev[2].abs() < 1e-10 * ev[0]);
        assert!(ev[1] > 1e-3 * ev[0]);
    }

    #[test]
    fn green_zero_loads() {
        let g = grid1(1.0 / 64.0);
        let z = vec![0.0; g.outer_nodes.len()];
        let (f, _) = green_test_functions(&g);
        let r = green_identity_check(&g, 10.0, &f, &z).unwrap();
        assert_eq!(r.residual_i + r.residual_ii + r.residual_iii.unwrap() + r.residual_iv.unwrap(), 0.0);
        assert_eq!(r.e_form, 0.0);
    }

    #[test]
    fn green_one_d_small_residuals() {
        let g = grid1(1.0 / 2048.0);
        let (f, h) = green_test_functions(&g);
        let r = green_identity_check(&g, 1e3, &f, &h).unwrap();
        for v in [r.residual_i, r.residual_ii, r.residual_iii.unwrap(), r.residual_iv.unwrap()] {
            assert!(v <= 1e-6, "{r:?}");
        }
    }

    #[test]
    fn nonlocal_matches_transmission_in_one_d() {
        let g = grid1(1.0 / 2048.0);
        let (f, _) = green_test_functions(&g);
        let a = nonlocal_bc_solve(&g, 1e3, &f).unwrap();
        let t = restrict(&g, &transmission_solve(&g, 1e3, &extend(&g, &f).unwrap()).unwrap()).unwrap();
        assert!(relative_l2(&g, &a, &t) <= 1e-4);
        assert!(nonlocal_bc_solve(&g, 1e3, &vec![0.0; f.len()]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn polar_multiplier_is_circulant_and_symmetric() {
        let g = Grid::polar(Domain2D::unit_disk_in_polar(), 4, 16).unwrap();
        let n = interface_n_matrix(&g, 100.0).unwrap();
        let nb = 16;
        // constant mode is scaled by 1/η(0) = −1/√λ
        let one = matvec(&n, &vec![1.0; nb]);
        assert!(one.iter().all(|v| (v + 0.1).abs() < 1e-12));
        for i in 0..nb {
            for j in 0..nb {
                assert!((n[i * nb + j] - n[j * nb + i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn threshold_bisection() {
        let d = Domain1D::default();
        let e1 = exact_1d_e_norm(&d, 1.0).unwrap();
        let r = exact_zero_threshold(&d, 2.0 * e1, 1e8).unwrap();
        assert_eq!(r.lambda0, 1.0);
        let r = exact_zero_threshold(&d, 0.01 * e1, 1e8).unwrap();
        assert!(r.monotone && r.verdict == Verdict::Pass);
        assert!(exact_1d_e_norm(&d, r.lambda0).unwrap() < 0.01 * e1);
        assert!(exact_1d_e_norm(&d, r.lambda0 * 0.999).unwrap() >= 0.01 * e1);
    }

    #[test]
    fn exact_rate_is_minus_half() {
        let fit = exact_rate_fit(&Domain1D::default(), &crate::fit::log_space(1e2, 1e6, 9)).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.02, "{}", fit.slope);
        assert!(RateFit::from_values(vec![1.0, 10.0], vec![1.0, 0.5]).is_err());
    }
}
