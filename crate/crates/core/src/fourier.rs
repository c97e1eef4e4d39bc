//! Discrete Fourier model of pseudodifferential operators on the circle
//! T = [0, 2π), and the norm-decay experiments built on it.
//!
//! Conventions, fixed throughout:
//!   û_k = (2π/M) Σ_j u_j e^{−i k x_j},   u_j = (2π)^{-1} Σ_k û_k e^{i k x_j},
//!   ‖u‖²_s = (2π)^{-1} Σ_k ⟨k⟩^{2s} |û_k|²,
//! so that ‖u‖_0 is the trapezoid L² norm (2π/M) Σ |u_j|².

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, LogLogFit, Verdict};
use crate::symbols::ParamSymbol;

pub const PSDO_MAX_POINTS: usize = 512;
pub const COMPOSITION_MAX_POINTS: usize = 256;
pub const MIN_R2: f64 = 0.98;

/// Radix-2 FFT plan.
#[derive(Debug, Clone)]
pub struct Fft {
    m: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Fft {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::Config(format!("FFT length {m} is not a power of two")));
        }
        let bits = m.trailing_zeros();
        let rev = (0..m)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..m / 2)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / m as f64))
            .collect();
        Ok(Self { m, twiddles, rev })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// In place, `X_k = Σ_j x_j e^{∓2πi jk/M}` (minus sign when `inverse` is false).
    pub fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.m;
        assert_eq!(data.len(), m, "FFT buffer length");
        for i in 0..m {
            let j = self.rev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= m {
            let half = len / 2;
            let stride = m / len;
            for start in (0..m).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct TorusGrid {
    m: usize,
    fft: Fft,
}

impl TorusGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 {
            return Err(Error::Config(format!("torus grid needs M >= 8, got {m}")));
        }
        Ok(Self {
            m,
            fft: Fft::new(m)?,
        })
    }

    pub fn points(&self) -> usize {
        self.m
    }

    pub fn x(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.m as f64
    }

    /// Frequency stored at array slot `j`; the set is {−M/2+1, …, M/2}.
    pub fn freq(&self, j: usize) -> i64 {
        let m = self.m as i64;
        let j = j as i64;
        if j <= m / 2 {
            j
        } else {
            j - m
        }
    }

    pub fn slot(&self, k: i64) -> Result<usize> {
        let m = self.m as i64;
        if k <= -m / 2 || k > m / 2 {
            return Err(Error::Contract(format!("frequency {k} outside the grid")));
        }
        Ok(k.rem_euclid(m) as usize)
    }

    pub fn dft(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut c = values.to_vec();
        self.fft.transform(&mut c, false);
        let s = 2.0 * PI / self.m as f64;
        c.iter_mut().for_each(|v| *v *= s);
        c
    }

    pub fn idft(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        let mut v = coefficients.to_vec();
        self.fft.transform(&mut v, true);
        let s = 1.0 / (2.0 * PI);
        v.iter_mut().for_each(|x| *x *= s);
        v
    }

    pub fn field_from_values(&self, values: Vec<Complex64>) -> Result<SpectralField> {
        if values.len() != self.m {
            return Err(Error::Contract(format!("{} values on an M = {} grid", values.len(), self.m)));
        }
        let coefficients = self.dft(&values);
        Ok(SpectralField { values, coefficients })
    }

    pub fn field_from_coefficients(&self, coefficients: Vec<Complex64>) -> Result<SpectralField> {
        if coefficients.len() != self.m {
            return Err(Error::Contract(format!(
                "{} coefficients on an M = {} grid",
                coefficients.len(),
                self.m
            )));
        }
        let values = self.idft(&coefficients);
        Ok(SpectralField { values, coefficients })
    }

    /// e^{ikx}.
    pub fn mode(&self, k: i64) -> Result<SpectralField> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.m];
        c[self.slot(k)?] = Complex64::new(2.0 * PI, 0.0);
        self.field_from_coefficients(c)
    }

    /// Coefficients ⟨k⟩^{−r−0.51} times standard complex Gaussians, so the
    /// field lies in H^r but not in H^{r+0.6}. `band` limits |k|.
    pub fn random_field(&self, r: f64, band: Option<i64>, rng: &mut ChaCha8Rng) -> Result<SpectralField> {
        let c = (0..self.m)
            .map(|j| {
                let k = self.freq(j);
                let g = Complex64::new(
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                ) / 2f64.sqrt();
                if band.is_some_and(|b| k.abs() > b) {
                    Complex64::new(0.0, 0.0)
                } else {
                    g * bracket(k as f64).powf(-r - 0.51)
                }
            })
            .collect();
        self.field_from_coefficients(c)
    }
}

/// ⟨k⟩ = (1 + k²)^{1/2}.
pub fn bracket(k: f64) -> f64 {
    (1.0 + k * k).sqrt()
}

/// Grid values and Fourier coefficients, kept consistent by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    values: Vec<Complex64>,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Trapezoid L² norm from the grid values.
    pub fn l2_norm(&self) -> f64 {
        let m = self.values.len() as f64;
        (2.0 * PI / m * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }
}

pub fn sobolev_norm(grid: &TorusGrid, field: &SpectralField, s: f64) -> f64 {
    coefficient_norm(grid, field.coefficients(), s)
}

fn coefficient_norm(grid: &TorusGrid, c: &[Complex64], s: f64) -> f64 {
    let sum: f64 = c
        .iter()
        .enumerate()
        .map(|(j, v)| bracket(grid.freq(j) as f64).powf(2.0 * s) * v.norm_sqr())
        .sum();
    (sum / (2.0 * PI)).sqrt()
}

/// Checks on a few grid points that the symbol does not vary with x.
fn check_x_independent(grid: &TorusGrid, symbol: &ParamSymbol, lambda: f64) -> Result<()> {
    for &k in &[0i64, 1, -3, (grid.points() / 2) as i64] {
        let xi = [k as f64];
        let base = symbol.eval(&[0.0], &xi, lambda)?;
        for x in [0.7, 2.1, 4.4] {
            let v = symbol.eval(&[x], &xi, lambda)?;
            if (v - base).norm() > 1e-14 * (1.0 + base.norm()) {
                return Err(Error::Contract("multiplier symbol depends on x".into()));
            }
        }
    }
    Ok(())
}

fn multiplier_values(grid: &TorusGrid, symbol: &ParamSymbol, lambda: f64) -> Result<Vec<Complex64>> {
    (0..grid.points())
        .map(|j| symbol.eval(&[0.0], &[grid.freq(j) as f64], lambda))
        .collect()
}

/// û_k ↦ b(k, λ) û_k for an x-independent symbol.
pub fn apply_multiplier(
    grid: &TorusGrid,
    symbol: &ParamSymbol,
    lambda: f64,
    field: &SpectralField,
) -> Result<SpectralField> {
    check_x_independent(grid, symbol, lambda)?;
    let b = multiplier_values(grid, symbol, lambda)?;
    let c = field
        .coefficients()
        .iter()
        .zip(&b)
        .map(|(u, b)| u * b)
        .collect();
    grid.field_from_coefficients(c)
}

/// op(a)u(x_j) = (2π)^{-1} Σ_k e^{i x_j k} a(x_j, k, λ) û_k, evaluated densely.
pub fn apply_psdo(
    grid: &TorusGrid,
    symbol: &ParamSymbol,
    lambda: f64,
    field: &SpectralField,
) -> Result<SpectralField> {
    let m = grid.points();
    if m > PSDO_MAX_POINTS {
        return Err(Error::Resource(format!(
            "dense quadrature limited to M <= {PSDO_MAX_POINTS}, got {m}"
        )));
    }
    let c = field.coefficients();
    let mut values = vec![Complex64::new(0.0, 0.0); m];
    for (j, out) in values.iter_mut().enumerate() {
        let x = grid.x(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (slot, u) in c.iter().enumerate() {
            if *u == Complex64::new(0.0, 0.0) {
                continue;
            }
            let k = grid.freq(slot);
            let phase = Complex64::from_polar(1.0, x * k as f64);
            acc += phase * symbol.eval(&[x], &[k as f64], lambda)? * u;
        }
        *out = acc / (2.0 * PI);
    }
    grid.field_from_values(values)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub lambda: f64,
    pub tau: f64,
    pub trial_sup: f64,
    /// Mode-wise maximum, when the symbol is x-independent.
    pub exact_sup: Option<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub fit: LogLogFit,
    pub expected_exponent: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

fn verdict_for(fit: &LogLogFit, lo: f64, hi: f64) -> Verdict {
    crate::fit::judge_slope(fit, lo, hi, MIN_R2)
}

#[derive(Debug, Clone)]
pub struct BoundSetup {
    pub points: usize,
    pub trials: usize,
    pub seed: u64,
    /// Half-width of the acceptance window around the expected exponent.
    pub tolerance: f64,
}

impl Default for BoundSetup {
    fn default() -> Self {
        Self {
            points: 1 << 14,
            trials: 64,
            seed: 7,
            tolerance: 0.1,
        }
    }
}

fn check_sweep(lambdas: &[f64], decades_in_tau: f64) -> Result<()> {
    if lambdas.len() < 3 || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Config("lambda sweep needs three or more positive values".into()));
    }
    let (lo, hi) = lambdas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &l| (a.min(l), b.max(l)));
    if (hi.sqrt() / lo.sqrt()).log10() < decades_in_tau - 1e-9 {
        return Err(Error::Config(format!(
            "sqrt(lambda) must span {decades_in_tau} decades, got [{}, {}]",
            lo.sqrt(),
            hi.sqrt()
        )));
    }
    Ok(())
}

/// Measures sup ‖op(b)u‖_{s−m} / ‖u‖_r against τ = √λ for `b ∈ P^m`,
/// `m ≤ 0`, `r + m ≤ s ≤ r`. The expected decay is τ^{−(r−s)}.
pub fn operator_bound_experiment(
    b: &ParamSymbol,
    r: f64,
    s: f64,
    lambdas: &[f64],
    setup: &BoundSetup,
) -> Result<BoundReport> {
    let m = b.order();
    if m > 0.0 {
        return Err(Error::Contract(format!("operator bound needs m <= 0, got {m}")));
    }
    if !(r + m <= s + 1e-12 && s <= r + 1e-12) {
        return Err(Error::Contract(format!("need r + m <= s <= r (r = {r}, s = {s}, m = {m})")));
    }
    check_sweep(lambdas, 3.0)?;
    let grid = TorusGrid::new(setup.points)?;
    let x_independent = check_x_independent(&grid, b, lambdas[0]).is_ok();
    if !x_independent && setup.points > PSDO_MAX_POINTS {
        return Err(Error::Resource(format!(
            "x-dependent symbols need M <= {PSDO_MAX_POINTS}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let trials: Vec<SpectralField> = (0..setup.trials)
        .map(|_| grid.random_field(r, None, &mut rng))
        .collect::<Result<_>>()?;
    let target = s - m;
    let rows: Vec<BoundRow> = lambdas
        .par_iter()
        .map(|&lambda| -> Result<BoundRow> {
            let mut trial_sup = 0.0f64;
            for u in &trials {
                let v = if x_independent {
                    apply_multiplier(&grid, b, lambda, u)?
                } else {
                    apply_psdo(&grid, b, lambda, u)?
                };
                trial_sup = trial_sup.max(sobolev_norm(&grid, &v, target) / sobolev_norm(&grid, u, r));
            }
            let exact_sup = if x_independent {
                let bv = multiplier_values(&grid, b, lambda)?;
                Some(
                    bv.iter()
                        .enumerate()
                        .map(|(j, bk)| {
                            let kb = bracket(grid.freq(j) as f64);
                            kb.powf(target - r) * bk.norm()
                        })
                        .fold(0.0, f64::max),
                )
            } else {
                None
            };
            Ok(BoundRow {
                lambda,
                tau: lambda.sqrt(),
                trial_sup,
                exact_sup,
                ratio: exact_sup.unwrap_or(0.0).max(trial_sup),
            })
        })
        .collect::<Result<_>>()?;
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let fit = fit_loglog(&taus, &ratios)?;
    let expected = -(r - s);
    Ok(BoundReport {
        verdict: verdict_for(&fit, expected - setup.tolerance, expected + setup.tolerance),
        rows,
        fit,
        expected_exponent: expected,
        tolerance: setup.tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositionRow {
    pub lambda: f64,
    pub tau: f64,
    /// sup ‖(op(a)op(b) − op(Σ ∂ᵅ_ξ a Dᵅ_x b / α!)) u‖_t / ‖u‖_r.
    pub remainder_ratio: f64,
    /// sup ‖op(a)op(b)u‖_{r−m₁} / ‖u‖_r.
    pub composition_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    pub rows: Vec<CompositionRow>,
    pub t: f64,
    pub taylor_order: u32,
    /// `None` when the remainder vanishes to rounding at every λ.
    pub remainder_fit: Option<LogLogFit>,
    pub composition_fit: LogLogFit,
    pub expected_exponent: f64,
    pub remainder_verdict: Verdict,
    pub composition_verdict: Verdict,
}

/// Fourth-order central difference of order 1 or 2 in the chosen slot.
fn derivative(
    f: &dyn Fn(f64) -> Result<Complex64>,
    at: f64,
    h: f64,
    order: u32,
) -> Result<Complex64> {
    match order {
        0 => f(at),
        1 => {
            let (p1, m1, p2, m2) = (f(at + h)?, f(at - h)?, f(at + 2.0 * h)?, f(at - 2.0 * h)?);
            Ok((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h))
        }
        2 => {
            let (c, p1, m1, p2, m2) = (f(at)?, f(at + h)?, f(at - h)?, f(at + 2.0 * h)?, f(at - 2.0 * h)?);
            Ok((-30.0 * c + 16.0 * (p1 + m1) - (p2 + m2)) / (12.0 * h * h))
        }
        _ => Err(Error::Contract(format!("derivative order {order} unsupported"))),
    }
}

/// Σ_{α ≤ order} ∂ᵅ_ξ a · Dᵅ_x b / α!, with D_x = −i ∂_x, by finite differences.
fn taylor_symbol(a: &ParamSymbol, b: &ParamSymbol, order: u32) -> ParamSymbol {
    let (a, b) = (a.clone(), b.clone());
    let dim = a.dim;
    ParamSymbol::new(
        dim,
        crate::symbols::product_class(a.class, b.class),
        f64::INFINITY,
        std::sync::Arc::new(move |x: &[f64], xi: &[f64], l: f64| {
            let (x0, xi0) = (x[0], xi[0]);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut fact = 1.0;
            for alpha in 0..=order {
                if alpha > 0 {
                    fact *= alpha as f64;
                }
                let da = derivative(&|v| a.eval(&[x0], &[v], l), xi0, 1e-3 * (1.0 + xi0.abs()), alpha)?;
                let dxb = derivative(&|v| b.eval(&[v], &[xi0], l), x0, 1e-3, alpha)?;
                let d_pow = Complex64::new(0.0, -1.0).powi(alpha as i32);
                acc += da * d_pow * dxb / fact;
            }
            Ok(acc)
        }),
    )
}

/// Remainder of the truncated composition formula for `a ∈ S^{m₁}`,
/// `b ∈ P^{m₂}`, measured in H^t with `t = r + 1 − m₁ + [m₁]`. Trials are
/// band-limited to |k| ≤ M/4 so that, with trigonometric-polynomial
/// x-dependence of low degree, products do not alias. Pure modes in that
/// band are included alongside the random trials.
pub fn composition_error_experiment(
    a: &ParamSymbol,
    b: &ParamSymbol,
    r: f64,
    lambdas: &[f64],
    setup: &BoundSetup,
) -> Result<CompositionReport> {
    let (m1, m2) = (a.order(), b.order());
    if !(m1 > 0.0 && m1 + m2 <= 0.0) {
        return Err(Error::Contract(format!("need m1 > 0 >= m1 + m2, got m1 = {m1}, m2 = {m2}")));
    }
    if setup.points > COMPOSITION_MAX_POINTS {
        return Err(Error::Resource(format!(
            "composition experiment limited to M <= {COMPOSITION_MAX_POINTS}"
        )));
    }
    check_sweep(lambdas, 1.0)?;
    let order = m1.floor() as u32;
    if order > 2 {
        return Err(Error::Contract("Taylor order above 2 is not supported".into()));
    }
    let t = r + 1.0 - m1 + order as f64;
    let grid = TorusGrid::new(setup.points)?;
    let band = (setup.points / 4) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let mut trials: Vec<SpectralField> = (0..setup.trials)
        .map(|_| grid.random_field(r, Some(band), &mut rng))
        .collect::<Result<_>>()?;
    for k in -band..=band {
        trials.push(grid.mode(k)?);
    }
    let c1 = taylor_symbol(a, b, order);
    let rows: Vec<CompositionRow> = lambdas
        .par_iter()
        .map(|&lambda| -> Result<CompositionRow> {
            let mut rem = 0.0f64;
            let mut comp = 0.0f64;
            for u in &trials {
                let bu = apply_psdo(&grid, b, lambda, u)?;
                let abu = apply_psdo(&grid, a, lambda, &bu)?;
                let cu = apply_psdo(&grid, &c1, lambda, u)?;
                let diff: Vec<Complex64> = abu
                    .coefficients()
                    .iter()
                    .zip(cu.coefficients())
                    .map(|(p, q)| p - q)
                    .collect();
                let un = sobolev_norm(&grid, u, r);
                rem = rem.max(coefficient_norm(&grid, &diff, t) / un);
                comp = comp.max(sobolev_norm(&grid, &abu, r - m1) / un);
            }
            Ok(CompositionRow {
                lambda,
                tau: lambda.sqrt(),
                remainder_ratio: rem,
                composition_ratio: comp,
            })
        })
        .collect::<Result<_>>()?;
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let expected = -m2.abs();
    let comp: Vec<f64> = rows.iter().map(|r| r.composition_ratio).collect();
    let composition_fit = fit_loglog(&taus, &comp)?;
    let scale = comp.iter().cloned().fold(0.0, f64::max);
    let vanishing = rows.iter().all(|r| r.remainder_ratio <= 1e-12 * scale.max(1.0));
    let (remainder_fit, remainder_verdict) = if vanishing {
        (None, Verdict::Pass)
    } else {
        let rem: Vec<f64> = rows.iter().map(|r| r.remainder_ratio.max(f64::MIN_POSITIVE)).collect();
        let f = fit_loglog(&taus, &rem)?;
        (Some(f), verdict_for(&f, f64::NEG_INFINITY, expected + setup.tolerance))
    };
    Ok(CompositionReport {
        composition_verdict: verdict_for(&composition_fit, f64::NEG_INFINITY, expected + setup.tolerance),
        rows,
        t,
        taylor_order: order,
        remainder_fit,
        composition_fit,
        expected_exponent: expected,
        remainder_verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NBoundCurve {
    pub s: f64,
    pub lambdas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub exact: Vec<f64>,
    pub fit: LogLogFit,
    pub expected_exponent: f64,
    pub verdict: Verdict,
}

/// Decay rate in λ of ‖op(1/η)φ‖_{H^s} / ‖φ‖_{H^{1/2}}: −1/2 up to
/// s = 1/2, then −(3/4 − s/2).
pub fn n_bound_expected(s: f64) -> f64 {
    if s <= 0.5 {
        -0.5
    } else {
        -(0.75 - 0.5 * s)
    }
}

pub fn n_bound_experiment(s_values: &[f64], lambdas: &[f64], setup: &BoundSetup) -> Result<Vec<NBoundCurve>> {
    if s_values.iter().any(|&s| !(0.0..=1.5).contains(&s)) {
        return Err(Error::Contract("s values must lie in [0, 3/2]".into()));
    }
    if lambdas.len() < 3 || lambdas.iter().any(|&l| !(l >= 1.0)) {
        return Err(Error::Config("lambda sweep needs three or more values >= 1".into()));
    }
    let grid = TorusGrid::new(setup.points)?;
    let symbol = ParamSymbol::n_symbol(&crate::geometry::BoundaryChart::flat(1));
    let r = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let trials: Vec<SpectralField> = (0..setup.trials)
        .map(|_| grid.random_field(r, None, &mut rng))
        .collect::<Result<_>>()?;
    let trial_norms: Vec<f64> = trials.iter().map(|u| sobolev_norm(&grid, u, r)).collect();
    s_values
        .iter()
        .map(|&s| {
            let per_lambda: Vec<(f64, f64)> = lambdas
                .par_iter()
                .map(|&lambda| -> Result<(f64, f64)> {
                    let b = multiplier_values(&grid, &symbol, lambda)?;
                    let exact = b
                        .iter()
                        .enumerate()
                        .map(|(j, bk)| bracket(grid.freq(j) as f64).powf(s - r) * bk.norm())
                        .fold(0.0, f64::max);
                    let mut sup = 0.0f64;
                    for (u, un) in trials.iter().zip(&trial_norms) {
                        let v: Vec<Complex64> =
                            u.coefficients().iter().zip(&b).map(|(p, q)| p * q).collect();
                        sup = sup.max(coefficient_norm(&grid, &v, s) / un);
                    }
                    Ok((sup.max(exact), exact))
                })
                .collect::<Result<_>>()?;
            let ratios: Vec<f64> = per_lambda.iter().map(|p| p.0).collect();
            let exact: Vec<f64> = per_lambda.iter().map(|p| p.1).collect();
            let fit = fit_loglog(lambdas, &ratios)?;
            let e = n_bound_expected(s);
            Ok(NBoundCurve {
                s,
                lambdas: lambdas.to_vec(),
                ratios,
                exact,
                verdict: verdict_for(&fit, e - setup.tolerance, e + setup.tolerance),
                fit,
                expected_exponent: e,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryChart;
    use crate::symbols::SymbolClass;
    use std::sync::Arc;

    fn grid(m: usize) -> TorusGrid {
        TorusGrid::new(m).unwrap()
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn fft_matches_naive_dft() {
        let g = grid(16);
        let vals: Vec<Complex64> = (0..16).map(|j| Complex64::new((j as f64).sin(), (j * j) as f64 * 0.01)).collect();
        let c = g.dft(&vals);
        for (slot, ck) in c.iter().enumerate() {
            let k = slot as f64;
            let naive: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -k * g.x(j)))
                .sum::<Complex64>()
                * (2.0 * PI / 16.0);
            assert!((naive - ck).norm() < 1e-12);
        }
    }

    #[test]
    fn non_power_of_two_is_config_error() {
        assert!(matches!(TorusGrid::new(12), Err(Error::Config(_))));
        assert!(matches!(TorusGrid::new(4), Err(Error::Config(_))));
    }

    #[test]
    fn constant_and_pure_mode() {
        let g = grid(32);
        let one = g.field_from_values(vec![Complex64::new(1.0, 0.0); 32]).unwrap();
        for (j, c) in one.coefficients().iter().enumerate() {
            let want = if j == 0 { 2.0 * PI } else { 0.0 };
            assert!((c.re - want).abs() < 1e-12 && c.im.abs() < 1e-12);
        }
        let vals: Vec<Complex64> = (0..32).map(|j| Complex64::from_polar(1.0, 3.0 * g.x(j))).collect();
        let f = g.field_from_values(vals).unwrap();
        for (j, c) in f.coefficients().iter().enumerate() {
            let want = if g.freq(j) == 3 { 2.0 * PI } else { 0.0 };
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = g.random_field(0.0, None, &mut rng).unwrap();
        let back = g.idft(&g.dft(u.values()));
        assert!(close(&back, u.values(), 1e-12));
        assert!((sobolev_norm(&g, &u, 0.0) - u.l2_norm()).abs() < 1e-12 * u.l2_norm());
    }

    #[test]
    fn sobolev_norm_of_mode() {
        let g = grid(32);
        let u = g.mode(5).unwrap();
        for s in [-1.0, 0.0, 0.5, 2.0] {
            let want = bracket(5.0).powf(s) * u.l2_norm();
            assert!((sobolev_norm(&g, &u, s) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn multiplier_on_mode_and_composition() {
        let g = grid(64);
        let n = ParamSymbol::n_symbol(&BoundaryChart::flat(1));
        let lambda = 7.0;
        let u = g.mode(4).unwrap();
        let v = apply_multiplier(&g, &n, lambda, &u).unwrap();
        let f = -1.0 / (16.0f64 + lambda).sqrt();
        let want: Vec<Complex64> = u.values().iter().map(|x| x * f).collect();
        assert!(close(v.values(), &want, 1e-13));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = g.random_field(0.0, None, &mut rng).unwrap();
        let two = apply_multiplier(&g, &n, lambda, &apply_multiplier(&g, &n, lambda, &w).unwrap()).unwrap();
        let sq = crate::symbols::product_symbol(&n, &n).unwrap();
        let once = apply_multiplier(&g, &sq, lambda, &w).unwrap();
        assert!(close(two.values(), once.values(), 1e-12));
    }

    #[test]
    fn psdo_reduces_to_multiplier_and_derivative() {
        let g = grid(64);
        let n = ParamSymbol::n_symbol(&BoundaryChart::flat(1));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = g.random_field(0.0, Some(20), &mut rng).unwrap();
        let p = apply_psdo(&g, &n, 3.0, &u).unwrap();
        let q = apply_multiplier(&g, &n, 3.0, &u).unwrap();
        assert!(close(p.values(), q.values(), 1e-12));

        let d = ParamSymbol::new(1, SymbolClass::S { m: 1.0, k: None }, 0.0, Arc::new(|_, xi, _| Ok(Complex64::new(0.0, xi[0]))));
        let du = apply_psdo(&g, &d, 1.0, &u).unwrap();
        let spectral: Vec<Complex64> = u
            .coefficients()
            .iter()
            .enumerate()
            .map(|(j, c)| c * Complex64::new(0.0, g.freq(j) as f64))
            .collect();
        assert!(close(du.values(), &g.idft(&spectral), 1e-12));
    }

    #[test]
    fn frequency_shift_symbol() {
        let g = grid(32);
        let shift = ParamSymbol::new(1, SymbolClass::S { m: 0.0, k: None }, f64::INFINITY, Arc::new(|x, _, _| Ok(Complex64::from_polar(1.0, x[0]))));
        let v = apply_psdo(&g, &shift, 1.0, &g.mode(3).unwrap()).unwrap();
        let w = g.mode(4).unwrap();
        assert!(close(v.values(), w.values(), 1e-12));
    }

    #[test]
    fn psdo_size_limit() {
        let g = grid(1024);
        let u = g.mode(0).unwrap();
        let r = apply_psdo(&g, &ParamSymbol::one(1), 1.0, &u);
        assert!(matches!(r, Err(Error::Resource(_))));
    }
}
