//! Characteristic roots and principal symbols of the boundary operators,
//! plus sampled certification of symbol-class membership.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{metric_matrix, BoundaryChart};

/// A_nn and β = Σ_k A_nk ξ_k at (x′, ξ′).
fn metric_terms(chart: &BoundaryChart, xp: &[f64], xip: &[f64]) -> Result<(f64, f64, f64)> {
    if xip.len() != chart.dim() {
        return Err(Error::Domain(format!(
            "covector has dimension {}, chart has {}",
            xip.len(),
            chart.dim()
        )));
    }
    let a = metric_matrix(chart, xp)?;
    let n = a.n;
    let beta: f64 = xip.iter().enumerate().map(|(k, x)| a.get(n - 1, k) * x).sum();
    let xi2: f64 = xip.iter().map(|v| v * v).sum();
    Ok((a.a_nn(), beta, xi2))
}

fn roots(a_nn: f64, beta: f64, r2: f64) -> (Complex64, Complex64) {
    let s = (a_nn * r2 - beta * beta).max(0.0).sqrt();
    (
        Complex64::new(-s, -beta) / a_nn,
        Complex64::new(s, -beta) / a_nn,
    )
}

/// (z₋, z₊), roots of p(z) = A_nn z² + 2iβ z − |ξ′|².
pub fn roots_z(chart: &BoundaryChart, xp: &[f64], xip: &[f64]) -> Result<(Complex64, Complex64)> {
    let (a_nn, beta, xi2) = metric_terms(chart, xp, xip)?;
    if xi2 == 0.0 {
        return Err(Error::DegenerateCovector("xi' = 0".into()));
    }
    Ok(roots(a_nn, beta, xi2))
}

/// (ω₋, ω₊), roots of q(ω) = A_nn ω² + 2iβ ω − (|ξ′|² + λ).
pub fn roots_omega(
    chart: &BoundaryChart,
    xp: &[f64],
    xip: &[f64],
    lambda: f64,
) -> Result<(Complex64, Complex64)> {
    let (a_nn, beta, xi2) = metric_terms(chart, xp, xip)?;
    if lambda < 0.0 {
        return Err(Error::Domain(format!("lambda = {lambda} < 0")));
    }
    if xi2 == 0.0 && lambda == 0.0 {
        return Err(Error::DegenerateCovector("xi' = 0 and lambda = 0".into()));
    }
    Ok(roots(a_nn, beta, xi2 + lambda))
}

/// q(x′, ξ′, ω, λ); with λ = 0 this is p.
pub fn char_poly(chart: &BoundaryChart, xp: &[f64], xip: &[f64], w: Complex64, lambda: f64) -> Result<Complex64> {
    let (a_nn, beta, xi2) = metric_terms(chart, xp, xip)?;
    Ok(a_nn * w * w + Complex64::new(0.0, 2.0 * beta) * w - (xi2 + lambda))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 1.0) {
        return Err(Error::Domain(format!("principal symbols need lambda >= 1, got {lambda}")));
    }
    Ok(())
}

/// τ = z₊, extended by 0 at ξ′ = 0.
pub fn tau(chart: &BoundaryChart, xp: &[f64], xip: &[f64]) -> Result<Complex64> {
    if xip.iter().all(|&v| v == 0.0) {
        chart.grad_chi(xp)?;
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(roots_z(chart, xp, xip)?.1)
}

/// η = ω₋.
pub fn eta(chart: &BoundaryChart, xp: &[f64], xip: &[f64], lambda: f64) -> Result<Complex64> {
    Ok(roots_omega(chart, xp, xip, lambda)?.0)
}

pub fn symbol_n(chart: &BoundaryChart, xp: &[f64], xip: &[f64], lambda: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    Ok(eta(chart, xp, xip, lambda)?.inv())
}

pub fn symbol_d(chart: &BoundaryChart, xp: &[f64], xip: &[f64], lambda: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    let e = eta(chart, xp, xip, lambda)?;
    let t = tau(chart, xp, xip)?;
    // η − τ is real: both roots share the imaginary part −β/A_nn
    Ok(Complex64::new(e.re - t.re, 0.0) / e)
}

pub fn symbol_w(chart: &BoundaryChart, xp: &[f64], xip: &[f64], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let e = eta(chart, xp, xip, lambda)?;
    let t = tau(chart, xp, xip)?;
    Ok(1.0 / (t.re - e.re))
}

/// The same symbol written through the tangential part ν̂′ of the unit
/// normal: √A_nn / (√(|ξ′|² − (ν̂′·ξ′)²) + √(|ξ′|² + λ − (ν̂′·ξ′)²)).
pub fn symbol_w_normal_form(chart: &BoundaryChart, xp: &[f64], xip: &[f64], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let g = chart.grad_chi(xp)?;
    let a_nn = 1.0 + g.iter().map(|v| v * v).sum::<f64>();
    let nu_xi: f64 = g.iter().zip(xip).map(|(gi, x)| -gi * x).sum::<f64>() / a_nn.sqrt();
    let xi2: f64 = xip.iter().map(|v| v * v).sum();
    let p = nu_xi * nu_xi;
    Ok(a_nn.sqrt() / ((xi2 - p).max(0.0).sqrt() + (xi2 + lambda - p).sqrt()))
}

/// S^m_k (no parameter, weight 1 + |ξ|) or P^m_k (weight |ξ| + √λ).
/// `k = None` means all ξ-derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SymbolClass {
    S { m: f64, k: Option<u32> },
    P { m: f64, k: Option<u32> },
}

impl SymbolClass {
    pub fn order(&self) -> f64 {
        match *self {
            SymbolClass::S { m, .. } | SymbolClass::P { m, .. } => m,
        }
    }

    pub fn k(&self) -> Option<u32> {
        match *self {
            SymbolClass::S { k, .. } | SymbolClass::P { k, .. } => k,
        }
    }

    pub fn is_parameter_dependent(&self) -> bool {
        matches!(self, SymbolClass::P { .. })
    }
}

pub type SymbolFn = Arc<dyn Fn(&[f64], &[f64], f64) -> Result<Complex64> + Send + Sync>;

#[derive(Clone)]
pub struct ParamSymbol {
    eval: SymbolFn,
    pub dim: usize,
    pub class: SymbolClass,
    pub x_support_radius: f64,
    unit: bool,
}

impl fmt::Debug for ParamSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamSymbol")
            .field("dim", &self.dim)
            .field("class", &self.class)
            .field("x_support_radius", &self.x_support_radius)
            .finish_non_exhaustive()
    }
}

impl ParamSymbol {
    pub fn new(dim: usize, class: SymbolClass, x_support_radius: f64, eval: SymbolFn) -> Self {
        Self {
            eval,
            dim,
            class,
            x_support_radius,
            unit: false,
        }
    }

    pub fn one(dim: usize) -> Self {
        Self {
            eval: Arc::new(|_, _, _| Ok(Complex64::new(1.0, 0.0))),
            dim,
            class: SymbolClass::S { m: 0.0, k: None },
            x_support_radius: 0.0,
            unit: true,
        }
    }

    pub fn order(&self) -> f64 {
        self.class.order()
    }

    pub fn eval(&self, xp: &[f64], xip: &[f64], lambda: f64) -> Result<Complex64> {
        (self.eval)(xp, xip, lambda)
    }

    /// Restates the declared class, e.g. to probe a wrong order.
    pub fn with_class(mut self, class: SymbolClass) -> Self {
        self.class = class;
        self.unit = false;
        self
    }

    pub fn tau(chart: &BoundaryChart) -> Self {
        let c = chart.clone();
        Self::new(
            chart.dim(),
            SymbolClass::S { m: 1.0, k: None },
            chart.support_radius(),
            Arc::new(move |x, xi, _| tau(&c, x, xi)),
        )
    }

    pub fn eta(chart: &BoundaryChart) -> Self {
        let c = chart.clone();
        Self::new(
            chart.dim(),
            SymbolClass::P { m: 1.0, k: None },
            chart.support_radius(),
            Arc::new(move |x, xi, l| eta(&c, x, xi, l)),
        )
    }

    pub fn n_symbol(chart: &BoundaryChart) -> Self {
        let c = chart.clone();
        Self::new(
            chart.dim(),
            SymbolClass::P { m: -1.0, k: None },
            chart.support_radius(),
            Arc::new(move |x, xi, l| symbol_n(&c, x, xi, l)),
        )
    }

    pub fn d_symbol(chart: &BoundaryChart) -> Self {
        let c = chart.clone();
        Self::new(
            chart.dim(),
            SymbolClass::P { m: 0.0, k: Some(1) },
            chart.support_radius(),
            Arc::new(move |x, xi, l| symbol_d(&c, x, xi, l)),
        )
    }

    pub fn w_symbol(chart: &BoundaryChart) -> Self {
        let c = chart.clone();
        Self::new(
            chart.dim(),
            SymbolClass::P { m: -1.0, k: None },
            chart.support_radius(),
            Arc::new(move |x, xi, l| symbol_w(&c, x, xi, l).map(|w| Complex64::new(w, 0.0))),
        )
    }
}

/// Class of a product. Mixed products follow the rule that `a ∈ S^{m₁}`,
/// `b ∈ P^{m₂}` gives `P^{m₁+m₂}_{[m₁]}` when `m₁ ≥ 0` and `S^{m₁+m₂}`
/// when `m₂ ≤ 0`; the first case wins when both apply. An `a` of negative
/// order is also in S⁰, which covers the remaining case.
pub fn product_class(a: SymbolClass, b: SymbolClass) -> SymbolClass {
    use SymbolClass::{P, S};
    let min_k = |x: Option<u32>, y: Option<u32>| match (x, y) {
        (Some(p), Some(q)) => Some(p.min(q)),
        (p, None) => p,
        (None, q) => q,
    };
    match (a, b) {
        (S { m: m1, k: k1 }, S { m: m2, k: k2 }) => S { m: m1 + m2, k: min_k(k1, k2) },
        (P { m: m1, k: k1 }, P { m: m2, k: k2 }) => P { m: m1 + m2, k: min_k(k1, k2) },
        (P { .. }, S { .. }) => product_class(b, a),
        (S { m: m1, k: k1 }, P { m: m2, k: k2 }) => {
            if m1 >= 0.0 {
                let k = min_k(Some(m1.floor() as u32), min_k(k1, k2));
                P { m: m1 + m2, k }
            } else if m2 <= 0.0 {
                S { m: m1 + m2, k: min_k(k1, k2) }
            } else {
                P { m: m2, k: Some(0) }
            }
        }
    }
}

pub fn product_symbol(a: &ParamSymbol, b: &ParamSymbol) -> Result<ParamSymbol> {
    if a.dim != b.dim {
        return Err(Error::Contract(format!(
            "symbol dimensions differ: {} vs {}",
            a.dim, b.dim
        )));
    }
    if a.unit {
        return Ok(b.clone());
    }
    if b.unit {
        return Ok(a.clone());
    }
    let (fa, fb) = (a.eval.clone(), b.eval.clone());
    Ok(ParamSymbol::new(
        a.dim,
        product_class(a.class, b.class),
        a.x_support_radius.max(b.x_support_radius),
        Arc::new(move |x, xi, l| Ok(fa(x, xi, l)? * fb(x, xi, l)?)),
    ))
}

/// Sample ranges for the membership estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MembershipSamples {
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_count: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub x_count: usize,
}

impl Default for MembershipSamples {
    fn default() -> Self {
        Self {
            xi_min: 1.0,
            xi_max: 1e3,
            xi_count: 13,
            lambda_min: 1.0,
            lambda_max: 1e6,
            lambda_count: 13,
            x_count: 3,
        }
    }
}

impl MembershipSamples {
    /// Denser sampling reaching a decade further in |ξ′| and a factor 100 in λ.
    pub fn refined(&self) -> Self {
        Self {
            xi_max: self.xi_max * 10.0,
            xi_count: 2 * self.xi_count + 1,
            lambda_max: self.lambda_max * 100.0,
            lambda_count: 2 * self.lambda_count + 1,
            x_count: 2 * self.x_count + 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeConstant {
    pub alpha: u32,
    pub beta: u32,
    pub base_sup: f64,
    pub refined_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub declared: SymbolClass,
    pub k: u32,
    pub constants: Vec<DerivativeConstant>,
    /// Pass requires finite constants with `refined_sup <= growth_limit * base_sup`.
    pub growth_limit: f64,
    /// Stencils whose differences sat at rounding level.
    pub fd_warnings: usize,
    pub pass: bool,
}

pub const MEMBERSHIP_GROWTH_LIMIT: f64 = 2.0;
const MAX_BETA: u32 = 2;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central difference of order `a` in ξ and `b` in x (one tangential
/// dimension), using the `(a+1)(b+1)` point tensor stencil.
fn mixed_difference(
    s: &ParamSymbol,
    x: f64,
    xi: f64,
    lambda: f64,
    a: u32,
    b: u32,
    hx: f64,
    hxi: f64,
) -> Result<(f64, bool)> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0f64;
    for i in 0..=a {
        for j in 0..=b {
            let c = binom(a, i) * binom(b, j) * if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let xi_k = xi + (a as f64 / 2.0 - i as f64) * hxi;
            let x_k = x + (b as f64 / 2.0 - j as f64) * hx;
            let v = s.eval(&[x_k], &[xi_k], lambda)?;
            acc += c * v;
            scale = scale.max(v.norm());
        }
    }
    let d = acc.norm() / (hxi.powi(a as i32) * hx.powi(b as i32));
    // flag when the combination is within a few hundred ulps of the inputs
    let noisy = (a + b) > 0 && acc.norm() != 0.0 && acc.norm() < 256.0 * f64::EPSILON * scale;
    Ok((d, noisy))
}

fn sup_ratios(s: &ParamSymbol, k: u32, samples: &MembershipSamples, out: &mut [f64], warnings: &mut usize) -> Result<()> {
    let m = s.order();
    let p = s.class.is_parameter_dependent();
    let xis = log_grid(samples.xi_min, samples.xi_max, samples.xi_count);
    let lambdas = if p {
        log_grid(samples.lambda_min, samples.lambda_max, samples.lambda_count)
    } else {
        vec![samples.lambda_min]
    };
    let xr = if s.x_support_radius.is_finite() && s.x_support_radius > 0.0 {
        0.5 * s.x_support_radius
    } else {
        0.5
    };
    let nx = samples.x_count.max(1);
    let xs: Vec<f64> = (0..nx)
        .map(|i| if nx == 1 { 0.0 } else { -xr + 2.0 * xr * i as f64 / (nx - 1) as f64 })
        .collect();
    let hx = 1e-2 * xr;
    for &x in &xs {
        for &xi_abs in &xis {
            for sign in [-1.0, 1.0] {
                let xi = sign * xi_abs;
                for &l in &lambdas {
                    let weight = if p { xi_abs + l.sqrt() } else { 1.0 + xi_abs };
                    let hxi = 1e-4 * weight;
                    for a in 0..=k {
                        for b in 0..=MAX_BETA {
                            let (d, noisy) = mixed_difference(s, x, xi, l, a, b, hx, hxi)?;
                            if noisy {
                                *warnings += 1;
                            }
                            let r = d / weight.powf(m - a as f64);
                            let slot = &mut out[(a * (MAX_BETA + 1) + b) as usize];
                            if !r.is_finite() {
                                *slot = f64::INFINITY;
                            } else {
                                *slot = slot.max(r);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Sampled check of `|∂ᵝ_x ∂ᵅ_ξ b| ≤ C (w)^{m−|α|}` for `|α| ≤ k`,
/// `|β| ≤ 2`, where `w = |ξ| + √λ` (or `1 + |ξ|` for S classes). The
/// ξ-step is `1e-4 · w`. Only one tangential dimension is supported.
pub fn class_membership_estimate(symbol: &ParamSymbol, k: u32, samples: &MembershipSamples) -> Result<MembershipReport> {
    if symbol.dim != 1 {
        return Err(Error::Contract(format!(
            "class membership is sampled for one tangential dimension, got {}",
            symbol.dim
        )));
    }
    if !(samples.xi_min > 0.0 && samples.lambda_min >= 1.0) {
        return Err(Error::Contract("samples must avoid xi' = 0 and lambda < 1".into()));
    }
    let slots = ((k + 1) * (MAX_BETA + 1)) as usize;
    let mut base = vec![0.0; slots];
    let mut refined = vec![0.0; slots];
    let mut warnings = 0;
    sup_ratios(symbol, k, samples, &mut base, &mut warnings)?;
    sup_ratios(symbol, k, &samples.refined(), &mut refined, &mut warnings)?;
    let mut constants = Vec::with_capacity(slots);
    let mut pass = true;
    for a in 0..=k {
        for b in 0..=MAX_BETA {
            let i = (a * (MAX_BETA + 1) + b) as usize;
            let (bs, rs) = (base[i], refined[i]);
            // constants at rounding level count as zero
            let floor = 1e-9 * base[0].max(1e-300);
            let ok = bs.is_finite() && rs.is_finite() && (rs <= MEMBERSHIP_GROWTH_LIMIT * bs || rs <= floor);
            pass &= ok;
            constants.push(DerivativeConstant {
                alpha: a,
                beta: b,
                base_sup: bs,
                refined_sup: rs,
            });
        }
    }
    Ok(MembershipReport {
        declared: symbol.class,
        k,
        constants,
        growth_limit: MEMBERSHIP_GROWTH_LIMIT,
        fd_warnings: warnings,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn flat_roots() {
        let ch = BoundaryChart::flat(1);
        let (zm, zp) = roots_z(&ch, &[0.2], &[3.0]).unwrap();
        assert_eq!((zm, zp), (c(-3.0, 0.0), c(3.0, 0.0)));
        let (wm, wp) = roots_omega(&ch, &[0.2], &[3.0], 16.0).unwrap();
        assert_eq!((wm, wp), (c(-5.0, 0.0), c(5.0, 0.0)));
    }

    #[test]
    fn sloped_roots() {
        let ch = BoundaryChart::linear(vec![0.5]);
        let (zm, zp) = roots_z(&ch, &[0.0], &[1.0]).unwrap();
        assert!((zp - c(1.0, 0.5) / 1.25).norm() < 1e-15);
        assert!((zm - c(-1.0, 0.5) / 1.25).norm() < 1e-15);
        for z in [zm, zp] {
            assert!(char_poly(&ch, &[0.0], &[1.0], z, 0.0).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn degenerate_covector() {
        let ch = BoundaryChart::flat(1);
        assert!(matches!(roots_z(&ch, &[0.0], &[0.0]), Err(Error::DegenerateCovector(_))));
        assert!(matches!(
            roots_omega(&ch, &[0.0], &[0.0], 0.0),
            Err(Error::DegenerateCovector(_))
        ));
        assert!(roots_omega(&ch, &[0.0], &[0.0], 1.0).is_ok());
    }

    #[test]
    fn flat_principal_symbols() {
        let ch = BoundaryChart::flat(1);
        assert!((symbol_n(&ch, &[0.0], &[0.0], 100.0).unwrap() - c(-0.1, 0.0)).norm() < 1e-15);
        let (xi, l) = (3.0, 16.0);
        assert!((symbol_n(&ch, &[0.0], &[xi], l).unwrap() - c(-0.2, 0.0)).norm() < 1e-15);
        assert!((symbol_d(&ch, &[0.0], &[xi], l).unwrap() - c(1.6, 0.0)).norm() < 1e-15);
        assert!((symbol_d(&ch, &[0.0], &[0.0], l).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((symbol_w(&ch, &[0.0], &[xi], l).unwrap() - 0.125).abs() < 1e-15);
        assert!((symbol_w(&ch, &[0.0], &[0.0], l).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lambda_below_one_rejected() {
        let ch = BoundaryChart::flat(1);
        assert!(symbol_n(&ch, &[0.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn product_tags() {
        let ch = BoundaryChart::flat(1);
        let p = product_symbol(&ParamSymbol::tau(&ch), &ParamSymbol::n_symbol(&ch)).unwrap();
        assert_eq!(p.class, SymbolClass::P { m: 0.0, k: Some(1) });
        let s1 = SymbolClass::S { m: 1.0, k: None };
        let pm2 = SymbolClass::P { m: -2.0, k: None };
        assert_eq!(product_class(s1, pm2), SymbolClass::P { m: -1.0, k: Some(1) });
        let b = ParamSymbol::n_symbol(&ch);
        let q = product_symbol(&ParamSymbol::one(1), &b).unwrap();
        assert_eq!(q.class, b.class);
        assert_eq!(q.eval(&[0.0], &[2.0], 5.0).unwrap(), b.eval(&[0.0], &[2.0], 5.0).unwrap());
    }

    #[test]
    fn membership_of_flat_symbols() {
        let ch = BoundaryChart::flat(1);
        let s = MembershipSamples::default();
        let r = class_membership_estimate(&ParamSymbol::n_symbol(&ch), 2, &s).unwrap();
        assert!(r.pass, "{r:?}");
        let r = class_membership_estimate(&ParamSymbol::d_symbol(&ch), 1, &s).unwrap();
        assert!(r.pass, "{r:?}");
        let wrong = ParamSymbol::eta(&ch).with_class(SymbolClass::P { m: 0.0, k: None });
        let r = class_membership_estimate(&wrong, 1, &s).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn membership_on_curved_chart() {
        let ch = BoundaryChart::trigonometric(vec![(0.3, vec![2.0], 0.4)], 0.5).unwrap();
        let s = MembershipSamples::default();
        let r = class_membership_estimate(&ParamSymbol::n_symbol(&ch), 2, &s).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
