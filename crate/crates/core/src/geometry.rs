//! Domains, boundary charts and the metric data derived from them.
//!
//! A chart describes Γ₁ near a base point as the graph `x_n = χ(x′)` in a
//! rotated frame whose last axis points into the inclusion Ω₁.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain1D {
    pub outer_length: f64,
    pub inclusion_left: f64,
    pub inclusion_right: f64,
}

impl Domain1D {
    pub fn new(outer_length: f64, inclusion_left: f64, inclusion_right: f64) -> Result<Self> {
        if !(0.0 < inclusion_left && inclusion_left < inclusion_right && inclusion_right < outer_length)
        {
            return Err(Error::Domain(format!(
                "need 0 < a1 < a2 < L, got a1 = {inclusion_left}, a2 = {inclusion_right}, L = {outer_length}"
            )));
        }
        Ok(Self {
            outer_length,
            inclusion_left,
            inclusion_right,
        })
    }

    pub fn inclusion_length(&self) -> f64 {
        self.inclusion_right - self.inclusion_left
    }
}

impl Default for Domain1D {
    fn default() -> Self {
        Self {
            outer_length: 1.0,
            inclusion_left: 0.25,
            inclusion_right: 0.5,
        }
    }
}

/// Star-shaped inclusion `ρ(θ) = R (1 + ε cos(mθ))` about `center`.
/// `ε = 0` is the disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inclusion {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
    pub mode: u32,
}

impl Inclusion {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Self {
            center,
            radius,
            amplitude: 0.0,
            mode: 0,
        }
    }

    pub fn perturbed(center: [f64; 2], radius: f64, amplitude: f64, mode: u32) -> Self {
        Self {
            center,
            radius,
            amplitude,
            mode,
        }
    }

    pub fn is_disk(&self) -> bool {
        self.amplitude == 0.0 || self.mode == 0
    }

    pub fn rho(&self, theta: f64) -> f64 {
        self.radius * (1.0 + self.amplitude * (self.mode as f64 * theta).cos())
    }

    pub fn drho(&self, theta: f64) -> f64 {
        let m = self.mode as f64;
        -self.radius * self.amplitude * m * (m * theta).sin()
    }

    pub fn max_radius(&self) -> f64 {
        self.radius * (1.0 + self.amplitude.abs())
    }

    pub fn min_radius(&self) -> f64 {
        self.radius * (1.0 - self.amplitude.abs())
    }

    pub fn point(&self, theta: f64) -> [f64; 2] {
        let r = self.rho(theta);
        [self.center[0] + r * theta.cos(), self.center[1] + r * theta.sin()]
    }

    /// dX/dθ, counterclockwise.
    pub fn tangent(&self, theta: f64) -> [f64; 2] {
        let (r, dr) = (self.rho(theta), self.drho(theta));
        let (c, s) = (theta.cos(), theta.sin());
        [dr * c - r * s, dr * s + r * c]
    }

    pub fn speed(&self, theta: f64) -> f64 {
        let t = self.tangent(theta);
        t[0].hypot(t[1])
    }

    /// Whether `p` lies in the open inclusion.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        let r = dx.hypot(dy);
        r < self.rho(dy.atan2(dx))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterBoundary {
    Rectangle { lx: f64, ly: f64 },
    /// Disk concentric with the inclusion.
    Disk { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain2D {
    pub outer: OuterBoundary,
    pub inclusion: Inclusion,
}

impl Domain2D {
    pub fn new(outer: OuterBoundary, inclusion: Inclusion) -> Result<Self> {
        let inc = &inclusion;
        if !(inc.radius > 0.0) || inc.amplitude.abs() >= 1.0 {
            return Err(Error::Domain(format!(
                "radius function must stay positive (R = {}, eps = {})",
                inc.radius, inc.amplitude
            )));
        }
        let rmax = inc.max_radius();
        let inside = match outer {
            OuterBoundary::Rectangle { lx, ly } => {
                let [cx, cy] = inc.center;
                cx - rmax > 0.0 && cx + rmax < lx && cy - rmax > 0.0 && cy + rmax < ly
            }
            OuterBoundary::Disk { radius } => rmax < radius,
        };
        if !inside {
            return Err(Error::Domain(
                "inclusion closure is not strictly inside the outer boundary".into(),
            ));
        }
        Ok(Self { outer, inclusion })
    }

    pub fn unit_disk_in_polar() -> Self {
        Self {
            outer: OuterBoundary::Disk { radius: 1.5 },
            inclusion: Inclusion::disk([0.0, 0.0], 1.0),
        }
    }
}

pub type ChiFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Graph description `x_n = χ(x′)` of Γ₁ over the ball `|x′| < δ`.
#[derive(Clone)]
pub struct BoundaryChart {
    dim: usize,
    chi: ChiFn,
    grad_chi: GradFn,
    support_radius: f64,
}

impl fmt::Debug for BoundaryChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryChart")
            .field("dim", &self.dim)
            .field("support_radius", &self.support_radius)
            .finish_non_exhaustive()
    }
}

/// Tolerance of the finite-difference cross-check run at construction.
const FD_CHECK_TOL: f64 = 1e-5;

impl BoundaryChart {
    /// `dim` is the tangential dimension n − 1. The gradient is checked
    /// against central differences of `chi` on a few interior points.
    pub fn new(dim: usize, chi: ChiFn, grad_chi: GradFn, support_radius: f64) -> Result<Self> {
        if dim == 0 || !(support_radius > 0.0) {
            return Err(Error::Domain(format!(
                "chart needs dim >= 1 and positive support (dim = {dim}, delta = {support_radius})"
            )));
        }
        let chart = Self {
            dim,
            chi,
            grad_chi,
            support_radius,
        };
        chart.check_gradient()?;
        Ok(chart)
    }

    pub fn flat(dim: usize) -> Self {
        Self {
            dim,
            chi: Arc::new(|_| 0.0),
            grad_chi: Arc::new(move |_| vec![0.0; dim]),
            support_radius: f64::INFINITY,
        }
    }

    /// χ(x′) = c · x′.
    pub fn linear(c: Vec<f64>) -> Self {
        let dim = c.len();
        let c2 = c.clone();
        Self {
            dim,
            chi: Arc::new(move |x: &[f64]| x.iter().zip(&c).map(|(a, b)| a * b).sum()),
            grad_chi: Arc::new(move |_| c2.clone()),
            support_radius: f64::INFINITY,
        }
    }

    /// χ(x′) = Σ_k a_k sin(b_k · x′ + φ_k), a smooth test family.
    pub fn trigonometric(terms: Vec<(f64, Vec<f64>, f64)>, support_radius: f64) -> Result<Self> {
        let dim = terms.first().map(|t| t.1.len()).unwrap_or(1);
        let t1 = Arc::new(terms);
        let t2 = t1.clone();
        let dot = |b: &[f64], x: &[f64]| -> f64 { b.iter().zip(x).map(|(p, q)| p * q).sum() };
        Self::new(
            dim,
            Arc::new(move |x: &[f64]| t1.iter().map(|(a, b, p)| a * (dot(b, x) + p).sin()).sum()),
            Arc::new(move |x: &[f64]| {
                let mut g = vec![0.0; dim];
                for (a, b, p) in t2.iter() {
                    let c = a * (dot(b, x) + p).cos();
                    for (gi, bi) in g.iter_mut().zip(b) {
                        *gi += c * bi;
                    }
                }
                g
            }),
            support_radius,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    fn check_range(&self, xp: &[f64]) -> Result<()> {
        if xp.len() != self.dim {
            return Err(Error::Domain(format!(
                "point has dimension {}, chart has {}",
                xp.len(),
                self.dim
            )));
        }
        let r = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > self.support_radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "|x'| = {r} outside chart radius {}",
                self.support_radius
            )));
        }
        Ok(())
    }

    pub fn chi(&self, xp: &[f64]) -> Result<f64> {
        self.check_range(xp)?;
        Ok((self.chi)(xp))
    }

    pub fn grad_chi(&self, xp: &[f64]) -> Result<Vec<f64>> {
        self.check_range(xp)?;
        let g = (self.grad_chi)(xp);
        if g.len() != self.dim || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("chart gradient is malformed".into()));
        }
        Ok(g)
    }

    fn check_gradient(&self) -> Result<()> {
        let delta = if self.support_radius.is_finite() {
            self.support_radius
        } else {
            1.0
        };
        let h = 1e-6 * delta.max(1e-3);
        for k in 0..7 {
            // deterministic points spread over the inner half of the ball
            let xp: Vec<f64> = (0..self.dim)
                .map(|d| 0.5 * delta * ((k * (d + 3)) as f64 * 0.7 + 0.3 * d as f64).sin())
                .map(|v| v / (self.dim as f64).sqrt())
                .collect();
            let g = (self.grad_chi)(&xp);
            if g.len() != self.dim {
                return Err(Error::Domain("gradient has the wrong dimension".into()));
            }
            for d in 0..self.dim {
                let mut p = xp.clone();
                let mut m = xp.clone();
                p[d] += h;
                m[d] -= h;
                let fd = ((self.chi)(&p) - (self.chi)(&m)) / (2.0 * h);
                if (fd - g[d]).abs() > FD_CHECK_TOL * (1.0 + g[d].abs()) {
                    return Err(Error::Domain(format!(
                        "chart gradient disagrees with finite differences at {xp:?}: {} vs {fd}",
                        g[d]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Row-major n×n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl Metric {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn a_nn(&self) -> f64 {
        self.get(self.n - 1, self.n - 1)
    }

    /// Determinant via Gaussian elimination with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.entries.clone();
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
                .unwrap();
            if a[p * n + c] == 0.0 {
                return 0.0;
            }
            if p != c {
                for k in 0..n {
                    a.swap(p * n + k, c * n + k);
                }
                det = -det;
            }
            det *= a[c * n + c];
            for i in c + 1..n {
                let f = a[i * n + c] / a[c * n + c];
                for k in c..n {
                    a[i * n + k] -= f * a[c * n + k];
                }
            }
        }
        det
    }

    /// Attempts a Cholesky factorization; returns the smallest pivot.
    pub fn min_cholesky_pivot(&self) -> f64 {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    min_pivot = min_pivot.min(s);
                    if s <= 0.0 {
                        return s;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        min_pivot
    }
}

pub fn metric_matrix(chart: &BoundaryChart, xp: &[f64]) -> Result<Metric> {
    let g = chart.grad_chi(xp)?;
    let n = g.len() + 1;
    let mut e = vec![0.0; n * n];
    for i in 0..n - 1 {
        e[i * n + i] = 1.0;
        e[i * n + n - 1] = -g[i];
        e[(n - 1) * n + i] = -g[i];
    }
    e[n * n - 1] = 1.0 + g.iter().map(|v| v * v).sum::<f64>();
    Ok(Metric { n, entries: e })
}

pub fn unit_normal(chart: &BoundaryChart, xp: &[f64]) -> Result<Vec<f64>> {
    let g = chart.grad_chi(xp)?;
    let s = (1.0 + g.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let mut v: Vec<f64> = g.iter().map(|gi| -gi / s).collect();
    v.push(1.0 / s);
    Ok(v)
}

pub fn surface_density(chart: &BoundaryChart, xp: &[f64]) -> Result<f64> {
    let g = chart.grad_chi(xp)?;
    Ok((1.0 + g.iter().map(|v| v * v).sum::<f64>()).sqrt())
}

pub const LIPSCHITZ_SAMPLES: usize = 4096;

/// Sup of |∇χ| over axis-aligned graph charts: each boundary sample is
/// read as a graph over whichever coordinate axis gives the smaller slope.
pub fn lipschitz_constant(domain: &Domain2D) -> Result<f64> {
    lipschitz_constant_sampled(&domain.inclusion, LIPSCHITZ_SAMPLES)
}

pub fn lipschitz_constant_sampled(inclusion: &Inclusion, samples: usize) -> Result<f64> {
    if samples < 8 {
        return Err(Error::Numeric(format!("{samples} samples is too few")));
    }
    let mut l = 0.0f64;
    for k in 0..samples {
        let th = 2.0 * PI * k as f64 / samples as f64;
        let [tx, ty] = inclusion.tangent(th);
        let (ax, ay) = (tx.abs(), ty.abs());
        if ax == 0.0 && ay == 0.0 {
            return Err(Error::Numeric(format!("degenerate tangent at theta = {th}")));
        }
        l = l.max(ax.min(ay) / ax.max(ay));
    }
    if !l.is_finite() {
        return Err(Error::Numeric("non-finite Lipschitz estimate".into()));
    }
    Ok(l)
}

/// |ν̂′| for a graph with gradient `g`.
pub fn tangential_normal_length(g: &[f64]) -> f64 {
    let s2: f64 = g.iter().map(|v| v * v).sum();
    (s2 / (1.0 + s2)).sqrt()
}

#[derive(Debug, Clone)]
pub struct AtlasEntry {
    pub base_point: [f64; 2],
    pub theta: f64,
    pub chart: BoundaryChart,
    pub weight: f64,
}

/// Tangent-line chart of a star-shaped curve at angle `theta0`. The
/// graph axis is the inward normal, so χ ≥ 0 near the base for convex
/// pieces. The support is the largest tangential offset on each side
/// before the slope reaches one.
pub fn tangent_chart(inc: &Inclusion, theta0: f64) -> Result<BoundaryChart> {
    let p = inc.point(theta0);
    let t0 = inc.tangent(theta0);
    let sp = t0[0].hypot(t0[1]);
    if !(sp > 0.0) {
        return Err(Error::Domain("degenerate inclusion".into()));
    }
    let t = [t0[0] / sp, t0[1] / sp];
    let nin = [-t[1], t[0]];
    let frame = TangentFrame {
        inc: *inc,
        theta0,
        p,
        t,
        nin,
        speed: sp,
    };

    let step = 2.0 * PI / 4096.0;
    let mut delta = f64::INFINITY;
    for dir in [-1.0, 1.0] {
        let mut th = theta0;
        let mut last_ok = theta0;
        for _ in 0..4096 {
            th += dir * step;
            let d = inc.tangent(th);
            let along = d[0] * t[0] + d[1] * t[1];
            let across = d[0] * nin[0] + d[1] * nin[1];
            if along <= 0.0 || across.abs() > along {
                break;
            }
            last_ok = th;
        }
        // refine the crossing |across| = along by bisection
        let (mut lo, mut hi) = (last_ok, last_ok + dir * step);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let d = inc.tangent(mid);
            let along = d[0] * t[0] + d[1] * t[1];
            let across = d[0] * nin[0] + d[1] * nin[1];
            if along > 0.0 && across.abs() <= along {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = inc.point(lo);
        let s = ((q[0] - p[0]) * t[0] + (q[1] - p[1]) * t[1]).abs();
        delta = delta.min(s);
    }
    if !(delta > 0.0) {
        return Err(Error::Domain("chart support collapsed".into()));
    }
    let f1 = Arc::new(frame);
    let f2 = f1.clone();
    BoundaryChart::new(
        1,
        Arc::new(move |x: &[f64]| f1.chi(x[0])),
        Arc::new(move |x: &[f64]| vec![f2.slope(x[0])]),
        delta,
    )
}

#[derive(Debug, Clone, Copy)]
struct TangentFrame {
    inc: Inclusion,
    theta0: f64,
    p: [f64; 2],
    t: [f64; 2],
    nin: [f64; 2],
    speed: f64,
}

impl TangentFrame {
    /// Curve angle whose tangential offset from the base is `s`.
    fn theta_of(&self, s: f64) -> f64 {
        let mut th = self.theta0 + s / self.speed;
        for _ in 0..50 {
            let q = self.inc.point(th);
            let f = (q[0] - self.p[0]) * self.t[0] + (q[1] - self.p[1]) * self.t[1] - s;
            let d = self.inc.tangent(th);
            let fp = d[0] * self.t[0] + d[1] * self.t[1];
            let dt = f / fp;
            th -= dt;
            if dt.abs() < 1e-16 * (1.0 + th.abs()) {
                break;
            }
        }
        th
    }

    fn chi(&self, s: f64) -> f64 {
        let q = self.inc.point(self.theta_of(s));
        (q[0] - self.p[0]) * self.nin[0] + (q[1] - self.p[1]) * self.nin[1]
    }

    fn slope(&self, s: f64) -> f64 {
        let d = self.inc.tangent(self.theta_of(s));
        (d[0] * self.nin[0] + d[1] * self.nin[1]) / (d[0] * self.t[0] + d[1] * self.t[1])
    }
}

/// Tangent charts at equally spaced angles; the weights are the
/// trapezoid rule for arc length in θ, so with surface density 1 at each
/// base point they sum to the perimeter.
pub fn chart_atlas(domain: &Domain2D, n_charts: usize) -> Result<Vec<AtlasEntry>> {
    if n_charts < 4 {
        return Err(Error::Domain(format!("n_charts = {n_charts} < 4")));
    }
    let inc = &domain.inclusion;
    let dth = 2.0 * PI / n_charts as f64;
    (0..n_charts)
        .map(|k| {
            let th = k as f64 * dth;
            let w = inc.speed(th) * dth;
            if !(w > 0.0) {
                return Err(Error::Domain("degenerate inclusion".into()));
            }
            Ok(AtlasEntry {
                base_point: inc.point(th),
                theta: th,
                chart: tangent_chart(inc, th)?,
                weight: w,
            })
        })
        .collect()
}

pub fn atlas_perimeter(atlas: &[AtlasEntry]) -> Result<f64> {
    atlas
        .iter()
        .map(|e| Ok(e.weight * surface_density(&e.chart, &[0.0])?))
        .sum()
}

/// Arc length by adaptive Simpson quadrature, independent of the atlas.
pub fn arc_length(inc: &Inclusion, tol: f64) -> f64 {
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let f = |th: f64| inc.speed(th);
    // split into pieces so the first Simpson estimate cannot alias the mode
    let pieces = 8 * (inc.mode.max(1) as usize);
    let h = 2.0 * PI / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            rec(&f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol / pieces as f64, 40)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perturbed() -> Domain2D {
        Domain2D::new(
            OuterBoundary::Rectangle { lx: 4.0, ly: 4.0 },
            Inclusion::perturbed([2.0, 2.0], 1.0, 0.1, 3),
        )
        .unwrap()
    }

    #[test]
    fn flat_chart_metric_is_identity() {
        let c = BoundaryChart::flat(2);
        let a = metric_matrix(&c, &[0.3, -0.2]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(unit_normal(&c, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(surface_density(&c, &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn linear_chart_metric() {
        let c = BoundaryChart::linear(vec![0.5]);
        let a = metric_matrix(&c, &[0.1]).unwrap();
        assert_eq!(a.entries, vec![1.0, -0.5, -0.5, 1.25]);
        assert!((a.det() - 1.0).abs() < 1e-15);
        let nu = unit_normal(&c, &[0.0]).unwrap();
        let s = 1.25f64.sqrt();
        assert!((nu[0] + 0.5 / s).abs() < 1e-15 && (nu[1] - 1.0 / s).abs() < 1e-15);
        assert!((surface_density(&c, &[0.0]).unwrap() - s).abs() < 1e-15);
    }

    #[test]
    fn bad_gradient_is_caught() {
        let r = BoundaryChart::new(
            1,
            Arc::new(|x: &[f64]| x[0] * x[0]),
            Arc::new(|x: &[f64]| vec![x[0]]),
            1.0,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn out_of_range_is_domain_error() {
        let c = tangent_chart(&Inclusion::disk([0.0, 0.0], 1.0), 0.0).unwrap();
        assert!(metric_matrix(&c, &[0.9]).is_err());
        assert!(metric_matrix(&c, &[0.7]).is_ok());
    }

    #[test]
    fn disk_tangent_chart_matches_closed_form() {
        let r = 1.3;
        let c = tangent_chart(&Inclusion::disk([0.2, -0.1], r), 0.7).unwrap();
        assert!((c.support_radius() - r / 2f64.sqrt()).abs() < 1e-9);
        for s in [-0.8, -0.3, 0.0, 0.25, 0.9] {
            let want = r - (r * r - s * s).sqrt();
            assert!((c.chi(&[s]).unwrap() - want).abs() < 1e-13);
            let gw = s / (r * r - s * s).sqrt();
            assert!((c.grad_chi(&[s]).unwrap()[0] - gw).abs() < 1e-12);
        }
        assert_eq!(surface_density(&c, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn disk_lipschitz_is_one() {
        let d = Domain2D::new(
            OuterBoundary::Rectangle { lx: 3.0, ly: 3.0 },
            Inclusion::disk([1.5, 1.5], 1.0),
        )
        .unwrap();
        let l = lipschitz_constant(&d).unwrap();
        assert!((0.99..=1.01).contains(&l));
    }

    #[test]
    fn perturbed_disk_lipschitz_bounds_normal() {
        let d = perturbed();
        let l = lipschitz_constant(&d).unwrap();
        assert!(l > 0.5 && l < 2.0);
        let bound = l / (1.0 + l * l).sqrt();
        for k in 0..LIPSCHITZ_SAMPLES {
            let th = 2.0 * PI * k as f64 / LIPSCHITZ_SAMPLES as f64;
            let [tx, ty] = d.inclusion.tangent(th);
            let slope = tx.abs().min(ty.abs()) / tx.abs().max(ty.abs());
            assert!(tangential_normal_length(&[slope]) <= bound + 1e-15);
        }
    }

    #[test]
    fn atlas_perimeter_of_disk() {
        let d = Domain2D::new(
            OuterBoundary::Rectangle { lx: 3.0, ly: 3.0 },
            Inclusion::disk([1.5, 1.5], 0.8),
        )
        .unwrap();
        let atlas = chart_atlas(&d, 256).unwrap();
        assert!(atlas.iter().all(|e| e.weight > 0.0));
        assert!((atlas_perimeter(&atlas).unwrap() - 2.0 * PI * 0.8).abs() < 1e-6);
    }

    #[test]
    fn atlas_perimeter_converges_on_perturbed_disk() {
        let d = perturbed();
        let exact = arc_length(&d.inclusion, 1e-13);
        let err = |n| (atlas_perimeter(&chart_atlas(&d, n).unwrap()).unwrap() - exact).abs();
        let (e1, e2) = (err(4), err(8));
        assert!(e1 >= 4.0 * e2, "{e1} {e2}");
        assert!(err(256) < 1e-6);
    }

    #[test]
    fn too_few_charts() {
        assert!(chart_atlas(&perturbed(), 3).is_err());
    }

    #[test]
    fn inclusion_must_fit() {
        let r = Domain2D::new(
            OuterBoundary::Rectangle { lx: 1.0, ly: 1.0 },
            Inclusion::disk([0.5, 0.5], 0.5),
        );
        assert!(r.is_err());
    }
}
